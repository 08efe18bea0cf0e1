"""
Main CLI application entry point.

This module provides the main Typer application with the train, parse,
selftrain and eval commands.
"""

import json
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np
import typer
from rich.console import Console

from udpx.cli.common import (
    command_flags,
    read_lm_text,
    read_treebank,
    require,
    resolve_config,
    with_contextual_vectors,
)
from udpx.cli.error_handlers import handle_cli_error, handle_result
from udpx.core.logger import MetricsStream, get_logger
from udpx.domain.models.sentence import Treebank
from udpx.domain.services.evaluator import (
    bootstrap_significance,
    per_sentence_counts,
    right_arc_baseline,
    uas_las,
)
from udpx.domain.use_cases.parse_corpus_use_case import ParseCorpusUseCase
from udpx.domain.use_cases.self_train_use_case import SelfTrainUseCase
from udpx.domain.use_cases.train_parser_use_case import TrainParserUseCase
from udpx.modules.data.embeddings import read_embeddings

app = typer.Typer(
    name="udpx",
    help="Cross-lingual dependency parsing with language-model objectives and self-training",
    add_completion=False,
    rich_markup_mode="rich",
)

console = Console(stderr=True)
logger = get_logger("cli")


def version_callback(value: bool):
    """Show version information."""
    if value:
        try:
            from importlib.metadata import version

            current = version("udpx")
        except Exception:
            from udpx import __version__ as current
        console.print(f"udpx version {current}")
        raise typer.Exit()


@app.callback()
def main(
    version: bool = typer.Option(
        False,
        "--version",
        callback=version_callback,
        is_eager=True,
        help="Show version information",
    ),
):
    """
    udpx - graph-based dependency parser for cross-lingual transfer.
    """


@app.command()
def train(
    ctx: typer.Context,
    train_file: Path = typer.Option(..., "--train", help="Labeled training treebank (CoNLL-U)"),
    dev_file: Optional[Path] = typer.Option(None, "--dev", help="Source dev treebank (CoNLL-U)"),
    lm_text: List[Path] = typer.Option([], "--lm-text", help="Unlabeled text for LM objectives"),
    embeddings: Optional[Path] = typer.Option(None, "--embeddings", help="Pretrained word vectors"),
    contextual_vectors: Optional[Path] = typer.Option(
        None, "--contextual-vectors", help="Contextual vectors for train, dev and lm-text, in order"
    ),
    config_file: Optional[Path] = typer.Option(None, "--config", "-c", help="Configuration file"),
    seed: int = typer.Option(..., "--seed", help="Random seed"),
    out: Path = typer.Option(..., "--out", help="Model directory to write"),
):
    """
    Train a parser with the multi-task objective.
    """
    try:
        config = resolve_config(config_file, seed)
        labeled = list(read_treebank(train_file, "train", config))
        dev = list(read_treebank(dev_file, "dev", config)) if dev_file else []
        text = read_lm_text(lm_text, config)
        labeled, dev, text = with_contextual_vectors(contextual_vectors, config, labeled, dev, text)
        pretrained = read_embeddings(embeddings) if embeddings else None

        with MetricsStream(sys.stdout) as metrics:
            result = TrainParserUseCase(config, logger=logger).execute(
                Treebank(labeled, split="train"),
                out,
                seed=seed,
                dev=Treebank(dev, split="dev") if dev_file else None,
                lm_text=text,
                pretrained=pretrained,
                flags=command_flags(ctx),
                metrics=metrics,
            )
    except typer.Exit:
        raise
    except Exception as e:
        handle_cli_error(e, "train")
    handle_result(result, "Train")


@app.command()
def parse(
    ctx: typer.Context,
    model: List[Path] = typer.Option([], "--model", help="Model directory (repeat to ensemble)"),
    ensemble: List[Path] = typer.Option([], "--ensemble", help="Additional ensemble member"),
    input_file: Path = typer.Option(..., "--input", help="CoNLL-U or one-sentence-per-line text"),
    output: Path = typer.Option(..., "--output", help="CoNLL-U file to write"),
    contextual_vectors: Optional[Path] = typer.Option(
        None, "--contextual-vectors", help="Contextual vectors for the input sentences"
    ),
    config_file: Optional[Path] = typer.Option(None, "--config", "-c", help="Configuration file"),
):
    """
    Parse a corpus with one model or an ensemble.
    """
    members = list(model) + list(ensemble)
    require(members, "--model", ctx)
    try:
        config = resolve_config(config_file)
        result = ParseCorpusUseCase(config, logger=logger).execute(
            members,
            input_file,
            output,
            contextual_vectors=contextual_vectors,
            flags=command_flags(ctx),
        )
    except typer.Exit:
        raise
    except Exception as e:
        handle_cli_error(e, "parse")
    handle_result(result, "Parse")


@app.command()
def selftrain(
    ctx: typer.Context,
    source_train: Path = typer.Option(..., "--source-train", help="Source training treebank"),
    source_dev: Path = typer.Option(..., "--source-dev", help="Source dev treebank"),
    target_text: List[Path] = typer.Option([], "--target-text", help="Unlabeled target text"),
    target_train: Optional[Path] = typer.Option(
        None, "--target-train", help="Small labeled target treebank (few-shot)"
    ),
    embeddings: Optional[Path] = typer.Option(None, "--embeddings", help="Pretrained word vectors"),
    config_file: Optional[Path] = typer.Option(None, "--config", "-c", help="Configuration file"),
    seed: int = typer.Option(..., "--seed", help="Random seed"),
    jobs: Optional[int] = typer.Option(None, "--jobs", help="Students trained in parallel"),
    runs: int = typer.Option(1, "--runs", help="Independent self-training runs"),
    out: Path = typer.Option(..., "--out", help="Output directory"),
):
    """
    Ensemble-teacher self-training on unlabeled target text.
    """
    try:
        config = resolve_config(config_file, seed)
        if jobs is not None:
            config.selftrain.jobs = jobs
        source = read_treebank(source_train, "train", config)
        dev = read_treebank(source_dev, "dev", config)
        pool = read_lm_text(target_text, config)
        few_shot = read_treebank(target_train, "train", config) if target_train else None
        pretrained = read_embeddings(embeddings) if embeddings else None

        with MetricsStream(sys.stdout) as metrics:
            result = SelfTrainUseCase(config, metrics=metrics, logger=logger).execute(
                source,
                dev,
                pool,
                out,
                seed=seed,
                target_train=few_shot,
                pretrained=pretrained,
                runs=runs,
                flags=command_flags(ctx),
            )
        console.print(
            f"Final ensemble dev UAS {result.metadata['ensemble_dev_uas']:.4f}, "
            f"LAS {result.metadata['ensemble_dev_las']:.4f}"
        )
    except typer.Exit:
        raise
    except Exception as e:
        handle_cli_error(e, "selftrain")
    handle_result(result, "Self-train")


@app.command(name="eval")
def evaluate(
    ctx: typer.Context,
    gold: Path = typer.Option(..., "--gold", help="Gold treebank (CoNLL-U)"),
    pred: Optional[Path] = typer.Option(None, "--pred", help="Predicted treebank (CoNLL-U)"),
    exclude_punct: bool = typer.Option(False, "--exclude-punct", help="Skip punctuation tokens"),
    baseline: Optional[str] = typer.Option(None, "--baseline", help="Score a baseline: right-arc"),
    significance: Optional[Path] = typer.Option(
        None, "--significance", help="Second prediction file to test against --pred"
    ),
    seed: Optional[int] = typer.Option(None, "--seed", help="Random seed (bootstrap)"),
    report: Optional[Path] = typer.Option(None, "--report", help="Also write the JSON report here"),
    config_file: Optional[Path] = typer.Option(None, "--config", "-c", help="Configuration file"),
):
    """
    Attachment scores, baselines and bootstrap significance.
    """
    if baseline is not None and baseline != "right-arc":
        raise typer.BadParameter("only 'right-arc' is supported", param_hint="--baseline")
    if baseline is None:
        require(pred, "--pred", ctx)
    if significance is not None:
        require(pred, "--pred", ctx)
        require(seed, "--seed", ctx)
    try:
        config = resolve_config(config_file)
        gold_bank = read_treebank(gold, "test", config)
        output = {}
        if baseline is not None:
            baseline_bank = right_arc_baseline(gold_bank)
            output["baseline"] = uas_las(baseline_bank, gold_bank, exclude_punct).to_dict()
        if pred is not None:
            pred_bank = read_treebank(pred, "test", config)
            output.update(uas_las(pred_bank, gold_bank, exclude_punct).to_dict())
            if significance is not None:
                other = read_treebank(significance, "test", config)
                output["significance"] = bootstrap_significance(
                    per_sentence_counts(pred_bank, gold_bank, exclude_punct),
                    per_sentence_counts(other, gold_bank, exclude_punct),
                    np.random.default_rng(seed),
                ).to_dict()
        elif "baseline" in output:
            output.update(output["baseline"])
    except typer.Exit:
        raise
    except Exception as e:
        handle_cli_error(e, "eval")

    text = json.dumps(output, sort_keys=True)
    typer.echo(text)
    if report is not None:
        report.parent.mkdir(parents=True, exist_ok=True)
        report.write_text(text + "\n", encoding="utf-8")


def main_entry():
    """Entry point for setuptools console script."""
    app()


if __name__ == "__main__":
    main_entry()
