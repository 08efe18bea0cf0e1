"""
Shared plumbing for CLI commands: config resolution, input reading and flag echoing.
"""

from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import typer

try:  # typer >= 0.26 vendors click; its own exception classes are the ones it handles
    from typer._click import exceptions as click
except ImportError:  # older typer uses the standalone click package
    import click

from udpx.core.config import Config
from udpx.core.logger import setup_logging
from udpx.domain.models.sentence import Sentence, Treebank
from udpx.modules.data.conllu import read_conllu
from udpx.modules.data.corpus import read_unlabeled
from udpx.modules.data.embeddings import attach_contextual_vectors, read_contextual_vectors
from udpx.numkernel.value import set_default_dtype


def resolve_config(config_file: Optional[Path], seed: Optional[int] = None) -> Config:
    """Config from file (or environment over defaults), --seed applied, logging set up."""
    config = Config.load_from_file(config_file) if config_file else Config.load_from_env()
    if seed is not None:
        config.train.seed = seed
    setup_logging(verbose=config.verbose, log_file=config.log_file, level=config.log_level)
    set_default_dtype(config.dtype)
    return config


def command_flags(ctx: typer.Context) -> Dict[str, Any]:
    """The invoked command's parameters, paths as strings, for echoing into artifacts."""
    flags = {"command": ctx.info_name}
    for name, value in ctx.params.items():
        if isinstance(value, Path):
            value = str(value)
        elif isinstance(value, (list, tuple)):
            value = [str(item) if isinstance(item, Path) else item for item in value]
        flags[name] = value
    return flags


def require(value: Any, flag: str, ctx: typer.Context) -> None:
    """Usage error (exit 2) when a conditionally required flag is missing."""
    if value is None or value == [] or value == ():
        raise click.UsageError(f"Missing option '{flag}'.", ctx=ctx)


def read_treebank(path: Path, split: str, config: Config) -> Treebank:
    return read_conllu(path, split=split, punct_tags=config.data.punct_tags)


def read_lm_text(paths: Sequence[Path], config: Config) -> List[Sentence]:
    """Concatenated unlabeled corpora, filtered by min_words."""
    sentences: List[Sentence] = []
    for path in paths:
        sentences.extend(
            read_unlabeled(
                path,
                min_words=config.data.min_words,
                punct_tags=config.data.punct_tags,
                pos_tags=config.data.pos_tags,
            )
        )
    return sentences


def with_contextual_vectors(
    path: Optional[Path], config: Config, *groups: List[Sentence]
) -> Tuple[List[Sentence], ...]:
    """
    Attach vectors from one file to several sentence groups.

    The file holds one block per sentence for the groups in the order given.
    The encoder's contextual_dim is taken from the file when unset.
    """
    if path is None:
        return groups
    blocks = read_contextual_vectors(path)
    flat = [sentence for group in groups for sentence in group]
    attached = attach_contextual_vectors(flat, blocks, source=str(path))
    if blocks and config.encoder.contextual_dim is None:
        config.encoder.contextual_dim = int(blocks[0].shape[1])

    result, start = [], 0
    for group in groups:
        result.append(attached[start : start + len(group)])
        start += len(group)
    return tuple(result)
