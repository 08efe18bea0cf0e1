"""
Train parser use case.

Multi-task training of one parser: the dependency parsing loss on labeled
data, optionally a confidence-weighted loss on pseudo-labeled data, and the
word-ordering and masked-LM losses on raw text, all summed into one loss per
step over a single parameter store.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from udpx.core.base import ProcessingResult
from udpx.core.config import Config
from udpx.core.decorators import time_operation
from udpx.core.exceptions import TrainingError
from udpx.core.logger import MetricsStream, get_logger
from udpx.core.progress import track_progress
from udpx.domain.models.alphabets import Alphabets
from udpx.domain.models.distribution import ParseDistribution
from udpx.domain.models.reports import EpochRecord
from udpx.domain.models.sentence import Sentence, Treebank
from udpx.domain.services.evaluator import uas_las
from udpx.modules.data.batching import Batch, batches, index_batch
from udpx.modules.data.corpus import sentences_as_text
from udpx.modules.data.embeddings import init_word_table
from udpx.modules.data.vocab import build_alphabets
from udpx.modules.model.lm_heads import corrupt_batch, mask_sentence, shuffle_order
from udpx.modules.model.parse_head import parse_loss, soft_parse_loss
from udpx.modules.model.parser import FLAGS_FILE, HISTORY_FILE, Parser
from udpx.numkernel import ops
from udpx.numkernel.optim import OptimizerState, adam_step, decay_lr
from udpx.numkernel.value import Value

STREAMS = ("init", "batches", "dropout", "mlm", "wo", "pseudo")

Scalar = Union[float, Value]


def _scalar_value(part: Scalar) -> float:
    return float(part.data) if isinstance(part, Value) else float(part)


def combined_loss(
    parse: Scalar,
    wo: Scalar = 0.0,
    mlm: Scalar = 0.0,
    gamma_wo: float = 0.2,
    gamma_mlm: float = 0.15,
    pseudo: Scalar = 0.0,
    conf: float = 0.0,
) -> Scalar:
    """
    parse + conf * pseudo + gamma_wo * wo + gamma_mlm * mlm.

    Parts may be floats or scalar Values; the result is a Value when any
    part is one.

    Raises:
        TrainingError: a part is negative
    """
    named = {"parse": parse, "pseudo": pseudo, "wo": wo, "mlm": mlm}
    for name, part in named.items():
        if _scalar_value(part) < 0:
            raise TrainingError(f"{name} loss is negative ({_scalar_value(part)})")

    terms = [(parse, 1.0), (pseudo, conf), (wo, gamma_wo), (mlm, gamma_mlm)]
    if not any(isinstance(part, Value) for part, _ in terms):
        return float(parse) + conf * float(pseudo) + gamma_wo * float(wo) + gamma_mlm * float(mlm)

    total: Scalar = 0.0
    for part, weight in terms:
        if weight == 0.0:
            continue
        if isinstance(part, Value):
            total = ops.add(total, part if weight == 1.0 else ops.scale(part, weight))
        else:
            scaled = weight * float(part)
            total = ops.add(total, scaled) if isinstance(total, Value) else total + scaled
    return ops.as_value(total)


def select_index(scores: Sequence[float]) -> int:
    """Index of the highest score; ties go to the earliest."""
    if len(scores) == 0:
        raise TrainingError("no candidate models to select from")
    return int(np.argmax(np.asarray(scores, dtype=np.float64)))


def select_model(candidates: Sequence[Parser], dev: Treebank) -> int:
    """Candidate with the best source-dev UAS (earliest on ties)."""
    if len(candidates) == 0:
        raise TrainingError("no candidate models to select from")
    dev.ensure_headed("select_model")
    scores = [uas_las(candidate.parse(list(dev)), dev).uas for candidate in candidates]
    return select_index(scores)


@dataclass
class PseudoData:
    """Teacher-annotated target sentences and the weight of their loss."""

    treebank: Treebank
    conf: float
    distributions: Optional[List[ParseDistribution]] = None

    def __len__(self) -> int:
        return len(self.treebank)


@dataclass
class TrainResult:
    """Best parser of a run and its history."""

    parser: Parser
    history: List[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0
    best_dev_uas: Optional[float] = None
    best_dev_las: Optional[float] = None


def _rng_streams(seed: int) -> Dict[str, np.random.Generator]:
    children = np.random.SeedSequence(seed).spawn(len(STREAMS))
    return {name: np.random.default_rng(child) for name, child in zip(STREAMS, children)}


def _soft_targets(
    batch: Batch, distributions: Sequence[ParseDistribution]
) -> Tuple[np.ndarray, np.ndarray]:
    """Teacher arc and label distributions laid out like the batch."""
    n_labels = distributions[0].n_labels
    arc = np.zeros((batch.size, batch.width, batch.width))
    label = np.zeros((batch.size, batch.width, n_labels))
    for b, dist in enumerate(distributions):
        length = dist.length
        arc[b, 1 : length + 1, : length + 1] = dist.arc_probs
        heads = batch.heads[b, 1 : length + 1]
        label[b, 1 : length + 1] = dist.label_probs[np.arange(length), heads]
    return arc, label


class ParserTrainer:
    """
    One training run.

    Owns the parser, the optimizer state and independent RNG streams for
    initialization, batch order, dropout and each language-model objective.
    """

    def __init__(
        self,
        config: Config,
        alphabets: Alphabets,
        seed: int,
        pretrained: Optional[Tuple[List[str], np.ndarray]] = None,
        logger=None,
    ):
        self.config = config
        self.alphabets = alphabets
        self.seed = seed
        self.logger = logger or get_logger("ParserTrainer")
        self.rngs = _rng_streams(seed)

        word_table = None
        if pretrained is not None:
            word_table = init_word_table(
                alphabets, config.encoder.word_dim, self.rngs["init"], pretrained
            )
        self.parser = Parser(
            config, alphabets, seed=int(self.rngs["init"].integers(2**31)), word_table=word_table
        )
        self.state = OptimizerState.from_config(config.optimizer)
        self.parameters = list(self.parser.params)
        self.decaying = False

    # -- objective terms ------------------------------------------------------

    def _parse_term(
        self,
        sentences: Sequence[Sentence],
        distributions: Optional[Sequence[ParseDistribution]] = None,
    ) -> Value:
        batch = self.parser.index(sentences, with_gold=True)
        outputs, arc_scores = self.parser.forward_parse(
            batch, training=True, rng=self.rngs["dropout"]
        )
        label_scores = self.parser.head.score_labels(outputs, batch.heads)
        if distributions is not None:
            arc_targets, label_targets = _soft_targets(batch, distributions)
            return soft_parse_loss(arc_scores, label_scores, batch, arc_targets, label_targets)
        return parse_loss(arc_scores, label_scores, batch)

    def _mlm_term(self, sentences: Sequence[Sentence]) -> Value:
        alphabets = self.alphabets
        items = [
            mask_sentence(
                [alphabets.word_index(form) for form in sentence.forms],
                len(alphabets.words),
                self.rngs["mlm"],
                self.config.lm,
            )
            for sentence in sentences
        ]
        batch = index_batch(
            sentences, alphabets, with_root=False, min_char_width=self.parser.min_char_width
        )
        batch = corrupt_batch(batch, items, alphabets)
        H = self.parser.encoder.encode(batch, mode="mlm", training=True, rng=self.rngs["dropout"])
        return self.parser.lm.mlm_loss(H, items)

    def _wo_term(self, sentences: Sequence[Sentence]) -> Value:
        perms = [
            shuffle_order(len(sentence), self.rngs["wo"], self.config.lm.shuffle_rate)
            for sentence in sentences
        ]
        batch = index_batch(
            sentences,
            self.alphabets,
            with_root=False,
            min_char_width=self.parser.min_char_width,
            orders=perms,
        )
        H = self.parser.encoder.encode(batch, mode="wo", training=True, rng=self.rngs["dropout"])
        return self.parser.lm.wo_loss(H, batch, perms)

    def _sample(self, pool: Sequence, stream: str) -> List:
        picks = self.rngs[stream].integers(len(pool), size=self.config.train.batch_size)
        return [pool[i] for i in picks]

    # -- loop -----------------------------------------------------------------

    def step(
        self,
        parse_batch: Optional[Sequence[Sentence]],
        lm_pool: Sequence[Sentence],
        pseudo: Optional[PseudoData] = None,
    ) -> Dict[str, float]:
        """One optimizer step over every active objective."""
        train = self.config.train
        parse = pseudo_term = wo = mlm = 0.0
        if parse_batch:
            parse = self._parse_term(parse_batch)
        if pseudo is not None and len(pseudo) and pseudo.conf > 0:
            picks = self.rngs["pseudo"].integers(len(pseudo), size=train.batch_size)
            sentences = [pseudo.treebank[i] for i in picks]
            dists = [pseudo.distributions[i] for i in picks] if pseudo.distributions else None
            pseudo_term = self._parse_term(sentences, dists)
        if lm_pool and train.gamma_wo > 0:
            wo = self._wo_term(self._sample(lm_pool, "wo"))
        if lm_pool and train.gamma_mlm > 0:
            mlm = self._mlm_term(self._sample(lm_pool, "mlm"))

        total = combined_loss(
            parse, wo, mlm, train.gamma_wo, train.gamma_mlm,
            pseudo=pseudo_term, conf=pseudo.conf if pseudo is not None else 0.0,
        )
        if isinstance(total, Value) and total.requires_grad:
            self.parser.params.zero_grads()
            total.backward()
            adam_step(self.parameters, self.state)
            if self.decaying:
                decay_lr(self.state)
        return {
            "loss": _scalar_value(total),
            "parse_loss": _scalar_value(parse),
            "pseudo_loss": _scalar_value(pseudo_term),
            "wo_loss": _scalar_value(wo),
            "mlm_loss": _scalar_value(mlm),
        }

    def evaluate(self, dev: Treebank) -> Tuple[float, float]:
        report = uas_las(self.parser.parse(list(dev)), dev)
        return report.uas, report.las

    def fit(
        self,
        labeled: Treebank,
        dev: Optional[Treebank] = None,
        lm_pool: Sequence[Sentence] = (),
        pseudo: Optional[PseudoData] = None,
        metrics: Optional[MetricsStream] = None,
    ) -> TrainResult:
        """
        Train until max_epochs or patience epochs without dev improvement.

        Without a dev set the final epoch's parameters are kept.
        """
        labeled.ensure_non_empty("train")
        labeled.ensure_headed("train")
        train = self.config.train
        history: List[EpochRecord] = []
        lm_pool = list(lm_pool)

        epoch = 0
        if train.lm_pretrain_epochs and lm_pool and (train.gamma_wo > 0 or train.gamma_mlm > 0):
            for _ in range(train.lm_pretrain_epochs):
                epoch += 1
                record = self._run_epoch(epoch, "lm", labeled, lm_pool, None)
                history.append(record)
                if metrics:
                    metrics.emit(record.to_dict())

        best_state = None
        best_epoch, best_uas, best_las = 0, None, None
        stale = 0
        progress = self.config.progress
        with track_progress("Training", total=train.max_epochs, enabled=progress) as tracker:
            for _ in range(train.max_epochs):
                epoch += 1
                record = self._run_epoch(epoch, "multitask", labeled, lm_pool, pseudo)
                if dev is not None and len(dev):
                    record.dev_uas, record.dev_las = self.evaluate(dev)
                    if best_uas is None or record.dev_uas > best_uas:
                        best_uas, best_las, best_epoch = record.dev_uas, record.dev_las, epoch
                        best_state = self.parser.state_dict()
                        record.best = True
                        stale = 0
                    else:
                        stale += 1
                        self.decaying = True
                else:
                    best_epoch = epoch
                    record.best = True
                history.append(record)
                if metrics:
                    metrics.emit(record.to_dict())
                self.logger.info(
                    f"epoch {epoch}: loss {record.loss:.4f}"
                    + (f", dev UAS {record.dev_uas:.4f}" if record.dev_uas is not None else "")
                )
                tracker.update(1, loss=record.loss, dev_uas=record.dev_uas)
                if stale >= train.patience:
                    self.logger.info(f"No dev improvement for {stale} epochs, stopping")
                    break

        if best_state is not None:
            self.parser.load_state_dict(best_state)
        return TrainResult(
            parser=self.parser,
            history=history,
            best_epoch=best_epoch,
            best_dev_uas=best_uas,
            best_dev_las=best_las,
        )

    def _run_epoch(
        self,
        epoch: int,
        phase: str,
        labeled: Treebank,
        lm_pool: Sequence[Sentence],
        pseudo: Optional[PseudoData],
    ) -> EpochRecord:
        chunks = batches(list(labeled), self.config.train.batch_size, self.rngs["batches"])
        sums: Dict[str, float] = {}
        for chunk in chunks:
            if phase == "lm":
                parts = self.step(None, lm_pool, None)
            else:
                parts = self.step(chunk, lm_pool, pseudo)
            for key, value in parts.items():
                sums[key] = sums.get(key, 0.0) + value
        steps = len(chunks)
        means = {key: value / steps for key, value in sums.items()}
        return EpochRecord(
            epoch=epoch,
            phase=phase,
            steps=steps,
            loss=means.get("loss", 0.0),
            parse_loss=means.get("parse_loss", 0.0),
            pseudo_loss=means.get("pseudo_loss", 0.0),
            wo_loss=means.get("wo_loss", 0.0),
            mlm_loss=means.get("mlm_loss", 0.0),
            learning_rate=self.state.learning_rate,
        )


def lm_pool_for(
    labeled: Treebank, lm_text: Sequence[Sentence], use_source_lm: bool
) -> List[Sentence]:
    """Raw-text pool for the language-model objectives."""
    pool = list(lm_text)
    if use_source_lm:
        pool = sentences_as_text(list(labeled)) + pool
    return pool


def train_parser(
    config: Config,
    labeled: Treebank,
    dev: Optional[Treebank] = None,
    lm_text: Sequence[Sentence] = (),
    seed: int = 1,
    alphabets: Optional[Alphabets] = None,
    pseudo: Optional[PseudoData] = None,
    pretrained: Optional[Tuple[List[str], np.ndarray]] = None,
    metrics: Optional[MetricsStream] = None,
    logger=None,
) -> TrainResult:
    """
    Train one parser.

    Alphabets default to those built over the labeled data and lm_text.

    Raises:
        TrainingError: labeled is empty
    """
    labeled.ensure_non_empty("train")
    if alphabets is None:
        alphabets = build_alphabets(
            labeled,
            list(lm_text),
            max_vocab=config.data.max_vocab,
            lowercase_fallback=config.data.lowercase_fallback,
        )
    trainer = ParserTrainer(config, alphabets, seed, pretrained=pretrained, logger=logger)
    pool = lm_pool_for(labeled, lm_text, config.train.use_source_lm)
    return trainer.fit(labeled, dev, pool, pseudo=pseudo, metrics=metrics)


class TrainParserUseCase:
    """
    Use case for training a parser and writing its model directory.

    Orchestrates:
    - Alphabet construction
    - Multi-task training with dev-based model selection
    - Model, history and flag persistence
    """

    def __init__(self, config: Config, logger=None):
        """
        Initialize use case.

        Args:
            config: Resolved configuration
            logger: Optional logger
        """
        self.config = config
        self.logger = logger or get_logger("TrainParserUseCase")

    @time_operation(verbose=True)
    def execute(
        self,
        labeled: Treebank,
        out_dir: Path,
        seed: int,
        dev: Optional[Treebank] = None,
        lm_text: Sequence[Sentence] = (),
        pretrained: Optional[Tuple[List[str], np.ndarray]] = None,
        flags: Optional[Dict[str, Any]] = None,
        metrics: Optional[MetricsStream] = None,
    ) -> ProcessingResult:
        """
        Train and save.

        Returns:
            ProcessingResult whose metadata holds best epoch and dev scores
        """
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        history_path = out_dir / HISTORY_FILE
        if history_path.exists():
            history_path.unlink()

        stream = metrics or MetricsStream()
        stream.attach(history_path)
        try:
            result = train_parser(
                self.config,
                labeled,
                dev=dev,
                lm_text=lm_text,
                seed=seed,
                pretrained=pretrained,
                metrics=stream,
                logger=self.logger,
            )
        finally:
            stream.close()

        result.parser.save(out_dir, meta={"seed": seed, "best_epoch": result.best_epoch})
        (out_dir / FLAGS_FILE).write_text(
            json.dumps(flags or {}, indent=2, sort_keys=True, default=str), encoding="utf-8"
        )
        return ProcessingResult.success_result(
            f"Trained parser saved to {out_dir}",
            output_path=out_dir,
            metadata={
                "best_epoch": result.best_epoch,
                "dev_uas": result.best_dev_uas,
                "dev_las": result.best_dev_las,
                "epochs": len(result.history),
            },
        )
