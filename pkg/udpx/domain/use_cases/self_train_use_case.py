"""
Self-train use case.

Rounds of ensemble-teacher self-training. Round 1 trains several seeds on
the labeled source data; each later round lets the uniform ensemble of the
previous round annotate the unlabeled target pool and trains fresh students
on source plus confidence-weighted pseudo-labeled target data. Every round
is persisted so an interrupted run picks up after its last finished round.
"""

import json
import shutil
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from udpx.core.base import ProcessingResult
from udpx.core.config import Config
from udpx.core.decorators import log_operation, time_operation
from udpx.core.exceptions import TrainingError
from udpx.core.logger import MetricsStream, get_logger
from udpx.core.worker import StudentPool
from udpx.domain.models.alphabets import Alphabets
from udpx.domain.models.distribution import ParseDistribution
from udpx.domain.models.ensemble import Ensemble
from udpx.domain.models.reports import RoundReport
from udpx.domain.models.sentence import Sentence, Treebank
from udpx.domain.services.ensemble_service import EnsembleService
from udpx.domain.services.evaluator import uas_las
from udpx.domain.use_cases.train_parser_use_case import PseudoData, select_index, train_parser
from udpx.modules.data.conllu import write_conllu
from udpx.modules.data.corpus import sentences_as_text
from udpx.modules.data.vocab import build_alphabets
from udpx.modules.model.mst import mst_decode
from udpx.modules.model.parser import ALPHABETS_FILE, FLAGS_FILE, HISTORY_FILE, Parser

ROUND_MARKER = "round.json"
ROUNDS_FILE = "rounds.jsonl"
PSEUDO_FILE = "pseudo.conllu"
RUN_SEED_STRIDE = 1000

logger = get_logger("SelfTrainUseCase")


def conf_schedule(round_index: int, alpha: float, beta: float, clamp: bool = True) -> float:
    """
    Confidence weight of the round_index-th teacher-bearing round.

    Raises:
        TrainingError: round_index < 1
    """
    if round_index < 1:
        raise TrainingError(f"confidence schedule starts at round 1, got {round_index}")
    value = alpha * round_index + beta
    return min(1.0, value) if clamp else value


def member_seed(seed: int, round_index: int, member: int) -> int:
    """Distinct, reproducible seed for one student."""
    return int(np.random.SeedSequence([seed, round_index, member]).generate_state(1)[0])


@dataclass
class MemberJob:
    """Everything one student needs; plain data so worker processes can take it."""

    config: Dict[str, Any]
    alphabets: Alphabets
    seed: int
    out_dir: str
    labeled: List[Sentence]
    dev: List[Sentence]
    lm_text: List[Sentence]
    pseudo: List[Sentence] = field(default_factory=list)
    conf: float = 0.0
    distributions: Optional[List[ParseDistribution]] = None
    pretrained: Optional[Tuple[List[str], np.ndarray]] = None


@dataclass
class MemberOutcome:
    model_dir: str
    seed: int
    dev_uas: Optional[float]
    best_epoch: int


@log_operation(level="DEBUG")
def train_member(job: MemberJob) -> MemberOutcome:
    """Train and save one student (runs inside a pool worker)."""
    config = Config.from_dict(job.config)
    out_dir = Path(job.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    pseudo = None
    if job.pseudo:
        pseudo = PseudoData(Treebank(job.pseudo, split="train"), job.conf, job.distributions)

    history = out_dir / HISTORY_FILE
    if history.exists():
        history.unlink()
    with MetricsStream(history) as metrics:
        result = train_parser(
            config,
            Treebank(job.labeled, split="train"),
            dev=Treebank(job.dev, split="dev"),
            lm_text=job.lm_text,
            seed=job.seed,
            alphabets=job.alphabets,
            pseudo=pseudo,
            pretrained=job.pretrained,
            metrics=metrics,
        )
    result.parser.save(out_dir, meta={"seed": job.seed, "best_epoch": result.best_epoch})
    return MemberOutcome(
        model_dir=str(out_dir),
        seed=job.seed,
        dev_uas=result.best_dev_uas,
        best_epoch=result.best_epoch,
    )


@dataclass
class SelfTrainResult:
    ensemble: Ensemble
    reports: List[RoundReport]
    out_dir: Path
    member_dirs: List[Path]

    @property
    def final_dev_uas(self) -> float:
        return self.reports[-1].ensemble_dev_uas


def _evaluate_ensemble(ensemble: Ensemble, dev: Treebank) -> Tuple[float, float]:
    service = EnsembleService(ensemble)
    sentences = list(dev)
    predicted = [
        mst_decode(dist, sentence, ensemble.alphabets)
        for dist, sentence in zip(service.distributions(sentences), sentences)
    ]
    report = uas_las(predicted, dev)
    return report.uas, report.las


class SelfTrainUseCase:
    """
    Use case for ensemble-teacher self-training.

    Orchestrates:
    - Shared alphabet construction
    - Student training per round (inline or in parallel workers)
    - Teacher annotation of the target pool
    - Round reports, persistence and resumption
    """

    def __init__(self, config: Config, metrics: Optional[MetricsStream] = None, logger=None):
        """
        Initialize use case.

        Args:
            config: Resolved configuration
            metrics: Optional stream receiving one record per round
            logger: Optional logger
        """
        self.config = config
        self.settings = config.selftrain
        self.metrics = metrics
        self.logger = logger or get_logger("SelfTrainUseCase")

    # -- one run --------------------------------------------------------------

    def run(
        self,
        source: Treebank,
        dev: Treebank,
        target_pool: Sequence[Sentence],
        out_dir: Path,
        seed: int,
        target_train: Optional[Treebank] = None,
        pretrained: Optional[Tuple[List[str], np.ndarray]] = None,
    ) -> SelfTrainResult:
        """
        Self-train into out_dir.

        Raises:
            TrainingError: source or dev treebank is empty
        """
        source.ensure_non_empty("self_train")
        dev.ensure_non_empty("self_train")
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)

        pool = sentences_as_text(list(target_pool)[: self.settings.pool_size])
        labeled = list(source) + (list(target_train) if target_train is not None else [])
        alphabets = self._alphabets(out_dir, Treebank(labeled, split="train"), pool)

        max_rounds = self.settings.max_rounds
        if not pool and max_rounds > 1:
            self.logger.warning("Target pool is empty: training source-only seeds for one round")
            max_rounds = 1
        alpha, beta = self.settings.coefficients

        reports: List[RoundReport] = []
        members: List[Path] = []
        previous_uas: Optional[float] = None
        for round_index in range(1, max_rounds + 1):
            round_dir = out_dir / f"round_{round_index}"
            report = self._load_round(round_dir)
            if report is not None:
                self.logger.info(f"Round {round_index} already complete, resuming after it")
                members = self._member_dirs(round_dir, report.members)
                report.stopped = self._should_stop(report, max_rounds)
            else:
                conf = None
                annotated = None
                if round_index > 1:
                    conf = conf_schedule(round_index - 1, alpha, beta, self.settings.clamp_conf)
                    teacher = self._ensemble(members)
                    annotated = EnsembleService(teacher, logger=self.logger).annotate(
                        pool,
                        progress=self.config.progress,
                        keep_distributions=self.settings.pseudo_targets == "soft",
                    )
                    round_dir.mkdir(parents=True, exist_ok=True)
                    write_conllu(round_dir / PSEUDO_FILE, annotated.treebank)

                use_target_text = round_index > 1 or self.settings.round1_target_lm
                jobs = [
                    MemberJob(
                        config=self.config.to_dict(),
                        alphabets=alphabets,
                        seed=member_seed(seed, round_index, k),
                        out_dir=str(round_dir / f"member_{k}"),
                        labeled=labeled,
                        dev=list(dev),
                        lm_text=pool if use_target_text else [],
                        pseudo=list(annotated.treebank) if annotated is not None else [],
                        conf=conf or 0.0,
                        distributions=annotated.distributions if annotated is not None else None,
                        pretrained=pretrained,
                    )
                    for k in range(self.settings.count_for_round(round_index))
                ]
                self.logger.info(
                    f"Round {round_index}: training {len(jobs)} student(s)"
                    + (f", Conf {conf:.3f}" if conf is not None else "")
                )
                outcomes = StudentPool(jobs=self.settings.jobs).run(train_member, jobs)
                members = [Path(outcome.model_dir) for outcome in outcomes]

                ensemble_uas, ensemble_las = _evaluate_ensemble(self._ensemble(members), dev)
                gain = None if previous_uas is None else 100.0 * (ensemble_uas - previous_uas)
                report = RoundReport(
                    round=round_index,
                    conf=conf,
                    members=len(outcomes),
                    member_seeds=[outcome.seed for outcome in outcomes],
                    member_dev_uas=[outcome.dev_uas for outcome in outcomes],
                    ensemble_dev_uas=ensemble_uas,
                    ensemble_dev_las=ensemble_las,
                    gain=gain,
                    pseudo_sentences=len(annotated) if annotated is not None else 0,
                )
                report.stopped = self._should_stop(report, max_rounds)
                self._save_round(round_dir, report)

            reports.append(report)
            self._write_rounds(out_dir, reports)
            if self.metrics:
                self.metrics.emit(report.to_dict())
            previous_uas = report.ensemble_dev_uas
            if report.stopped:
                break

        return SelfTrainResult(
            ensemble=self._ensemble(members),
            reports=reports,
            out_dir=out_dir,
            member_dirs=members,
        )

    @time_operation(verbose=True)
    def execute(
        self,
        source: Treebank,
        dev: Treebank,
        target_pool: Sequence[Sentence],
        out_dir: Path,
        seed: int,
        target_train: Optional[Treebank] = None,
        pretrained: Optional[Tuple[List[str], np.ndarray]] = None,
        runs: int = 1,
        flags: Optional[Dict[str, Any]] = None,
    ) -> ProcessingResult:
        """
        Run self-training once or several times with spread seeds.

        With several runs each lives in run_<k>/ and the run with the best
        final source-dev ensemble UAS is reported.
        """
        if runs < 1:
            raise TrainingError(f"runs must be >= 1, got {runs}")
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / FLAGS_FILE).write_text(
            json.dumps(flags or {}, indent=2, sort_keys=True, default=str), encoding="utf-8"
        )

        results = []
        for run in range(runs):
            run_dir = out_dir if runs == 1 else out_dir / f"run_{run}"
            results.append(
                self.run(
                    source, dev, target_pool, run_dir, seed + RUN_SEED_STRIDE * run,
                    target_train=target_train, pretrained=pretrained,
                )
            )
        best = select_index([result.final_dev_uas for result in results])
        chosen = results[best]
        if runs > 1:
            (out_dir / "best_run.json").write_text(
                json.dumps({"run": best, "dir": str(chosen.out_dir)}, indent=2), encoding="utf-8"
            )

        return ProcessingResult.success_result(
            f"Self-training finished after {len(chosen.reports)} round(s)",
            output_path=chosen.out_dir,
            metadata={
                "rounds": len(chosen.reports),
                "ensemble_dev_uas": chosen.final_dev_uas,
                "ensemble_dev_las": chosen.reports[-1].ensemble_dev_las,
                "members": [str(path) for path in chosen.member_dirs],
                "best_run": best,
            },
        )

    def _should_stop(self, report: RoundReport, max_rounds: int) -> bool:
        """Last round reached, or the ensemble gained less than min_gain points."""
        if report.round >= max_rounds:
            return True
        return report.gain is not None and report.gain < self.settings.min_gain

    # -- persistence ----------------------------------------------------------

    def _alphabets(self, out_dir: Path, labeled: Treebank, pool: List[Sentence]) -> Alphabets:
        path = out_dir / ALPHABETS_FILE
        if path.exists():
            return Alphabets.load(path)
        alphabets = build_alphabets(
            labeled,
            pool,
            max_vocab=self.config.data.max_vocab,
            lowercase_fallback=self.config.data.lowercase_fallback,
        )
        alphabets.save(path)
        return alphabets

    def _ensemble(self, member_dirs: Sequence[Path]) -> Ensemble:
        return Ensemble(
            members=[Parser.load(path) for path in member_dirs],
            names=[str(path) for path in member_dirs],
        )

    @staticmethod
    def _member_dirs(round_dir: Path, count: int) -> List[Path]:
        return [round_dir / f"member_{k}" for k in range(count)]

    @staticmethod
    def _load_round(round_dir: Path) -> Optional[RoundReport]:
        marker = round_dir / ROUND_MARKER
        if not marker.exists():
            if round_dir.exists():
                logger.warning(f"Discarding incomplete round directory {round_dir}")
                shutil.rmtree(round_dir)
            return None
        return RoundReport.from_dict(json.loads(marker.read_text(encoding="utf-8")))

    @staticmethod
    def _save_round(round_dir: Path, report: RoundReport) -> None:
        round_dir.mkdir(parents=True, exist_ok=True)
        (round_dir / ROUND_MARKER).write_text(
            json.dumps(report.to_dict(), indent=2, sort_keys=True), encoding="utf-8"
        )

    @staticmethod
    def _write_rounds(out_dir: Path, reports: Sequence[RoundReport]) -> None:
        lines = [json.dumps(report.to_dict(), sort_keys=True) for report in reports]
        (out_dir / ROUNDS_FILE).write_text("\n".join(lines) + "\n", encoding="utf-8")
