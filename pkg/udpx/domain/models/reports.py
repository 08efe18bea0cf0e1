"""
Report records written by evaluation, training and self-training.
"""

from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional


@dataclass
class EvaluationReport:
    """Attachment scores as fractions in [0, 1]."""

    uas: float
    las: float
    counted_tokens: int
    excluded_tokens: int

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class SignificanceReport:
    """Bootstrap p-values: fraction of trials where system A did not beat B."""

    p_uas: float
    p_las: float
    sample_size: int
    trials: int

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class EpochRecord:
    """One line of the training history."""

    epoch: int
    phase: str
    steps: int
    loss: float
    parse_loss: float
    pseudo_loss: float
    wo_loss: float
    mlm_loss: float
    learning_rate: float
    dev_uas: Optional[float] = None
    dev_las: Optional[float] = None
    best: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class RoundReport:
    """One line of the self-training report."""

    round: int
    conf: Optional[float]
    members: int
    member_seeds: List[int]
    member_dev_uas: List[float]
    ensemble_dev_uas: float
    ensemble_dev_las: float
    gain: Optional[float]
    pseudo_sentences: int
    stopped: bool = False
    extra: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RoundReport":
        return cls(**data)
