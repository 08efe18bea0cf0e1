"""
Ensemble domain model.

A weighted set of parsers whose predictive distributions are averaged.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Protocol, Sequence

from udpx.core.exceptions import ModelError
from udpx.domain.models.alphabets import Alphabets
from udpx.domain.models.distribution import ParseDistribution
from udpx.domain.models.sentence import Sentence

WEIGHT_TOLERANCE = 1e-9


class DistributionSource(Protocol):
    """Anything that predicts parse distributions over shared alphabets."""

    alphabets: Alphabets

    def predict_distributions(self, sentences: Sequence[Sentence]) -> List[ParseDistribution]:
        ...


@dataclass
class Ensemble:
    """
    Members with convex weights; uniform when weights are not given.

    Raises:
        ModelError: no members, bad weights, or members over different alphabets
    """

    members: List[DistributionSource]
    weights: Optional[List[float]] = None
    names: List[str] = field(default_factory=list)

    def __post_init__(self):
        if not self.members:
            raise ModelError("an ensemble needs at least one member")
        if self.weights is None:
            self.weights = [1.0 / len(self.members)] * len(self.members)
        if len(self.weights) != len(self.members):
            raise ModelError(f"{len(self.weights)} weights for {len(self.members)} members")
        if any(w < 0 for w in self.weights) or abs(sum(self.weights) - 1.0) > WEIGHT_TOLERANCE:
            raise ModelError(f"ensemble weights {self.weights} must be >= 0 and sum to 1")

        reference = self.members[0].alphabets.fingerprint()
        for index, member in enumerate(self.members[1:], start=1):
            if member.alphabets.fingerprint() != reference:
                raise ModelError(
                    f"ensemble member {index} was built over different alphabets than member 0"
                )

    @property
    def alphabets(self) -> Alphabets:
        return self.members[0].alphabets

    def __len__(self) -> int:
        return len(self.members)
