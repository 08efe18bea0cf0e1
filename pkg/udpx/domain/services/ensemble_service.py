"""
Ensemble teacher domain service.

Averages member distributions and decodes them into pseudo-labeled trees.
"""

from typing import List, Optional, Sequence

import numpy as np

from udpx.core.exceptions import ModelError
from udpx.core.progress import track_progress
from udpx.domain.models.distribution import ParseDistribution
from udpx.domain.models.ensemble import Ensemble
from udpx.domain.models.sentence import Sentence, Treebank
from udpx.modules.model.mst import mst_decode


def combine_distributions(
    distributions: Sequence[ParseDistribution], weights: Sequence[float]
) -> ParseDistribution:
    """Entrywise convex combination of distributions for one sentence."""
    if len(distributions) == 1:
        return distributions[0]
    first = distributions[0]
    for other in distributions[1:]:
        if (
            other.arc_probs.shape != first.arc_probs.shape
            or other.label_probs.shape != first.label_probs.shape
        ):
            raise ModelError("ensemble members disagree on sentence length or label count")
    arc = sum(w * d.arc_probs for w, d in zip(weights, distributions))
    label = sum(w * d.label_probs for w, d in zip(weights, distributions))
    return ParseDistribution(arc_probs=np.asarray(arc), label_probs=np.asarray(label))


class EnsembleService:
    """
    Domain service for ensemble teachers.

    Collects every member's distributions once per sentence batch, averages
    them and hands the result to a decoder.
    """

    def __init__(self, ensemble: Ensemble, logger=None):
        """
        Initialize the service.

        Args:
            ensemble: Members and weights
            logger: Optional logger
        """
        self.ensemble = ensemble
        self.logger = logger

    def distributions(self, sentences: Sequence[Sentence]) -> List[ParseDistribution]:
        """Weighted average distribution for every sentence."""
        per_member = [member.predict_distributions(sentences) for member in self.ensemble.members]
        return [
            combine_distributions([member[i] for member in per_member], self.ensemble.weights)
            for i in range(len(sentences))
        ]

    def annotate(
        self,
        pool: Sequence[Sentence],
        chunk_size: int = 256,
        progress: bool = False,
        keep_distributions: bool = False,
    ) -> "AnnotatedPool":
        """
        Decode the pool with the ensemble teacher.

        Sentences keep their order; gold annotation on input sentences is
        ignored and replaced.
        """
        alphabets = self.ensemble.alphabets
        sentences: List[Sentence] = []
        kept: List[ParseDistribution] = []
        pool = [s.without_annotation() if s.is_headed() else s for s in pool]
        with track_progress("Annotating", total=len(pool), enabled=progress) as tracker:
            for start in range(0, len(pool), chunk_size):
                chunk = pool[start : start + chunk_size]
                for sentence, dist in zip(chunk, self.distributions(chunk)):
                    sentences.append(mst_decode(dist, sentence, alphabets))
                    if keep_distributions:
                        kept.append(dist)
                tracker.update(len(chunk))
        if self.logger:
            self.logger.info(
                f"Annotated {len(sentences)} sentences with {len(self.ensemble)} members"
            )
        treebank = Treebank(sentences, split="train")
        return AnnotatedPool(treebank, kept if keep_distributions else None)


class AnnotatedPool:
    """Pseudo-labeled treebank plus, for soft targets, the teacher distributions."""

    def __init__(self, treebank: Treebank, distributions: Optional[List[ParseDistribution]] = None):
        self.treebank = treebank
        self.distributions = distributions

    def __len__(self) -> int:
        return len(self.treebank)


def ensemble_distribution(ensemble: Ensemble, sentence: Sentence) -> ParseDistribution:
    """Ensemble distribution of a single sentence."""
    return EnsembleService(ensemble).distributions([sentence])[0]


def annotate(ensemble: Ensemble, pool: Sequence[Sentence]) -> Treebank:
    """Pseudo-labeled treebank of the pool (one-hot teacher targets)."""
    return EnsembleService(ensemble).annotate(pool).treebank
