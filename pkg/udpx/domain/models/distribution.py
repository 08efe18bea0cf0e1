"""
Parse distribution domain model.

Per-sentence arc and label probabilities over every head/dependent pair.
Row i describes dependent i+1; column j is candidate head j (0 = ROOT).
"""

from dataclasses import dataclass

import numpy as np

from udpx.core.exceptions import ShapeError

ROW_TOLERANCE = 1e-6


@dataclass(frozen=True)
class ParseDistribution:
    """
    arc_probs: (l, l+1), rows are distributions over heads.
    label_probs: (l, l+1, n_labels), fibers are distributions over labels.
    """

    arc_probs: np.ndarray
    label_probs: np.ndarray

    def __post_init__(self):
        arcs, labels = self.arc_probs, self.label_probs
        if arcs.ndim != 2 or arcs.shape[1] != arcs.shape[0] + 1 or arcs.shape[0] < 1:
            raise ShapeError("ParseDistribution", arcs.shape, detail="arc_probs must be (l, l+1)")
        if labels.ndim != 3 or labels.shape[:2] != arcs.shape:
            raise ShapeError(
                "ParseDistribution", arcs.shape, labels.shape,
                detail="label_probs must be (l, l+1, n_labels)",
            )

    @property
    def length(self) -> int:
        return self.arc_probs.shape[0]

    @property
    def n_labels(self) -> int:
        return self.label_probs.shape[2]

    def is_normalized(self, tolerance: float = ROW_TOLERANCE) -> bool:
        """Rows and label fibers sum to one."""
        rows_ok = np.allclose(self.arc_probs.sum(axis=1), 1.0, atol=tolerance)
        fibers_ok = np.allclose(self.label_probs.sum(axis=2), 1.0, atol=tolerance)
        return bool(rows_ok and fibers_ok)

    def arc_log_probs(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.arc_probs)

    def label_log_probs(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.label_probs)
