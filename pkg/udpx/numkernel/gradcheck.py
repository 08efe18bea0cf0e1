"""
Finite-difference gradient checking.

Used by the test-suite to validate every backward rule; run it in float64.
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, Mapping, Optional, Sequence

import numpy as np

from udpx.numkernel.value import Value


@dataclass
class GradCheckResult:
    """Relative errors per parameter name."""

    errors: Dict[str, float] = field(default_factory=dict)
    tolerance: float = 1e-4

    @property
    def max_error(self) -> float:
        return max(self.errors.values(), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_error < self.tolerance


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """||a - n|| / (||a|| + ||n||), zero when both vanish."""
    denominator = np.linalg.norm(analytic) + np.linalg.norm(numeric)
    if denominator == 0.0:
        return 0.0
    return float(np.linalg.norm(analytic - numeric) / denominator)


def numeric_gradient(
    func: Callable[[], Value],
    param: Value,
    eps: float = 1e-5,
    rows: Optional[Sequence[int]] = None,
) -> np.ndarray:
    """
    Central differences of func() with respect to the entries of param.

    With rows only those slices along the first axis are perturbed; the rest
    of the result stays zero.
    """
    grad = np.zeros_like(param.data)
    flat = param.data.reshape(-1)
    out = grad.reshape(-1)
    if rows is None:
        indices = range(flat.size)
    else:
        row_size = flat.size // param.data.shape[0]
        indices = [r * row_size + k for r in sorted(set(rows)) for k in range(row_size)]
    for index in indices:
        original = flat[index]
        flat[index] = original + eps
        plus = func().item()
        flat[index] = original - eps
        minus = func().item()
        flat[index] = original
        out[index] = (plus - minus) / (2.0 * eps)
    return grad


def check_gradients(
    func: Callable[[], Value],
    params: Sequence[Value],
    eps: float = 1e-5,
    tolerance: float = 1e-4,
    rows: Optional[Mapping[str, Sequence[int]]] = None,
) -> GradCheckResult:
    """
    Compare backward() against central differences.

    func must rebuild the graph from the current parameter data on every call
    and be deterministic (dropout off or with a fixed mask). rows restricts
    the check of a named parameter (embedding tables) to some first-axis slices.
    """
    rows = rows or {}
    for param in params:
        param.zero_grad()
    func().backward()
    analytic = {
        param.name or f"param{i}": (
            param.grad.copy() if param.grad is not None else np.zeros_like(param.data)
        )
        for i, param in enumerate(params)
    }

    result = GradCheckResult(tolerance=tolerance)
    for i, param in enumerate(params):
        name = param.name or f"param{i}"
        selected = rows.get(name)
        numeric = numeric_gradient(func, param, eps, selected)
        expected = analytic[name]
        if selected is not None:
            keep = sorted(set(selected))
            numeric, expected = numeric[keep], expected[keep]
        result.errors[name] = relative_error(expected, numeric)
    return result
