"""
Adam with global-norm gradient clipping and multiplicative learning-rate decay.
"""

from dataclasses import dataclass, field
from typing import Dict, Sequence

import numpy as np

from udpx.core.config import OptimizerConfig
from udpx.core.exceptions import GradientError
from udpx.numkernel.value import Parameter


@dataclass
class OptimizerState:
    """Moments per parameter name plus the schedule scalars."""

    learning_rate: float = 0.001
    decay_rate: float = 0.999995
    beta1: float = 0.9
    beta2: float = 0.9
    epsilon: float = 1e-8
    clip_norm: float = 5.0
    step: int = 0
    first_moment: Dict[str, np.ndarray] = field(default_factory=dict)
    second_moment: Dict[str, np.ndarray] = field(default_factory=dict)
    last_grad_norm: float = 0.0

    @classmethod
    def from_config(cls, config: OptimizerConfig) -> "OptimizerState":
        return cls(
            learning_rate=config.learning_rate,
            decay_rate=config.decay_rate,
            beta1=config.beta1,
            beta2=config.beta2,
            epsilon=config.epsilon,
            clip_norm=config.clip_norm,
        )


def global_grad_norm(params: Sequence[Parameter]) -> float:
    """L2 norm over every gradient entry of every parameter."""
    total = 0.0
    for param in params:
        if param.grad is not None:
            total += float(np.sum(param.grad * param.grad))
    return float(np.sqrt(total))


def adam_step(params: Sequence[Parameter], state: OptimizerState) -> None:
    """
    Apply one Adam update in place.

    Gradients are clipped to a global L2 norm of state.clip_norm before they
    enter the moments. Parameters without a gradient count as zero-gradient.

    Raises:
        GradientError: a gradient holds NaN or Inf; no parameter is touched
    """
    for param in params:
        if param.grad is not None and not np.all(np.isfinite(param.grad)):
            raise GradientError(param.name)

    norm = global_grad_norm(params)
    state.last_grad_norm = norm
    factor = state.clip_norm / norm if norm > state.clip_norm else 1.0

    state.step += 1
    correction1 = 1.0 - state.beta1**state.step
    correction2 = 1.0 - state.beta2**state.step

    for param in params:
        grad = param.grad if param.grad is not None else np.zeros_like(param.data)
        if factor != 1.0:
            grad = grad * factor

        m = state.first_moment.get(param.name)
        v = state.second_moment.get(param.name)
        if m is None:
            m = np.zeros_like(param.data)
            v = np.zeros_like(param.data)

        m = state.beta1 * m + (1.0 - state.beta1) * grad
        v = state.beta2 * v + (1.0 - state.beta2) * grad * grad
        state.first_moment[param.name] = m
        state.second_moment[param.name] = v

        denominator = np.sqrt(v / correction2) + state.epsilon
        update = state.learning_rate * (m / correction1) / denominator
        param.data -= update.astype(param.data.dtype, copy=False)


def decay_lr(state: OptimizerState) -> None:
    """eta <- eta * rho."""
    state.learning_rate *= state.decay_rate


def zero_grads(params: Sequence[Parameter]) -> None:
    for param in params:
        param.grad = None
