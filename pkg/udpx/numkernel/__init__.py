"""
Dense-array kernel with reverse-mode differentiation and Adam.
"""

from udpx.numkernel import ops
from udpx.numkernel.optim import OptimizerState, adam_step, decay_lr, zero_grads
from udpx.numkernel.value import (
    Parameter,
    Value,
    constant,
    get_default_dtype,
    set_default_dtype,
)

__all__ = [
    "OptimizerState",
    "Parameter",
    "Value",
    "adam_step",
    "constant",
    "decay_lr",
    "get_default_dtype",
    "ops",
    "set_default_dtype",
    "zero_grads",
]
