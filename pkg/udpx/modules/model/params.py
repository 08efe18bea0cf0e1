"""
Named parameter registry shared by the encoder and all heads.

One store holds every trainable array of a model so a single optimizer state
updates the shared encoder from all objectives.
"""

from typing import Dict, Iterator, List, Mapping, Tuple

import numpy as np

from udpx.core.exceptions import ModelError
from udpx.numkernel.value import Parameter, get_default_dtype


class ParamStore:
    """Ordered name -> Parameter mapping with initializers."""

    def __init__(self, rng: np.random.Generator):
        self.rng = rng
        self._params: Dict[str, Parameter] = {}

    # -- registration ---------------------------------------------------------

    def add(self, name: str, data: np.ndarray) -> Parameter:
        if name in self._params:
            raise ModelError(f"duplicate parameter name '{name}'")
        param = Parameter(np.asarray(data, dtype=get_default_dtype()), name=name)
        self._params[name] = param
        return param

    def glorot(self, name: str, shape: Tuple[int, ...]) -> Parameter:
        """Uniform Glorot init over the last two axes."""
        fan_in, fan_out = (shape[-2], shape[-1]) if len(shape) >= 2 else (shape[0], shape[0])
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        return self.add(name, self.rng.uniform(-limit, limit, size=shape))

    def uniform(self, name: str, shape: Tuple[int, ...], scale: float) -> Parameter:
        return self.add(name, self.rng.uniform(-scale, scale, size=shape))

    def zeros(self, name: str, shape: Tuple[int, ...]) -> Parameter:
        return self.add(name, np.zeros(shape))

    def constant(self, name: str, shape: Tuple[int, ...], value: float) -> Parameter:
        return self.add(name, np.full(shape, value))

    # -- access ---------------------------------------------------------------

    def __getitem__(self, name: str) -> Parameter:
        try:
            return self._params[name]
        except KeyError:
            raise ModelError(f"unknown parameter '{name}'") from None

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __iter__(self) -> Iterator[Parameter]:
        return iter(self._params.values())

    def __len__(self) -> int:
        return len(self._params)

    @property
    def names(self) -> List[str]:
        return list(self._params)

    def parameters(self, prefix: str = "") -> List[Parameter]:
        return [param for name, param in self._params.items() if name.startswith(prefix)]

    def num_parameters(self) -> int:
        return int(sum(param.data.size for param in self._params.values()))

    def zero_grads(self) -> None:
        for param in self._params.values():
            param.grad = None

    # -- snapshots ------------------------------------------------------------

    def state_dict(self) -> Dict[str, np.ndarray]:
        """Copies of every parameter array."""
        return {name: param.data.copy() for name, param in self._params.items()}

    def load_state_dict(self, arrays: Mapping[str, np.ndarray]) -> None:
        """
        Overwrite parameter values.

        Raises:
            ModelError: missing or extra names, or a shape differs
        """
        missing = set(self._params) - set(arrays)
        extra = set(arrays) - set(self._params)
        if missing or extra:
            raise ModelError(
                f"parameter mismatch: missing {sorted(missing)[:5]}, unexpected {sorted(extra)[:5]}"
            )
        for name, param in self._params.items():
            array = np.asarray(arrays[name])
            if array.shape != param.data.shape:
                raise ModelError(
                    f"parameter '{name}': checkpoint shape {array.shape}, "
                    f"model shape {param.data.shape}"
                )
            param.data = array.astype(get_default_dtype(), copy=True)
