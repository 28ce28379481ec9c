"""Adam optimizer with bias correction."""

from __future__ import annotations

import numpy as np

from .errors import ContractError
from .tensor import Tensor


class Adam:
    """Standard Adam over a named parameter map.

    Moments are kept per parameter in the parameter dtype. ``step``
    consumes and clears gradients; a missing gradient is a contract
    violation (call ``backward(params=...)`` so unreachable parameters
    get explicit zeros).
    """

    def __init__(self, params: dict[str, Tensor], lr: float = 1e-4,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {name: np.zeros_like(p.data) for name, p in params.items()}
        self.v = {name: np.zeros_like(p.data) for name, p in params.items()}

    def step(self):
        self.t += 1
        b1t = 1.0 - self.beta1 ** self.t
        b2t = 1.0 - self.beta2 ** self.t
        for name, p in self.params.items():
            if p.grad is None:
                raise ContractError(f"adam: parameter '{name}' has no gradient")
            g = p.grad
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            mhat = m / b1t
            vhat = v / b2t
            p.data -= (self.lr * mhat / (np.sqrt(vhat) + self.eps)).astype(p.data.dtype)
            p.grad = None

    def state_tensors(self) -> dict[str, np.ndarray]:
        """Flat view of the moment buffers for checkpointing."""
        out = {}
        for name in self.params:
            out[f"m/{name}"] = self.m[name]
            out[f"v/{name}"] = self.v[name]
        return out

    def load_state(self, step: int, tensors: dict[str, np.ndarray]):
        self.t = step
        for name in self.params:
            self.m[name] = tensors[f"m/{name}"].copy()
            self.v[name] = tensors[f"v/{name}"].copy()


def he_normal(rng, shape, fan_in, dtype=np.float32) -> np.ndarray:
    """Fan-in-scaled normal initialization for conv/dense weights."""
    std = np.sqrt(2.0 / fan_in)
    return (rng.standard_normal(shape) * std).astype(dtype)
