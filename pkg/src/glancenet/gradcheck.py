"""Central finite-difference verification of analytic gradients.

Runs in float64. The comparison is relative with a unit floor:
err = max |g_analytic - g_fd| / max(1, |g_analytic|, |g_fd|).
"""

from __future__ import annotations

import numpy as np

from . import tensor as T
from .tensor import Tensor


def finite_diff(build_loss, param: Tensor, h: float = 1e-4) -> np.ndarray:
    """Central differences of build_loss() w.r.t. every element of param."""
    grad = np.zeros_like(param.data)
    flat = param.data.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        up = build_loss().item()
        flat[i] = orig - h
        down = build_loss().item()
        flat[i] = orig
        gflat[i] = (up - down) / (2.0 * h)
    return grad


def check_gradients(build_loss, params: dict[str, Tensor],
                    h: float = 1e-4) -> dict[str, float]:
    """Max relative error per parameter between backprop and finite
    differences. build_loss() must rebuild the graph each call."""
    T.zero_grads(params.values())
    loss = build_loss()
    loss.backward(params=params.values())
    analytic = {name: p.grad.copy() for name, p in params.items()}
    errors = {}
    for name, p in params.items():
        fd = finite_diff(build_loss, p, h)
        a = analytic[name]
        denom = np.maximum(1.0, np.maximum(np.abs(a), np.abs(fd)))
        errors[name] = float(np.max(np.abs(a - fd) / denom)) if a.size else 0.0
    T.zero_grads(params.values())
    return errors


def max_error(errors: dict[str, float]) -> float:
    return max(errors.values()) if errors else 0.0
