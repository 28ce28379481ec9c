"""Classification, reconstruction, and combined losses for the three
training regimes.

The classification term is batch-averaged categorical cross entropy;
the reconstruction term is the element-wise mean absolute error between
a [-1,1]-normalized input and its reconstruction. Combined losses add
batch-averaged terms per stream: the personalized loss sums the
current-frame and baseline-frame reconstruction errors, the
multi-domain loss sums two independently averaged cross entropies and
three reconstruction errors (labeled d1, labeled d2, unlabeled d2).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import tensor as T
from .errors import ContractError
from .tensor import Tensor


@dataclass(frozen=True)
class LossWeights:
    """Weights on the reconstruction term per regime."""

    lambda1: float = 1.0   # standard
    lambda2: float = 1.0   # personalized
    lambda3: float = 10.0  # multi-domain


@dataclass
class LossBreakdown:
    cls: Tensor
    rec: Tensor | None
    total: Tensor
    parts: dict = field(default_factory=dict)


def loss_cls(probs: Tensor, onehot: np.ndarray) -> Tensor:
    return T.cross_entropy(probs, onehot)


def loss_rec(inputs: Tensor, recon: Tensor, use_mse: bool = False) -> Tensor:
    if use_mse:
        return T.mean_sq_error(recon, inputs)
    return T.mean_abs_error(recon, inputs)


def loss_standard(probs: Tensor, onehot: np.ndarray,
                  inputs: Tensor | None, recon: Tensor | None,
                  lambda1: float = 1.0, use_mse: bool = False) -> LossBreakdown:
    cls = loss_cls(probs, onehot)
    if recon is None:
        return LossBreakdown(cls, None, cls)
    rec = loss_rec(inputs, recon, use_mse)
    total = T.add(cls, T.scale(rec, lambda1))
    return LossBreakdown(cls, rec, total)


def loss_personalized(probs: Tensor, onehot: np.ndarray,
                      cur_inputs: Tensor, cur_recon: Tensor | None,
                      base_inputs: Tensor, base_recon: Tensor | None,
                      lambda2: float = 1.0, use_mse: bool = False) -> LossBreakdown:
    """Eq.-style combined personalized loss: cls on the residual-aware
    head output, rec summed over the current and baseline streams."""
    cls = loss_cls(probs, onehot)
    parts = {}
    if cur_recon is None:
        return LossBreakdown(cls, None, cls, parts)
    rec_cur = loss_rec(cur_inputs, cur_recon, use_mse)
    rec_base = loss_rec(base_inputs, base_recon, use_mse)
    rec = T.add(rec_cur, rec_base)
    parts["rec_current"] = rec_cur
    parts["rec_baseline"] = rec_base
    total = T.add(cls, T.scale(rec, lambda2))
    return LossBreakdown(cls, rec, total, parts)


def loss_multidomain(probs_d1: Tensor, onehot_d1: np.ndarray,
                     probs_d2: Tensor, onehot_d2: np.ndarray,
                     in_d1: Tensor, rec_d1: Tensor | None,
                     in_d2: Tensor, rec_d2: Tensor | None,
                     in_d2u: Tensor | None, rec_d2u: Tensor | None,
                     lambda3: float = 10.0, use_mse: bool = False,
                     unlabeled_labels=None) -> LossBreakdown:
    """Weakly supervised multi-domain loss.

    The unlabeled d2 batch contributes only through reconstruction; an
    empty (None) unlabeled batch simply drops its term. Passing labels
    for the unlabeled batch is a contract violation.
    """
    if unlabeled_labels is not None:
        raise ContractError(
            "labels supplied with the unlabeled batch; unlabeled samples "
            "must never reach the classification loss")
    cls = T.add(loss_cls(probs_d1, onehot_d1), loss_cls(probs_d2, onehot_d2))
    parts = {}
    if rec_d1 is None:
        return LossBreakdown(cls, None, cls, parts)
    rec_1 = loss_rec(in_d1, rec_d1, use_mse)
    rec_2 = loss_rec(in_d2, rec_d2, use_mse)
    rec = T.add(rec_1, rec_2)
    parts["rec_d1"] = rec_1
    parts["rec_d2"] = rec_2
    if rec_d2u is not None:
        rec_u = loss_rec(in_d2u, rec_d2u, use_mse)
        rec = T.add(rec, rec_u)
        parts["rec_d2_unlabeled"] = rec_u
    total = T.add(cls, T.scale(rec, lambda3))
    return LossBreakdown(cls, rec, total, parts)


def one_hot(labels, n_classes: int = 6, dtype=np.float32) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    out = np.zeros((labels.size, n_classes), dtype=dtype)
    out[np.arange(labels.size), labels] = 1.0
    return out
