"""ROC-AUC (one-vs-rest and macro), confusion matrices, and the
one-tailed paired t-test used to compare multi-seed experiments.

AUC uses the Mann-Whitney rank formulation with half credit for ties;
on n <= a few thousand samples the rank sums are exact half-integers,
so the result matches the O(n^2) pairwise count bit-for-bit in float64.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import betainc

from .errors import UndefinedMetricError

N_CLASSES = 6


def roc_auc_binary(scores, labels) -> float:
    """P(score+ > score-) + 0.5 * P(tie), via average ranks."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise UndefinedMetricError(
            f"scores/labels must be equal-length vectors, got "
            f"{scores.shape} and {labels.shape}")
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError(
            f"AUC undefined: {n_pos} positives, {n_neg} negatives")
    order = np.argsort(scores, kind="stable")
    sorted_scores = scores[order]
    ranks = np.empty(len(scores), dtype=np.float64)
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        # average rank for the tie group, 1-based
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    rank_sum_pos = ranks[labels == 1].sum()
    u = rank_sum_pos - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


def roc_auc_pairwise(scores, labels) -> float:
    """O(n^2) counting oracle: wins + half-ties over all pos/neg pairs."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    if len(pos) == 0 or len(neg) == 0:
        raise UndefinedMetricError("AUC undefined for single-class input")
    wins = (pos[:, None] > neg[None, :]).sum()
    ties = (pos[:, None] == neg[None, :]).sum()
    return (wins + 0.5 * ties) / (len(pos) * len(neg))


@dataclass
class ScoredPredictions:
    probs: np.ndarray      # [n, 6], rows sum to 1
    true: np.ndarray       # [n] class codes 0..5
    sample_ids: np.ndarray | None = None


@dataclass
class MetricsReport:
    per_class_auc: dict[int, float]
    macro_auc: float
    skipped_classes: list[int]
    confusion: np.ndarray | None = None
    empty_rows: list[int] = field(default_factory=list)


def macro_auc(preds: ScoredPredictions) -> MetricsReport:
    """One-vs-rest AUC per class (class probability as score); macro is
    the mean over classes present in the labels."""
    present = set(np.unique(preds.true).tolist())
    if len(present) < 2:
        raise UndefinedMetricError(
            f"macro AUC needs >= 2 classes present, got {sorted(present)}")
    per_class = {}
    skipped = []
    for c in range(N_CLASSES):
        binary = (preds.true == c).astype(np.int64)
        if c not in present or binary.all():
            skipped.append(c)
            continue
        per_class[c] = roc_auc_binary(preds.probs[:, c], binary)
    macro = float(np.mean(list(per_class.values())))
    return MetricsReport(per_class, macro, skipped)


def confusion_matrix(preds: ScoredPredictions) -> tuple[np.ndarray, list[int]]:
    """Row-normalized 6x6 matrix of argmax decisions; rows with no
    samples are all-zero and returned in the flag list."""
    mat = np.zeros((N_CLASSES, N_CLASSES), dtype=np.float64)
    pred_cls = preds.probs.argmax(axis=1)
    for t, p in zip(preds.true, pred_cls):
        mat[t, p] += 1.0
    empty = []
    for i in range(N_CLASSES):
        total = mat[i].sum()
        if total == 0:
            empty.append(i)
        else:
            mat[i] /= total
    return mat, empty


def student_t_sf(t: float, df: int) -> float:
    """One-sided upper tail P(T > t) via the regularized incomplete beta."""
    if df < 1:
        raise UndefinedMetricError(f"t-distribution needs df >= 1, got {df}")
    x = df / (df + t * t)
    p = 0.5 * float(betainc(df / 2.0, 0.5, x))
    return p if t >= 0 else 1.0 - p


def paired_t_test_one_tailed(a, b):
    """One-tailed paired t-test (alternative: mean(a - b) > 0).

    Returns (t, p, degenerate_flag). With zero spread the p-value is
    forced to 0 / 1 / 0.5 depending on the sign of the mean difference
    and flagged degenerate.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1 or len(a) < 2:
        raise UndefinedMetricError(
            "paired t-test needs two equal-length vectors of length >= 2")
    d = a - b
    n = len(d)
    mean = d.mean()
    sd = d.std(ddof=1)
    if sd == 0.0:
        if mean > 0:
            return float("inf"), 0.0, True
        if mean < 0:
            return float("-inf"), 1.0, True
        return 0.0, 0.5, True
    t = mean / (sd / np.sqrt(n))
    return float(t), student_t_sf(float(t), n - 1), False


def report_rows(experiment: str, seed, report: MetricsReport) -> list[dict]:
    """TSV-ready rows: one per class plus a macro row."""
    rows = []
    for c, auc in sorted(report.per_class_auc.items()):
        rows.append({"experiment": experiment, "seed": seed,
                     "class": str(c), "auc": f"{auc:.6f}"})
    rows.append({"experiment": experiment, "seed": seed,
                 "class": "macro", "auc": f"{report.macro_auc:.6f}"})
    return rows
