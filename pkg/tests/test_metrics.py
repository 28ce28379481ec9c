import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from glancenet import metrics as M
from glancenet.errors import UndefinedMetricError


def test_auc_hand_case():
    assert M.roc_auc_binary([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1]) == 0.75


def test_auc_perfect_and_inverted():
    assert M.roc_auc_binary([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]) == 1.0
    assert M.roc_auc_binary([0.9, 0.8, 0.2, 0.1], [0, 0, 1, 1]) == 0.0


def test_auc_all_tied_is_half():
    assert M.roc_auc_binary([0.5] * 6, [0, 1, 0, 1, 0, 1]) == 0.5


def test_auc_undefined_single_class():
    with pytest.raises(UndefinedMetricError):
        M.roc_auc_binary([0.1, 0.2], [1, 1])
    with pytest.raises(UndefinedMetricError):
        M.roc_auc_pairwise([0.1, 0.2], [0, 0])


def test_auc_matches_pairwise_oracle_randomized():
    rng = np.random.default_rng(0)
    for _ in range(200):
        n = int(rng.integers(2, 60))
        # coarse quantization forces many ties
        scores = np.round(rng.random(n) * rng.integers(1, 6), 1)
        labels = rng.integers(0, 2, n)
        if labels.min() == labels.max():
            labels[0] = 1 - labels[0]
        assert M.roc_auc_binary(scores, labels) == \
            M.roc_auc_pairwise(scores, labels)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 5), min_size=2, max_size=40),
       st.data())
def test_auc_oracle_property(quantized, data):
    labels = data.draw(st.lists(st.integers(0, 1), min_size=len(quantized),
                                max_size=len(quantized)))
    labels = np.array(labels)
    if labels.min() == labels.max():
        labels[0] = 1 - labels[0]
    scores = np.array(quantized, dtype=float) / 5.0
    assert M.roc_auc_binary(scores, labels) == \
        M.roc_auc_pairwise(scores, labels)


def test_auc_monotone_transform_invariant():
    rng = np.random.default_rng(1)
    scores = rng.random(50)
    labels = rng.integers(0, 2, 50)
    labels[0], labels[1] = 0, 1
    base = M.roc_auc_binary(scores, labels)
    assert M.roc_auc_binary(np.exp(3 * scores), labels) == base
    assert M.roc_auc_binary(2 * scores - 7, labels) == base


def test_auc_label_flip_complement():
    rng = np.random.default_rng(2)
    scores = rng.random(40)  # continuous, ties almost surely absent
    labels = rng.integers(0, 2, 40)
    labels[0], labels[1] = 0, 1
    a = M.roc_auc_binary(scores, labels)
    b = M.roc_auc_binary(scores, 1 - labels)
    assert abs(a + b - 1.0) < 1e-12


def test_macro_auc_skips_absent_classes():
    rng = np.random.default_rng(3)
    probs = rng.random((30, 6))
    probs /= probs.sum(axis=1, keepdims=True)
    true = rng.integers(0, 3, 30)  # classes 3..5 absent
    true[:3] = [0, 1, 2]
    rep = M.macro_auc(M.ScoredPredictions(probs, true))
    assert set(rep.per_class_auc) == {0, 1, 2}
    assert rep.skipped_classes == [3, 4, 5]
    assert abs(rep.macro_auc
               - np.mean(list(rep.per_class_auc.values()))) < 1e-12


def test_macro_auc_needs_two_classes():
    probs = np.full((4, 6), 1 / 6)
    with pytest.raises(UndefinedMetricError):
        M.macro_auc(M.ScoredPredictions(probs, np.zeros(4, dtype=int)))


def test_confusion_matrix_rows():
    probs = np.zeros((3, 6))
    probs[0, 1] = 1  # true 0 -> predicted 1
    probs[1, 1] = 1  # true 1 -> predicted 1
    probs[2, 1] = 1  # true 1 -> predicted 1
    preds = M.ScoredPredictions(probs, np.array([0, 1, 1]))
    mat, empty = M.confusion_matrix(preds)
    assert mat[0, 1] == 1.0
    assert mat[1, 1] == 1.0
    assert empty == [2, 3, 4, 5]
    filled = mat.sum(axis=1)
    assert np.allclose(filled[[0, 1]], 1.0)


def test_t_test_derived_value():
    # frozen oracle: one-tailed paired t on d=[1..5] vs zero,
    # t = 3/sqrt(0.5), p from the t_4 upper tail
    t, p, degen = M.paired_t_test_one_tailed([1, 2, 3, 4, 5],
                                             [0, 0, 0, 0, 0])
    assert not degen
    assert abs(t - 4.242640687119285) < 1e-12
    assert abs(p - 0.006617799781841345) < 1e-12


def test_t_test_symmetry():
    a = [0.3, 0.5, 0.4, 0.6]
    b = [0.1, 0.6, 0.2, 0.5]
    t1, p1, _ = M.paired_t_test_one_tailed(a, b)
    t2, p2, _ = M.paired_t_test_one_tailed(b, a)
    assert abs(t1 + t2) < 1e-12
    assert abs(p1 + p2 - 1.0) < 1e-12


def test_t_test_degenerate_cases():
    assert M.paired_t_test_one_tailed([1, 1, 1], [0, 0, 0]) == \
        (float("inf"), 0.0, True)
    assert M.paired_t_test_one_tailed([0, 0, 0], [1, 1, 1]) == \
        (float("-inf"), 1.0, True)
    assert M.paired_t_test_one_tailed([2, 2], [2, 2]) == (0.0, 0.5, True)


def test_t_test_input_validation():
    with pytest.raises(UndefinedMetricError):
        M.paired_t_test_one_tailed([1.0], [0.0])
    with pytest.raises(UndefinedMetricError):
        M.paired_t_test_one_tailed([1, 2, 3], [1, 2])


def test_student_t_sf_reference_points():
    # t=0 -> 0.5 for any df; large t -> small tail
    assert abs(M.student_t_sf(0.0, 4) - 0.5) < 1e-15
    assert M.student_t_sf(10.0, 4) < 1e-3
    assert abs(M.student_t_sf(-1.0, 7) + M.student_t_sf(1.0, 7) - 1.0) < 1e-12
    with pytest.raises(UndefinedMetricError):
        M.student_t_sf(1.0, 0)


def test_report_rows_layout():
    rep = M.MetricsReport({0: 0.9, 2: 0.8}, 0.85, [1])
    rows = M.report_rows("exp", 3, rep)
    assert rows[-1]["class"] == "macro"
    assert rows[-1]["auc"] == "0.850000"
    assert [r["class"] for r in rows] == ["0", "2", "macro"]
