import numpy as np
import pytest

from pcpl.core import ValidationError
from pcpl.metrics import evaluate


def test_perfect_prediction():
    r = evaluate([0, 1, 2, 1], [0, 1, 2, 1], 3)
    assert r.accuracy == 1.0
    assert r.macro_f1 == 1.0


def test_worked_four_sample_example():
    r = evaluate([0, 0, 1, 1], [0, 1, 1, 1], 2)
    assert r.accuracy == 0.75
    assert np.allclose(r.precision, [1.0, 2.0 / 3.0])
    assert np.allclose(r.recall, [0.5, 1.0])
    assert np.allclose(r.f1, [2.0 / 3.0, 0.8])
    assert abs(r.macro_f1 - 11.0 / 15.0) < 1e-12  # ~0.7333
    assert abs(r.macro_precision - (1.0 + 2.0 / 3.0) / 2) < 1e-12
    assert abs(r.macro_recall - 0.75) < 1e-12


def test_zero_division_convention():
    # class 1 exists in truth but is never predicted
    r = evaluate([0, 1], [0, 0], 2)
    assert r.precision[1] == 0.0
    assert r.recall[1] == 0.0
    assert r.f1[1] == 0.0


def test_macro_skips_structurally_absent_classes():
    # class 2 appears in neither truth nor prediction
    r = evaluate([0, 1, 0, 1], [0, 1, 0, 1], 3)
    assert r.macro_f1 == 1.0


def test_length_mismatch():
    with pytest.raises(ValidationError):
        evaluate([0, 1], [0], 2)


def test_label_out_of_range():
    with pytest.raises(ValidationError):
        evaluate([0, 2], [0, 1], 2)


def test_confusion_layout_and_normalization():
    r = evaluate([0, 0, 1], [1, 0, 1], 2)
    assert r.confusion.tolist() == [[1, 1], [0, 1]]  # rows = truth
    assert np.allclose(r.confusion_row_normalized, [[0.5, 0.5], [0.0, 1.0]])


def test_row_normalization_zero_row():
    r = evaluate([0, 0], [0, 1], 3)
    assert np.all(r.confusion_row_normalized[2] == 0.0)
    assert r.confusion.sum() == 2


def test_label_permutation_equivariance():
    rng = np.random.default_rng(0)
    for _ in range(20):
        c = int(rng.integers(2, 6))
        n = int(rng.integers(5, 60))
        t = rng.integers(0, c, size=n)
        p = rng.integers(0, c, size=n)
        perm = rng.permutation(c)
        base = evaluate(t, p, c)
        permuted = evaluate(perm[t], perm[p], c)
        assert abs(base.accuracy - permuted.accuracy) < 1e-12
        assert abs(base.macro_f1 - permuted.macro_f1) < 1e-12
        assert abs(base.macro_precision - permuted.macro_precision) < 1e-12
        # class c's scores move to slot perm[c]
        assert np.allclose(permuted.f1[perm], base.f1)
        assert np.allclose(permuted.precision[perm], base.precision)
        assert np.allclose(permuted.recall[perm], base.recall)


def test_confusion_consistency_invariants():
    rng = np.random.default_rng(1)
    for _ in range(100):
        c = int(rng.integers(2, 6))
        n = int(rng.integers(1, 80))
        t = rng.integers(0, c, size=n)
        p = rng.integers(0, c, size=n)
        r = evaluate(t, p, c)
        assert r.confusion.sum() == n
        assert abs(r.accuracy - np.trace(r.confusion) / n) < 1e-12
        rowsum = r.confusion.sum(axis=1)
        for cls in range(c):
            if rowsum[cls]:
                assert abs(r.recall[cls] - r.confusion[cls, cls] / rowsum[cls]) < 1e-12
                assert abs(r.confusion_row_normalized[cls].sum() - 1.0) < 1e-12
        assert 0.0 <= r.macro_f1 <= 1.0


def test_to_dict_schema():
    d = evaluate([0, 1], [0, 1], 2).to_dict()
    assert set(d) == {"accuracy", "mrecall", "mprecision", "mf1", "per_class", "confusion"}
    assert len(d["per_class"]) == 2
    assert set(d["per_class"][0]) == {"precision", "recall", "f1"}
    assert d["confusion"] == [[1, 0], [0, 1]]
