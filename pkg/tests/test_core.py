import numpy as np
import pytest

from pcpl.core import (
    Assignment,
    CountVector,
    FeatureMatrix,
    LabeledDataset,
    ProportionSpec,
    ValidationError,
    class_counts,
    compute_centroids,
    proportions_to_counts,
)


def test_feature_matrix_rejects_nonfinite():
    with pytest.raises(ValidationError):
        FeatureMatrix(np.array([[1.0, np.nan]]))
    with pytest.raises(ValidationError):
        FeatureMatrix(np.array([[np.inf, 0.0]]))


def test_feature_matrix_requires_2d():
    with pytest.raises(ValidationError):
        FeatureMatrix(np.zeros(3))
    with pytest.raises(ValidationError):
        FeatureMatrix(np.zeros((0, 2)))


def test_labeled_dataset_validates_labels():
    fm = FeatureMatrix(np.zeros((3, 2)))
    ds = LabeledDataset(fm, [0, 1, 0], 2)
    assert ds.n == 3
    with pytest.raises(ValidationError):
        LabeledDataset(fm, [0, 1, 2], 2)
    with pytest.raises(ValidationError):
        LabeledDataset(fm, [0, 1], 2)


def test_proportion_spec_sum_tolerance():
    ProportionSpec([0.5, 0.5])
    ProportionSpec([0.5, 0.5 + 5e-7])
    with pytest.raises(ValidationError):
        ProportionSpec([0.5, 0.6])
    with pytest.raises(ValidationError):
        ProportionSpec([-0.1, 1.1])


def test_class_counts_basic():
    assert class_counts([0, 0, 1], 2).n_c.tolist() == [2, 1]


def test_class_counts_empty_input():
    assert class_counts([], 3).n_c.tolist() == [0, 0, 0]


def test_class_counts_out_of_range():
    with pytest.raises(ValidationError):
        class_counts([3], 3)


def test_proportions_to_counts_exact_split():
    assert proportions_to_counts(ProportionSpec([0.5, 0.5]), 4).n_c.tolist() == [2, 2]


def test_proportions_to_counts_remainder_tie_breaks_ascending():
    # quotas 5.5/4.5: both remainders 0.5, the lone leftover goes to class 0
    assert proportions_to_counts(ProportionSpec([0.55, 0.45]), 10).n_c.tolist() == [6, 4]


def test_proportions_to_counts_four_class_mix():
    p = ProportionSpec([0.5414, 0.2707, 0.1112, 0.0767])
    counts = proportions_to_counts(p, 100)
    # floors (54, 27, 11, 7) sum to 99; largest remainder 0.67 sits at class 3
    assert counts.n_c.tolist() == [54, 27, 11, 8]
    assert counts.total == 100
    assert np.all(np.abs(counts.n_c - p.p * 100) < 1)


def test_proportions_to_counts_sums_exactly():
    rng = np.random.default_rng(0)
    for _ in range(200):
        c = int(rng.integers(1, 8))
        p = ProportionSpec(rng.dirichlet(np.ones(c)))
        n = int(rng.integers(0, 1001))
        counts = proportions_to_counts(p, n)
        assert counts.total == n
        assert np.all(np.abs(counts.n_c - p.p * n) < 1)


def test_proportions_to_counts_permutation_equivariant_off_ties():
    rng = np.random.default_rng(1)
    for _ in range(50):
        c = int(rng.integers(2, 7))
        # generic reals: remainder ties have measure zero
        p = rng.dirichlet(np.ones(c))
        n = int(rng.integers(1, 500))
        perm = rng.permutation(c)
        base = proportions_to_counts(ProportionSpec(p), n).n_c
        permuted = proportions_to_counts(ProportionSpec(p[perm]), n).n_c
        inv = np.empty(c, dtype=np.int64)
        inv[perm] = np.arange(c)
        assert np.array_equal(permuted[inv], base)


def test_proportions_to_counts_rejects_bad_input():
    with pytest.raises(ValidationError):
        proportions_to_counts(ProportionSpec([1.0]), -1)
    with pytest.raises(ValidationError):
        proportions_to_counts([0.7, 0.7], 10)


def test_compute_centroids_mean_of_two_points():
    ds = LabeledDataset(FeatureMatrix([[0.0, 0.0], [2.0, 2.0]]), [0, 0], 1)
    cent = compute_centroids(ds)
    assert np.allclose(cent.mu[0], [1.0, 1.0])
    assert cent.present[0]


def test_compute_centroids_singletons():
    x = np.array([[3.0, -1.0], [0.5, 2.0]])
    ds = LabeledDataset(FeatureMatrix(x), [0, 1], 2)
    cent = compute_centroids(ds)
    assert np.array_equal(cent.mu, x)


def test_compute_centroids_hand_example():
    ds = LabeledDataset(FeatureMatrix([[1.0, 0.0], [3.0, 0.0], [0.0, 5.0]]), [0, 0, 1], 2)
    cent = compute_centroids(ds)
    assert np.array_equal(cent.mu, [[2.0, 0.0], [0.0, 5.0]])


def test_compute_centroids_empty_class_flagged():
    ds = LabeledDataset(FeatureMatrix([[1.0], [2.0]]), [0, 0], 3)
    cent = compute_centroids(ds)
    assert cent.present.tolist() == [True, False, False]
    assert np.array_equal(cent.mu[1], [0.0])


def test_recentring_property():
    rng = np.random.default_rng(2)
    x = rng.normal(scale=5.0, size=(100, 4))
    labels = rng.integers(0, 3, size=100)
    ds = LabeledDataset(FeatureMatrix(x), labels, 3)
    cent = compute_centroids(ds)
    shifted = x - cent.mu[labels]
    tol = 1e-9 * (1 + np.abs(x).max())
    for c in range(3):
        rows = shifted[labels == c]
        if rows.size:
            assert np.abs(rows.mean(axis=0)).max() <= tol


def test_count_vector_rejects_negative():
    with pytest.raises(ValidationError):
        CountVector([-1, 2])


def test_assignment_checks_counts_match():
    with pytest.raises(ValidationError):
        Assignment(np.array([0, 0, 1]), CountVector([1, 2]), 0.0)
    a = Assignment(np.array([0, 0, 1]), CountVector([2, 1]), 5.0)
    assert a.n == 3 and a.total_cost == 5.0
