import numpy as np
import pytest

from pcpl.core import Centroids, CountVector, FeatureMatrix, InfeasibleError, ValidationError
from pcpl.solver import (
    ABSENT_COST,
    CostMatrix,
    brute_force_assignment,
    build_cost_matrix,
    nearest_centroid_assignment,
    solve_assignment,
)


def random_feasible_counts(rng, c, n):
    cuts = np.sort(rng.integers(0, n + 1, size=c - 1)) if c > 1 else np.array([], dtype=np.int64)
    return np.diff(np.concatenate([[0], cuts, [n]])).astype(np.int64)


# ---------------------------------------------------------------- cost matrix

def test_cost_matrix_three_four_five():
    costs = build_cost_matrix(FeatureMatrix([[0.0, 0.0]]), Centroids([[3.0, 4.0]]))
    assert costs.d[0, 0] == 25.0


def test_cost_matrix_zero_at_centroid():
    costs = build_cost_matrix(FeatureMatrix([[1.5, -2.25]]), Centroids([[1.5, -2.25]]))
    assert costs.d[0, 0] == 0.0


def test_cost_matrix_hand_example():
    costs = build_cost_matrix(FeatureMatrix([[1.0, 2.0]]), Centroids([[-1.0, 2.0]]))
    assert costs.d[0, 0] == 4.0


def test_cost_matrix_dimension_mismatch():
    with pytest.raises(ValidationError):
        build_cost_matrix(FeatureMatrix([[1.0, 2.0]]), Centroids([[1.0, 2.0, 3.0]]))


def test_cost_matrix_absent_class_sentinel():
    cent = Centroids([[0.0], [0.0]], present=[True, False])
    costs = build_cost_matrix(FeatureMatrix([[1.0]]), cent)
    assert costs.d[1, 0] == ABSENT_COST
    assert costs.present.tolist() == [True, False]


def test_cost_matrix_rejects_nan():
    with pytest.raises(ValidationError):
        CostMatrix(np.array([[np.nan]]))


# --------------------------------------------------------------------- solver

def test_forced_single_class():
    d = np.array([[5.0, 7.0], [1.0, 1.0]])
    a = solve_assignment(CostMatrix(d), CountVector([2, 0]))
    assert a.class_of.tolist() == [0, 0]
    assert a.total_cost == 12.0


def test_zero_cost_perfect_matching():
    d = np.array([[0.0, 5.0], [5.0, 0.0]])
    a = solve_assignment(CostMatrix(d), CountVector([1, 1]))
    assert a.class_of.tolist() == [0, 1]
    assert a.total_cost == 0.0


def test_worked_four_sample_instance():
    # optimum {0,3}->class0, {1,2}->class1 for cost 4, confirmed by enumeration
    d = np.array([[1.0, 2.0, 3.0, 0.0], [3.0, 2.0, 1.0, 4.0]])
    counts = CountVector([2, 2])
    a = solve_assignment(CostMatrix(d), counts)
    b = brute_force_assignment(CostMatrix(d), counts)
    assert b.total_cost == 4.0
    assert a.total_cost == 4.0
    assert a.class_of.tolist() == [0, 1, 1, 0]


def test_oracle_equivalence_integer_costs():
    rng = np.random.default_rng(10)
    for _ in range(120):
        c = int(rng.integers(1, 4))
        n = int(rng.integers(1, 9))
        d = rng.integers(0, 11, size=(c, n)).astype(np.float64)
        counts = CountVector(random_feasible_counts(rng, c, n))
        a = solve_assignment(CostMatrix(d), counts)
        b = brute_force_assignment(CostMatrix(d), counts)
        assert a.total_cost == b.total_cost


def test_oracle_equivalence_real_costs():
    rng = np.random.default_rng(11)
    for _ in range(120):
        c = int(rng.integers(1, 4))
        n = int(rng.integers(1, 9))
        d = rng.uniform(0, 10, size=(c, n))
        counts = CountVector(random_feasible_counts(rng, c, n))
        a = solve_assignment(CostMatrix(d), counts)
        b = brute_force_assignment(CostMatrix(d), counts)
        assert abs(a.total_cost - b.total_cost) <= 1e-9


def test_row_sums_exact_including_zero_rows():
    rng = np.random.default_rng(12)
    for _ in range(30):
        c = int(rng.integers(2, 6))
        n = int(rng.integers(c, 60))
        d = rng.uniform(0, 10, size=(c, n))
        counts = random_feasible_counts(rng, c, n)
        counts[rng.integers(0, c)] += n - counts.sum()  # keep the sum honest
        counts = np.maximum(counts, 0)
        counts[0] += n - counts.sum()
        a = solve_assignment(CostMatrix(d), CountVector(counts))
        assert np.array_equal(np.bincount(a.class_of, minlength=c), counts)


def test_matches_rectangular_assignment_solver():
    # independent mid-size oracle: expand each class into n_c unit slots and
    # run scipy's Hungarian solver on the slot-by-sample matrix
    scipy_opt = pytest.importorskip("scipy.optimize")
    rng = np.random.default_rng(13)
    for _ in range(10):
        c = int(rng.integers(2, 5))
        n = int(rng.integers(10, 60))
        d = rng.uniform(0, 10, size=(c, n))
        counts = random_feasible_counts(rng, c, n)
        a = solve_assignment(CostMatrix(d), CountVector(counts))
        slots = np.repeat(np.arange(c), counts)
        rows, cols = scipy_opt.linear_sum_assignment(d[slots])
        assert abs(a.total_cost - d[slots][rows, cols].sum()) <= 1e-9


def test_infeasible_count_sum():
    d = np.zeros((2, 3))
    with pytest.raises(InfeasibleError, match="sum"):
        solve_assignment(CostMatrix(d), CountVector([1, 1]))


def test_infeasible_absent_class():
    d = np.array([[1.0, 1.0], [ABSENT_COST, ABSENT_COST]])
    costs = CostMatrix(d, present=[True, False])
    with pytest.raises(InfeasibleError, match="absent"):
        solve_assignment(costs, CountVector([1, 1]))
    a = solve_assignment(costs, CountVector([2, 0]))
    assert a.class_of.tolist() == [0, 0]


def test_scale_invariance():
    rng = np.random.default_rng(14)
    for _ in range(20):
        c, n = 3, 12
        d = rng.uniform(0, 5, size=(c, n))
        counts = CountVector(random_feasible_counts(rng, c, n))
        lam = float(rng.uniform(0.1, 7.0))
        base = solve_assignment(CostMatrix(d), counts)
        scaled = solve_assignment(CostMatrix(lam * d), counts)
        assert abs(scaled.total_cost - lam * base.total_cost) <= 1e-9 * (1 + lam * base.total_cost)
        # scaled optimum must be optimal for the original costs too
        cost_back = d[scaled.class_of, np.arange(n)].sum()
        assert abs(cost_back - base.total_cost) <= 1e-9 * (1 + base.total_cost)


def test_column_permutation_invariance():
    rng = np.random.default_rng(15)
    for _ in range(20):
        c, n = 3, 10
        d = rng.uniform(0, 5, size=(c, n))
        counts = CountVector(random_feasible_counts(rng, c, n))
        perm = rng.permutation(n)
        a = solve_assignment(CostMatrix(d), counts)
        b = solve_assignment(CostMatrix(d[:, perm]), counts)
        assert abs(a.total_cost - b.total_cost) <= 1e-9


def test_constant_shift_moves_cost_by_n_times_constant():
    rng = np.random.default_rng(16)
    for _ in range(20):
        c, n = 3, 11
        d = rng.uniform(0, 5, size=(c, n))
        counts = CountVector(random_feasible_counts(rng, c, n))
        shift = float(rng.uniform(0.5, 4.0))
        a = solve_assignment(CostMatrix(d), counts)
        b = solve_assignment(CostMatrix(d + shift), counts)
        assert abs(b.total_cost - (a.total_cost + n * shift)) <= 1e-9 * (1 + b.total_cost)


def test_degenerate_equal_costs():
    d = np.full((3, 9), 2.5)
    counts = CountVector([4, 2, 3])
    a = solve_assignment(CostMatrix(d), counts)
    assert np.array_equal(np.bincount(a.class_of, minlength=3), counts.n_c)
    assert abs(a.total_cost - 9 * 2.5) <= 1e-12


# --------------------------------------------------------------- brute force

def test_brute_force_single_class():
    d = np.array([[1.0, 2.0, 3.0]])
    a = brute_force_assignment(CostMatrix(d), CountVector([3]))
    assert a.class_of.tolist() == [0, 0, 0]
    assert a.total_cost == 6.0


def test_brute_force_refuses_large_n():
    d = np.zeros((2, 13))
    with pytest.raises(ValidationError, match="refuses"):
        brute_force_assignment(CostMatrix(d), CountVector([7, 6]))


# ----------------------------------------------------------- nearest centroid

def test_nearest_centroid_argmin():
    d = np.array([[0.0, 5.0], [5.0, 0.0]])
    a = nearest_centroid_assignment(CostMatrix(d))
    assert a.class_of.tolist() == [0, 1]


def test_nearest_centroid_tie_goes_low():
    d = np.array([[2.0], [2.0]])
    a = nearest_centroid_assignment(CostMatrix(d))
    assert a.class_of.tolist() == [0]


def test_nearest_centroid_lower_bounds_constrained():
    rng = np.random.default_rng(17)
    for _ in range(50):
        c = int(rng.integers(1, 5))
        n = int(rng.integers(1, 40))
        d = rng.uniform(0, 10, size=(c, n))
        counts = CountVector(random_feasible_counts(rng, c, n))
        unconstrained = nearest_centroid_assignment(CostMatrix(d))
        constrained = solve_assignment(CostMatrix(d), counts)
        assert unconstrained.total_cost <= constrained.total_cost + 1e-9
