"""Exact solver for the proportion-constrained assignment problem.

Given per-sample costs to each class centroid and required per-class counts,
find the binary assignment (one class per sample, class sizes fixed) of
minimum total cost. This is a transportation problem with unit supplies and
one demand per class; its constraint matrix is totally unimodular, so the
continuous relaxation already has an integral optimum.

The implementation runs successive shortest paths with node potentials on a
residual graph contracted to class nodes: the residual arc a -> b carries the
cheapest cost of reassigning any sample currently in class a to class b
(d[b][j] - d[a][j]). With potentials kept dual-feasible, each augmentation
moves one unit of class count along a shortest surplus -> deficit path and
preserves optimality of the intermediate assignment, so the loop terminates
in at most N augmentations with a certified optimum. Arc minima are held in
lazy per-pair heaps keyed by the sample's current class.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .core import (
    Assignment,
    Centroids,
    CountVector,
    FeatureMatrix,
    InfeasibleError,
    ValidationError,
    class_counts,
)

__all__ = [
    "ABSENT_COST",
    "CostMatrix",
    "build_cost_matrix",
    "solve_assignment",
    "brute_force_assignment",
    "nearest_centroid_assignment",
]

# Sentinel written into rows of absent classes. Largest finite float64 so
# comparisons still work; solver code never adds two sentinel entries.
ABSENT_COST = float(np.finfo(np.float64).max)

BRUTE_FORCE_MAX_N = 12
BRUTE_FORCE_MAX_ENUM = 2_000_000


@dataclass(frozen=True)
class CostMatrix:
    """C x N matrix of squared distances from each sample to each class centroid.

    ``present[c]`` is False when class c had no centroid; its row holds the
    ABSENT_COST sentinel and may only receive a zero count.
    """

    d: np.ndarray
    present: np.ndarray = None  # type: ignore[assignment]

    def __post_init__(self):
        arr = np.asarray(self.d, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValidationError(f"cost matrix must be CxN with C,N >= 1, got shape {arr.shape}")
        if self.present is None:
            present = np.ones(arr.shape[0], dtype=bool)
        else:
            present = np.asarray(self.present, dtype=bool).reshape(-1)
        if present.shape[0] != arr.shape[0]:
            raise ValidationError("present flags do not match cost matrix rows")
        if np.isnan(arr).any() or np.isinf(arr).any():
            raise ValidationError("cost matrix contains NaN/Inf entries")
        if arr[present].size and arr[present].min() < 0:
            raise ValidationError("cost matrix contains negative entries")
        arr.setflags(write=False)
        present.setflags(write=False)
        object.__setattr__(self, "d", arr)
        object.__setattr__(self, "present", present)

    @property
    def c_rows(self) -> int:
        return self.d.shape[0]

    @property
    def n_cols(self) -> int:
        return self.d.shape[1]


def build_cost_matrix(target_features: FeatureMatrix, centroids: Centroids) -> CostMatrix:
    """Squared Euclidean distance of every target sample to every class centroid.

    Computed as the direct sum of squared coordinate differences (no norm
    expansion), so d[c][j] is exactly 0 when sample j coincides with
    centroid c. Rows of absent classes are filled with the ABSENT_COST
    sentinel and flagged so the solver can reject nonzero counts for them.
    """
    if target_features.d != centroids.d:
        raise ValidationError(
            f"feature dimension {target_features.d} does not match centroid dimension {centroids.d}"
        )
    x = target_features.data
    diff = x[None, :, :] - centroids.mu[:, None, :]
    d = np.einsum("cjk,cjk->cj", diff, diff)
    if not centroids.present.all():
        d[~centroids.present, :] = ABSENT_COST
    return CostMatrix(d, centroids.present.copy())


def _check_counts(costs: CostMatrix, counts: CountVector) -> None:
    if counts.num_classes != costs.c_rows:
        raise ValidationError(
            f"count vector has {counts.num_classes} classes, cost matrix has {costs.c_rows}"
        )
    if counts.total != costs.n_cols:
        raise InfeasibleError(
            f"counts sum to {counts.total} but there are {costs.n_cols} samples"
        )
    bad = np.where((counts.n_c > 0) & ~costs.present)[0]
    if bad.size:
        raise InfeasibleError(
            f"count n_c[{int(bad[0])}]={int(counts.n_c[bad[0]])} is positive for an absent class"
        )


def solve_assignment(costs: CostMatrix, counts: CountVector) -> Assignment:
    """Minimum-cost assignment with exact per-class counts.

    Returns one optimal assignment; when several assignments tie, which one
    comes back is unspecified, but ``total_cost`` is the unique optimum.
    Raises InfeasibleError when counts cannot be met.
    """
    _check_counts(costs, counts)
    n = costs.n_cols
    target = counts.n_c

    # Classes with a zero target can never hold samples in a feasible
    # solution, so the problem restricted to positive-count classes is
    # equivalent. This also keeps sentinel rows out of all arithmetic.
    active = np.where(target > 0)[0]
    d = costs.d[active]  # K x N view
    k = active.shape[0]

    if k == 1:
        class_of = np.full(n, active[0], dtype=np.int64)
        total = float(d[0].sum())
        return Assignment(class_of, counts, total)

    # Start from the unconstrained argmin assignment: it is optimal for its
    # own count vector, so zero potentials are dual-feasible.
    assign = np.argmin(d, axis=0)
    cur = np.bincount(assign, minlength=k).astype(np.int64)
    tgt = target[active]

    # heaps[a][b]: (delta, j) with delta = d[b,j] - d[a,j]; entry valid while
    # sample j is still assigned to a. Deltas never change, so stale entries
    # are filtered lazily and re-entries stay correct.
    heaps = [[[] for _ in range(k)] for _ in range(k)]
    for a in range(k):
        members = np.where(assign == a)[0]
        if members.size == 0:
            continue
        for b in range(k):
            if b == a:
                continue
            deltas = d[b, members] - d[a, members]
            heap = list(zip(deltas.tolist(), members.tolist()))
            heapq.heapify(heap)
            heaps[a][b] = heap

    pi = [0.0] * k
    assign_list = assign.tolist()  # python ints for fast heap churn

    def peek(a: int, b: int):
        heap = heaps[a][b]
        while heap:
            delta, j = heap[0]
            if assign_list[j] == a:
                return delta, j
            heapq.heappop(heap)
        return None

    d_list = d.tolist()
    surplus = [a for a in range(k) if cur[a] > tgt[a]]
    remaining = int(sum(cur[a] - tgt[a] for a in surplus))

    while remaining > 0:
        # Multi-source Dijkstra over class nodes with reduced costs.
        dist = [np.inf] * k
        parent_arc: list[tuple[int, int] | None] = [None] * k
        done = [False] * k
        pq: list[tuple[float, int]] = []
        for a in range(k):
            if cur[a] > tgt[a]:
                dist[a] = 0.0
                heapq.heappush(pq, (0.0, a))
        sink = -1
        while pq:
            du, u = heapq.heappop(pq)
            if done[u] or du > dist[u]:
                continue
            done[u] = True
            if cur[u] < tgt[u]:
                sink = u
                break
            for v in range(k):
                if v == u or done[v]:
                    continue
                top = peek(u, v)
                if top is None:
                    continue
                delta, j = top
                nd = du + (delta + pi[u] - pi[v])
                if nd < dist[v]:
                    dist[v] = nd
                    parent_arc[v] = (u, j)
                    heapq.heappush(pq, (nd, v))
        if sink < 0:
            # Unreachable with validated inputs: every surplus class has a
            # member, giving arcs to all other classes.
            raise InfeasibleError("no augmenting path between surplus and deficit classes")

        # Collect the path's (sample, destination) moves, then apply them
        # together; path classes are distinct so the samples are too.
        moves = []
        node = sink
        while parent_arc[node] is not None:
            u, j = parent_arc[node]
            moves.append((j, node))
            node = u
        source = node
        for j, b in moves:
            assign_list[j] = b
            dj = d_list[b][j]
            for x in range(k):
                if x != b:
                    heapq.heappush(heaps[b][x], (d_list[x][j] - dj, j))
        cur[source] -= 1
        cur[sink] += 1
        remaining -= 1

        d_sink = dist[sink]
        for c in range(k):
            pi[c] += min(dist[c], d_sink)

    class_of = active[np.asarray(assign_list, dtype=np.int64)]
    total = float(costs.d[class_of, np.arange(n)].sum())
    return Assignment(class_of, counts, total)


def _enumerate_assignments(counts: np.ndarray, n: int):
    """Yield every class_of vector whose class sizes equal ``counts``."""
    classes = np.where(counts > 0)[0]
    out = np.empty(n, dtype=np.int64)

    def rec(ci: int, free: tuple):
        if ci == len(classes):
            yield out
            return
        c = classes[ci]
        need = counts[c]
        if ci == len(classes) - 1:
            out[list(free)] = c
            yield out
            return
        for chosen in combinations(free, need):
            out[list(chosen)] = c
            rest = tuple(j for j in free if j not in chosen)
            yield from rec(ci + 1, rest)

    yield from rec(0, tuple(range(n)))


def _enumeration_size(counts: np.ndarray) -> int:
    from math import comb

    total = int(counts.sum())
    size = 1
    rem = total
    for c in counts:
        size *= comb(rem, int(c))
        rem -= int(c)
        if size > BRUTE_FORCE_MAX_ENUM:
            return size
    return size


def brute_force_assignment(costs: CostMatrix, counts: CountVector) -> Assignment:
    """Exhaustive minimum over every count-feasible assignment.

    Test oracle only: refuses instances above the enumeration bound
    (N <= 12 and at most a few million count-feasible assignments).
    """
    _check_counts(costs, counts)
    n = costs.n_cols
    if n > BRUTE_FORCE_MAX_N:
        raise ValidationError(
            f"brute force refuses N={n} > {BRUTE_FORCE_MAX_N} (enumeration bound)"
        )
    if _enumeration_size(counts.n_c) > BRUTE_FORCE_MAX_ENUM:
        raise ValidationError("brute force refuses: too many count-feasible assignments")

    cols = np.arange(n)
    best_cost = np.inf
    best = None
    for cand in _enumerate_assignments(counts.n_c, n):
        cost = float(costs.d[cand, cols].sum())
        if cost < best_cost:
            best_cost = cost
            best = cand.copy()
    return Assignment(best, counts, best_cost)


def nearest_centroid_assignment(costs: CostMatrix) -> Assignment:
    """Unconstrained baseline: each sample takes its cheapest class.

    Ties go to the lowest class index. The observed class counts are
    whatever they come out to be; this lower-bounds the cost of any
    count-constrained assignment on the same matrix.
    """
    class_of = np.argmin(costs.d, axis=0).astype(np.int64)
    counts = class_counts(class_of, costs.c_rows)
    total = float(costs.d[class_of, np.arange(costs.n_cols)].sum())
    return Assignment(class_of, counts, total)
