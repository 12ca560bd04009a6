"""Multi-objective selection machinery and the novelty score.

All objectives are maximized. A coordinate may be the worst-sentinel -inf,
which compares below every finite value (two sentinels tie). Selection is
NSGA-II: fast non-dominated sorting plus crowding-distance truncation with
deterministic index tie-breaking.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import DimensionMismatchError


def _as_objective_matrix(points) -> np.ndarray:
    if isinstance(points, np.ndarray) and points.ndim == 2:
        if points.shape[0] == 0:
            raise ValueError("objective set must not be empty")
        return points.astype(np.float64, copy=False)
    rows = [np.asarray(p, dtype=np.float64).ravel() for p in points]
    if not rows:
        raise ValueError("objective set must not be empty")
    arity = rows[0].size
    for i, r in enumerate(rows):
        if r.size != arity:
            raise DimensionMismatchError(f"objective vector {i}", arity, r.size)
    return np.vstack(rows)


def dominates_matrix(objs: np.ndarray) -> np.ndarray:
    """Boolean matrix D with D[i, j] = point i dominates point j."""
    a = objs[:, None, :]
    b = objs[None, :, :]
    return (a >= b).all(axis=2) & (a > b).any(axis=2)


def non_dominated_sort(points) -> list[list[int]]:
    """Partition indices into Pareto fronts (front 0 = non-dominated)."""
    objs = _as_objective_matrix(points)
    dom = dominates_matrix(objs)
    n_dominators = dom.sum(axis=0).astype(np.int64)
    fronts = []
    remaining = np.ones(len(objs), dtype=bool)
    while remaining.any():
        front_mask = remaining & (n_dominators == 0)
        front = np.flatnonzero(front_mask)
        fronts.append(front.tolist())
        remaining &= ~front_mask
        n_dominators -= dom[front].sum(axis=0)
        n_dominators[~remaining] = -1
    return fronts


def crowding_distance(front_points) -> list[float]:
    """Crowding distance within one front.

    Boundary points per objective get +inf. Interior points accumulate the
    normalized gap between their sorted neighbors. An objective whose range
    is zero or not finite (worst-sentinel mixed with finite values)
    contributes nothing to interior points.
    """
    objs = _as_objective_matrix(front_points)
    n, m = objs.shape
    dist = np.zeros(n)
    if n <= 2:
        return [float("inf")] * n
    for j in range(m):
        order = sorted(range(n), key=lambda i: (objs[i, j], i))
        dist[order[0]] = float("inf")
        dist[order[-1]] = float("inf")
        lo, hi = objs[order[0], j], objs[order[-1], j]
        if not (np.isfinite(lo) and np.isfinite(hi)):
            continue
        span = hi - lo
        if span <= 0.0:
            continue
        for k in range(1, n - 1):
            gap = objs[order[k + 1], j] - objs[order[k - 1], j]
            dist[order[k]] += gap / span
    return dist.tolist()


def nsga2_select_indices(points, mu: int) -> list[int]:
    """Indices of the NSGA-II survivors, in selection order.

    Whole fronts are taken in rank order (by index within a front); the
    splitting front is truncated by descending crowding distance, ties
    broken by lower index.
    """
    objs = _as_objective_matrix(points)
    if mu > len(objs):
        raise ValueError(f"cannot select {mu} from {len(objs)} candidates")
    selected: list[int] = []
    for front in non_dominated_sort(objs):
        if len(selected) + len(front) <= mu:
            selected.extend(front)
        else:
            crowd = crowding_distance(objs[front])
            ordered = sorted(range(len(front)),
                             key=lambda k: (-crowd[k], front[k]))
            selected.extend(front[k] for k in ordered[: mu - len(selected)])
        if len(selected) == mu:
            break
    return selected


def nsga2_select(candidates, mu: int):
    """Select mu individuals from (individual, objective_vector) pairs."""
    points = [obj for _, obj in candidates]
    return [candidates[i][0] for i in nsga2_select_indices(points, mu)]


@dataclass(frozen=True)
class NoveltyArchive:
    """Bounded store of previously seen behavior descriptors."""

    behaviors: np.ndarray  # (count, dim)
    capacity: int
    k: int

    def __post_init__(self):
        if self.capacity < 1 or self.k < 1:
            raise ValueError("archive capacity and k must be >= 1")
        if len(self.behaviors) > self.capacity:
            raise ValueError("archive above capacity")

    @classmethod
    def empty(cls, dim: int, capacity: int, k: int) -> "NoveltyArchive":
        return cls(np.empty((0, dim), dtype=np.float64), capacity, k)

    def __len__(self):
        return len(self.behaviors)


def archive_insert(archive: NoveltyArchive, behaviors, rng) -> NoveltyArchive:
    """Append behaviors, then evict uniformly at random back down to capacity.

    The rng is consumed only when the capacity is exceeded.
    """
    new = np.asarray(behaviors, dtype=np.float64)
    if new.ndim == 1:
        new = new[None, :]
    if new.shape[-1] != archive.behaviors.shape[-1]:
        raise DimensionMismatchError(
            "behavior descriptor", archive.behaviors.shape[-1], new.shape[-1]
        )
    merged = np.concatenate([archive.behaviors, new], axis=0)
    excess = len(merged) - archive.capacity
    if excess > 0:
        evict = rng.choice(len(merged), size=excess, replace=False)
        keep = np.ones(len(merged), dtype=bool)
        keep[evict] = False
        merged = merged[keep]
    return NoveltyArchive(merged, archive.capacity, archive.k)


def novelty_scores(population_behaviors, archive: NoveltyArchive) -> np.ndarray:
    """Mean distance to the k nearest neighbors in (population \\ self) + archive.

    When fewer than k reference points exist the mean runs over all of
    them; with no reference points at all the novelty is 0.
    """
    pop = np.asarray(population_behaviors, dtype=np.float64)
    if pop.ndim == 1:
        pop = pop[:, None]
    if pop.shape[1] != archive.behaviors.shape[1]:
        raise DimensionMismatchError(
            "behavior descriptor", archive.behaviors.shape[1], pop.shape[1]
        )
    n = len(pop)
    ref = np.concatenate([pop, archive.behaviors], axis=0)
    n_ref = len(ref) - 1  # self excluded
    if n_ref <= 0:
        return np.zeros(n)
    d = cdist(pop, ref)
    d[np.arange(n), np.arange(n)] = np.inf
    k = min(archive.k, n_ref)
    nearest = np.partition(d, k - 1, axis=1)[:, :k]
    return nearest.mean(axis=1)
