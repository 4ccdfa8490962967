"""Maximum Coverage -> feature selection reduction.

Given a universe ``U`` (elements ``0..|U|-1``), subsets ``T_0..T_{m-1}`` and a
budget ``K``, :func:`reduce_max_coverage` builds a dataset with
``N = (|U|+2)(|U|+1)`` points and one feature per subset.  Point types, in
index order:

* the center ``c`` (1 point),
* ``a_1..a_{|U|+1}`` (``|U|+1`` points),
* ``e_u`` for each element ``u`` (``|U|`` points),
* ``|U|+1`` copies ``e_u^l`` for each element ``u``.

Selecting the features of a cover ``C`` with ``k = |U|`` yields the objective
``2g + 2k + 2(k+1)k + 2g + 2k^2`` where ``g`` is the number of uncovered
elements (:func:`predicted_objective`).  Feature values are built with exact
fractions and converted to floats at the end; the smallest nonzero gap is
``1/(6K)``, far above the default tie tolerance.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .core import Dataset, FeatureColumn, solution_distance_matrix

CENTER, ANCHOR, ELEMENT, COPY = "center", "anchor", "element", "copy"


@dataclass(frozen=True)
class MaxCoverageInstance:
    universe_size: int
    subsets: tuple
    K: int
    W: int = 0

    def __post_init__(self):
        if self.universe_size < 1:
            raise ValueError("universe must be nonempty")
        if self.K < 1:
            raise ValueError("K must be >= 1")
        norm = tuple(tuple(sorted(set(int(u) for u in s))) for s in self.subsets)
        if not norm:
            raise ValueError("need at least one subset")
        for s in norm:
            if any(not 0 <= u < self.universe_size for u in s):
                raise ValueError(f"subset {list(s)} has elements outside the universe")
        if len(set(norm)) != len(norm):
            raise ValueError("subsets must be pairwise distinct")
        object.__setattr__(self, "subsets", norm)

    @property
    def m(self) -> int:
        return len(self.subsets)

    def uncovered(self, cover) -> int:
        covered = set().union(*(self.subsets[j] for j in cover)) if cover else set()
        return self.universe_size - len(covered)

    def to_dict(self) -> dict:
        return {"universe_size": self.universe_size, "subsets": [list(s) for s in self.subsets],
                "K": self.K, "W": self.W}

    @classmethod
    def from_dict(cls, data: dict) -> "MaxCoverageInstance":
        return cls(int(data["universe_size"]), tuple(data["subsets"]), int(data["K"]), int(data.get("W", 0)))


def load_mc_instance(path) -> MaxCoverageInstance:
    with open(path) as fh:
        return MaxCoverageInstance.from_dict(json.load(fh))


def point_types(universe_size: int) -> list[tuple]:
    """``(type, element, copy)`` label of each reduced data point in index order."""
    n = universe_size
    labels = [(CENTER, None, None)]
    labels += [(ANCHOR, a, None) for a in range(n + 1)]
    labels += [(ELEMENT, u, None) for u in range(n)]
    labels += [(COPY, u, l) for u in range(n) for l in range(n + 1)]
    return labels


def reduced_feature_values(mc: MaxCoverageInstance) -> list[list[Fraction]]:
    """Exact ``N x m`` instance feature table of the reduction."""
    m, K = mc.m, mc.K
    member = [[Fraction(int(u in mc.subsets[j])) for j in range(m)] for u in range(mc.universe_size)]
    rows = []
    for kind, u, _ in point_types(mc.universe_size):
        if kind == CENTER:
            rows.append([Fraction(0)] * m)
        elif kind == ANCHOR:
            rows.append([Fraction(1, 2 * K)] * m)
        elif kind == ELEMENT:
            rows.append(list(member[u]))
        else:
            rows.append([v + Fraction(1, 3 * K) for v in member[u]])
    return rows


def reduced_solution_features(universe_size: int) -> np.ndarray:
    """``N x (|U|+2)`` integer solution feature table of the reduction."""
    q = universe_size + 2
    last = q - 1
    rows = []
    for kind, u, _ in point_types(universe_size):
        v = np.zeros(q)
        if kind == ANCHOR:
            v[u] = 1
            v[last] = 1
        elif kind == ELEMENT:
            v[u] = 1
            v[last] = 3
        elif kind == COPY:
            v[last] = 2
        rows.append(v)
    return np.array(rows)


def reduce_max_coverage(mc: MaxCoverageInstance) -> tuple[Dataset, int, int]:
    """Return ``(dataset, L, k)`` with ``L = K`` and ``k = |U|``."""
    table = reduced_feature_values(mc)
    cols = tuple(
        FeatureColumn.numeric(f"T{j}", [float(row[j]) for row in table]) for j in range(mc.m)
    )
    dx = solution_distance_matrix(reduced_solution_features(mc.universe_size))
    return Dataset(cols, dx), mc.K, mc.universe_size


def predicted_objective(mc: MaxCoverageInstance, cover) -> int:
    cover = tuple(sorted(set(cover)))
    if not 1 <= len(cover) <= mc.K:
        raise ValueError(f"cover size must be in 1..{mc.K}")
    if any(not 0 <= j < mc.m for j in cover):
        raise ValueError("cover index out of range")
    k = mc.universe_size
    g = mc.uncovered(cover)
    return 2 * g + 2 * k + 2 * (k + 1) * k + 2 * g + 2 * k * k


def max_coverage_brute_force(mc: MaxCoverageInstance) -> tuple[tuple, int]:
    """Best cover of size 1..K by enumeration: ``(cover, covered_count)``."""
    best, best_cov = None, -1
    for size in range(1, min(mc.K, mc.m) + 1):
        for cover in itertools.combinations(range(mc.m), size):
            cov = mc.universe_size - mc.uncovered(cover)
            if cov > best_cov:
                best, best_cov = cover, cov
    return best, best_cov


def random_mc_instance(rng: np.random.Generator, max_universe: int = 4, max_subsets: int = 5,
                       max_K: int = 3) -> MaxCoverageInstance:
    """Random instance with distinct subsets (nonempty subsets preferred)."""
    n = int(rng.integers(1, max_universe + 1))
    pool = [s for r in range(1, n + 1) for s in itertools.combinations(range(n), r)]
    m = int(rng.integers(1, min(max_subsets, len(pool)) + 1))
    picks = rng.choice(len(pool), m, replace=False)
    K = int(rng.integers(1, max_K + 1))
    W = int(rng.integers(0, n + 1))
    return MaxCoverageInstance(n, tuple(pool[int(a)] for a in picks), K, W)
