import itertools

import numpy as np
import pytest

from explainsel import EvalConfig, evaluate_objective
from explainsel.hardness import (
    ANCHOR,
    CENTER,
    COPY,
    ELEMENT,
    MaxCoverageInstance,
    max_coverage_brute_force,
    point_types,
    predicted_objective,
    random_mc_instance,
    reduce_max_coverage,
)

# solution distances by (row type, column type, same index?) copied from the construction table
TABLE = {
    (CENTER, CENTER): {None: 0},
    (CENTER, ANCHOR): {None: 2}, (CENTER, ELEMENT): {None: 4}, (CENTER, COPY): {None: 2},
    (ANCHOR, ANCHOR): {True: 0, False: 2}, (ANCHOR, ELEMENT): {True: 2, False: 4},
    (ANCHOR, COPY): {True: 2, False: 2},
    (ELEMENT, ELEMENT): {True: 0, False: 2}, (ELEMENT, COPY): {True: 2, False: 2},
    (COPY, COPY): {True: 0, False: 0},
}


def table_distance(a, b) -> int:
    (ta, ia, _), (tb, ib, _) = a, b
    key = (ta, tb) if (ta, tb) in TABLE else (tb, ta)
    entry = TABLE[key]
    return entry[None] if None in entry else entry[ia == ib]


def test_point_count():
    for n in (1, 2, 3, 4):
        ds, _, _ = reduce_max_coverage(MaxCoverageInstance(n, ((0,),), 1))
        assert ds.n_points == (n + 2) * (n + 1)
    ds, _, _ = reduce_max_coverage(MaxCoverageInstance(2, ((0,), (1,), (0, 1)), 2))
    assert ds.n_points == 12


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_solution_distances_match_table(n):
    ds, _, _ = reduce_max_coverage(MaxCoverageInstance(n, ((0,),), 1))
    types = point_types(n)
    for a, b in itertools.combinations(range(ds.n_points), 2):
        assert ds.solution_distance[a, b] == table_distance(types[a], types[b])


def test_predicted_objective_examples():
    mc = MaxCoverageInstance(3, ((0, 1, 2),), 1)
    assert predicted_objective(mc, (0,)) == 48
    k = 3
    assert predicted_objective(mc, (0,)) == 2 * k + 2 * (k + 1) * k + 2 * k * k
    empty_ish = MaxCoverageInstance(2, ((0,), (1,)), 1)
    # a cover leaving one element uncovered adds 4 per uncovered element
    assert predicted_objective(empty_ish, (0,)) - predicted_objective(MaxCoverageInstance(2, ((0, 1),), 1), (0,)) == 4


def test_instance_validation():
    with pytest.raises(ValueError):
        MaxCoverageInstance(2, ((0,), (0,)), 1)
    with pytest.raises(ValueError):
        MaxCoverageInstance(2, ((0, 5),), 1)
    with pytest.raises(ValueError):
        predicted_objective(MaxCoverageInstance(2, ((0,), (1,)), 1), (0, 1))


def test_subsets_normalised():
    mc = MaxCoverageInstance(3, ((2, 0, 0),), 1)
    assert mc.subsets == ((0, 2),)


@pytest.mark.parametrize("seed", range(20))
def test_reduction_objective_and_decision(seed):
    mc = random_mc_instance(np.random.default_rng(seed))
    ds, L, k = reduce_max_coverage(mc)
    best_value = None
    for size in range(1, min(L, mc.m) + 1):
        for cover in itertools.combinations(range(mc.m), size):
            want = predicted_objective(mc, cover)
            for mode in ("pessimistic", "optimistic"):
                assert evaluate_objective(ds, cover, EvalConfig(k, mode)) == pytest.approx(want, abs=1e-9)
            best_value = want if best_value is None else min(best_value, want)
    # yes-instance iff a selection reaches the objective of a cover with >= W covered elements
    _, covered = max_coverage_brute_force(mc)
    threshold = 4 * (mc.universe_size - mc.W) + 2 * k + 2 * (k + 1) * k + 2 * k * k
    assert (covered >= mc.W) == (best_value <= threshold)
