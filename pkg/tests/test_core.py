import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from explainsel import (
    Dataset,
    EvalConfig,
    FeatureColumn,
    classify_neighbors,
    evaluate_objective,
    evaluate_selection,
    featurewise_distance,
    generate_synthetic_dataset,
    load_dataset,
    save_dataset,
    selected_instance_distance,
    solution_distance_matrix,
)
from explainsel.core import instance_distance_matrix
from explainsel.fixtures import knapsack_dataset, toy_dataset
from oracles import brute_contribution, brute_objective

PESS = EvalConfig(k=1, mode="pessimistic")
OPT = EvalConfig(k=1, mode="optimistic")


# -- distances -------------------------------------------------------------

def test_featurewise_distance_toy_upper():
    assert featurewise_distance(toy_dataset(), 0, 1, 0) == pytest.approx(0.9, abs=1e-12)


def test_featurewise_distance_identical_values():
    ds = toy_dataset()
    assert featurewise_distance(ds, 0, 2, 1) == 0.0
    assert featurewise_distance(ds, 1, 1, 0) == 0.0


def test_categorical_distance_is_indicator():
    ds = knapsack_dataset()
    assert featurewise_distance(ds, 0, 3, 1) == 0.0   # both healthcare
    assert featurewise_distance(ds, 0, 1, 1) == 1.0


def test_featurewise_distance_bad_index():
    with pytest.raises(IndexError):
        featurewise_distance(toy_dataset(), 0, 5, 0)


def test_selected_distance_knapsack():
    assert selected_instance_distance(knapsack_dataset(), 0, 1, (2, 4)) == pytest.approx(0.03, abs=1e-12)


def test_selected_distance_toy_lower_tie():
    assert selected_instance_distance(toy_dataset(), 0, 2, ("lower",)) == 0.0


def test_constant_column_adds_nothing():
    ds = knapsack_dataset()
    vals = np.column_stack([ds.values, np.full(4, 7.0)])
    cols = ds.features + (FeatureColumn.numeric("const", vals[:, -1]),)
    ext = Dataset(cols, ds.solution_distance)
    assert np.array_equal(instance_distance_matrix(ext, range(6)), instance_distance_matrix(ds, range(5)))


def test_empty_selection_rejected():
    with pytest.raises(ValueError):
        selected_instance_distance(toy_dataset(), 0, 1, ())
    with pytest.raises(ValueError):
        evaluate_selection(toy_dataset(), (), PESS)


def test_solution_distance_table():
    dx = solution_distance_matrix(((0.25, 0), (0.25, 0), (0.5, 1), (0.57, 1)))
    assert dx[0, 1] == 0.0
    assert abs(dx[0, 2] - 1.25) <= 1e-12
    assert abs(dx[0, 3] - 1.32) <= 1e-12
    assert abs(dx[2, 3] - 0.07) <= 1e-12
    assert np.array_equal(dx, dx.T)


# -- neighbour classification ------------------------------------------------

def test_classify_toy_lower_middle_point():
    nb = classify_neighbors(toy_dataset(), 1, ("lower",), PESS)
    assert nb.epsilon == pytest.approx(0.1)
    assert nb.strict == ()
    assert nb.borderline == (0, 2)
    assert nb.k_bar == 1


def test_classify_constant_feature_all_borderline():
    ds = Dataset.from_arrays(np.column_stack([np.ones(5), np.arange(5.0)]),
                             solution_features=np.arange(5.0)[:, None])
    nb = classify_neighbors(ds, 2, (0,), EvalConfig(k=2))
    assert nb.epsilon == 0.0
    assert nb.strict == ()
    assert nb.borderline == (0, 1, 3, 4)


def test_classify_distinct_distances():
    ds = Dataset.from_arrays(np.array([[0.0], [1.0], [3.0], [7.0]]), solution_features=np.zeros((4, 1)))
    nb = classify_neighbors(ds, 0, (0,), EvalConfig(k=2))
    assert nb.strict == (1,)
    assert nb.borderline == (2,)


def test_k_too_large():
    with pytest.raises(ValueError):
        evaluate_selection(toy_dataset(), (0,), EvalConfig(k=3))


# -- objective ---------------------------------------------------------------

@pytest.mark.parametrize("sel,mode,expected", [
    ("upper", "optimistic", 2), ("upper", "pessimistic", 2),
    ("lower", "optimistic", 2), ("lower", "pessimistic", 3),
])
def test_toy_objective_table(sel, mode, expected):
    res = evaluate_selection(toy_dataset(), (sel,), EvalConfig(k=1, mode=mode))
    assert res.objective == expected


def test_toy_lower_per_point():
    pess = evaluate_selection(toy_dataset(), ("lower",), PESS)
    opt = evaluate_selection(toy_dataset(), ("lower",), OPT)
    assert pess.contributions.tolist() == [1, 1, 1]
    assert opt.contributions.tolist() == [1, 0, 1]


def test_knapsack_pairing():
    res = evaluate_selection(knapsack_dataset(), (2, 4), PESS)
    assert res.neighbors == ((1,), (0,), (3,), (2,))
    assert res.objective == pytest.approx(0.14, abs=1e-12)


def test_categorical_roundtrip_json(tmp_path):
    ds = knapsack_dataset()
    path = tmp_path / "ks.json"
    save_dataset(ds, path)
    back = load_dataset(path)
    assert back.feature_names == ds.feature_names
    assert back.features[1].labels() == list(ds.features[1].labels())
    assert np.array_equal(back.solution_distance, ds.solution_distance)
    for sel in [(0,), (1, 2), (2, 4)]:
        assert evaluate_objective(back, sel, PESS) == evaluate_objective(ds, sel, PESS)


def test_dataset_from_dict_solution_features():
    data = {"features": [{"name": "a", "values": [0, 1, 2]}], "solution_features": [[0], [1], [3]]}
    ds = Dataset.from_dict(data)
    assert ds.solution_distance[0, 2] == 3


@pytest.mark.parametrize("bad", [
    {"features": [{"name": "a", "values": [0, 1]}]},
    {"features": [{"name": "a", "values": [0, 1]}], "solution_distance": [[0, 1], [2, 0]]},
    {"features": [{"name": "a", "values": [0, 1]}], "solution_distance": [[0, -1], [-1, 0]]},
    {"features": [{"name": "a", "values": [0, 1], "kind": "weird"}], "solution_distance": [[0, 1], [1, 0]]},
])
def test_dataset_validation(bad):
    with pytest.raises(ValueError):
        Dataset.from_dict(json.loads(json.dumps(bad)))


def test_normalize_flag():
    ds = Dataset.from_arrays(np.array([[0.0, 10.0], [5.0, 30.0], [10.0, 20.0]]),
                             solution_features=np.eye(3)).normalized()
    assert ds.values.min() == 0.0 and ds.values.max() == 1.0


def test_constant_selection_closed_form():
    rng = np.random.default_rng(3)
    n, k = 7, 3
    sol = rng.normal(size=(n, 2))
    ds = Dataset.from_arrays(np.column_stack([np.full(n, 2.5), rng.normal(size=n)]), solution_features=sol)
    dx = ds.solution_distance
    off = [np.sort(np.delete(dx[i], i)) for i in range(n)]
    lo = sum(r[:k].sum() for r in off)
    hi = sum(r[-k:].sum() for r in off)
    assert evaluate_objective(ds, (0,), EvalConfig(k=k, mode="optimistic")) == pytest.approx(lo, rel=1e-12)
    assert evaluate_objective(ds, (0,), EvalConfig(k=k, mode="pessimistic")) == pytest.approx(hi, rel=1e-12)


def test_synthetic_dataset_deterministic():
    a = generate_synthetic_dataset(10, 6, 4, seed=1)
    b = generate_synthetic_dataset(10, 6, 4, seed=1)
    assert a.to_dict() == b.to_dict()
    dx = a.solution_distance
    assert np.array_equal(dx, dx.T) and np.all(np.diag(dx) == 0)


def test_synthetic_dataset_minimal():
    ds = generate_synthetic_dataset(2, 1, 1, seed=5)
    assert ds.n_points == 2 and ds.n_features == 1
    evaluate_selection(ds, (0,), PESS)


def test_synthetic_dataset_degenerate():
    with pytest.raises(ValueError):
        generate_synthetic_dataset(1, 1, 1, seed=0)


# -- property tests ----------------------------------------------------------

@st.composite
def tie_heavy_case(draw):
    n = draw(st.integers(3, 9))
    p = draw(st.integers(1, 4))
    x = draw(st.lists(st.lists(st.integers(0, 3), min_size=p, max_size=p), min_size=n, max_size=n))
    sol = draw(st.lists(st.lists(st.integers(0, 2), min_size=2, max_size=2), min_size=n, max_size=n))
    k = draw(st.integers(1, n - 1))
    sel = draw(st.lists(st.integers(0, p - 1), min_size=1, max_size=p, unique=True))
    return np.array(x, dtype=float), np.array(sol, dtype=float), k, tuple(sorted(sel))


@settings(max_examples=150, deadline=None)
@given(tie_heavy_case())
def test_matches_brute_force(case):
    x, sol, k, sel = case
    ds = Dataset.from_arrays(x, solution_features=sol)
    cat = [False] * x.shape[1]
    for mode in ("optimistic", "pessimistic"):
        cfg = EvalConfig(k=k, mode=mode)
        res = evaluate_selection(ds, sel, cfg)
        assert res.objective == pytest.approx(brute_objective(x, cat, ds.solution_distance, sel, k, mode), abs=1e-9)
        assert evaluate_objective(ds, sel, cfg) == pytest.approx(res.objective, abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(tie_heavy_case(), st.randoms(use_true_random=False))
def test_permutation_invariance(case, rnd):
    x, sol, k, sel = case
    ds = Dataset.from_arrays(x, solution_features=sol)
    perm = list(range(len(x)))
    rnd.shuffle(perm)
    cfg = EvalConfig(k=k)
    base = evaluate_selection(ds, sel, cfg)
    moved = evaluate_selection(ds.permuted(perm), sel, cfg)
    assert moved.objective == pytest.approx(base.objective, abs=1e-9)
    assert np.allclose(moved.contributions, base.contributions[perm])


@settings(max_examples=100, deadline=None)
@given(tie_heavy_case())
def test_pessimistic_dominates_and_bounds(case):
    x, sol, k, sel = case
    ds = Dataset.from_arrays(x, solution_features=sol)
    lo = evaluate_objective(ds, sel, EvalConfig(k=k, mode="optimistic"))
    hi = evaluate_objective(ds, sel, EvalConfig(k=k, mode="pessimistic"))
    assert lo <= hi + 1e-12
    for i in range(len(x)):
        nb = classify_neighbors(ds, i, sel, EvalConfig(k=k))
        assert len(nb.strict) < k <= len(nb.strict) + len(nb.borderline)


def test_brute_force_classifications_many():
    """Random integer-distance rows with borderline sets up to 12 points."""
    rng = np.random.default_rng(11)
    checked = 0
    while checked < 1000:
        n = int(rng.integers(3, 16))
        dist = rng.integers(0, 4, size=n).astype(float)
        dx = rng.integers(0, 6, size=n).astype(float)
        i = int(rng.integers(n))
        dist[i] = 0.0
        dx[i] = 0.0
        k = int(rng.integers(1, n))
        ds = Dataset.from_arrays(dist[:, None], solution_distance=_dx_with_row(dx, i, n))
        nb = classify_neighbors(ds, i, (0,), EvalConfig(k=k))
        if len(nb.borderline) > 12:
            continue
        x = ds.values[:, 0]
        row = np.abs(x - x[i])
        for mode in ("optimistic", "pessimistic"):
            got = evaluate_selection(ds, (0,), EvalConfig(k=k, mode=mode)).contributions[i]
            assert got == brute_contribution(row, ds.solution_distance[i], i, k, mode)
        checked += 1


def _dx_with_row(row, i, n):
    m = np.ones((n, n))
    np.fill_diagonal(m, 0.0)
    m[i, :] = row
    m[:, i] = row
    m[i, i] = 0.0
    return m
