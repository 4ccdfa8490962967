import csv
import io
import math

import pytest

from explainsel.pathlab import ExperimentConfig, congestion_scenarios, grid_road_network, run_experiment

SMALL = dict(n_train=30, n_eval=6, k=3, grid_rows=2, grid_cols=3, random_baseline_repeats=6,
             random_path_selections=2, restarts=2, start_candidates=4, synthetic_rows=3, synthetic_cols=5,
             synthetic_scenarios=60)


def test_row_count_and_order():
    cfg = ExperimentConfig(L_values=(1, 2), repeats=2, **SMALL)
    res = run_experiment(cfg)
    assert len(res.rows) == 2 * 2 * 3
    keys = [(r["repeat"], r["L"], r["method"]) for r in res.rows]
    assert keys[:3] == [(0, 1, "kopt"), (0, 1, "all_edges"), (0, 1, "random")]
    assert keys == sorted(keys, key=lambda k: (k[0], k[1], ["kopt", "all_edges", "random"].index(k[2])))
    for row in res.rows:
        assert math.isnan(row["mean_relative_length"]) or row["mean_relative_length"] >= 1.0 - 1e-12


def test_row_count_ten_L_three_methods_ten_repeats():
    cfg = ExperimentConfig(L_values=range(1, 11), repeats=10, **dict(SMALL, grid_rows=3, grid_cols=4,
                                                                     random_baseline_repeats=2,
                                                                     random_path_selections=1, n_eval=2,
                                                                     restarts=1, start_candidates=1,
                                                                     max_sampled_moves=5))
    res = run_experiment(cfg)
    assert len(res.rows) == 300


def test_csv_is_deterministic_and_parseable():
    cfg = ExperimentConfig(L_values=(1, 3), repeats=2, **SMALL)
    a = run_experiment(cfg).to_csv()
    b = run_experiment(ExperimentConfig(L_values=(1, 3), repeats=2, workers=3, **SMALL)).to_csv()
    assert a == b
    rows = list(csv.DictReader(io.StringIO(a)))
    assert set(rows[0]) == {"repeat", "L", "method", "mean_relative_length", "objective", "failures"}


def test_given_network_and_insufficient_scenarios():
    g = grid_road_network(3, 4, seed=1)
    sc = congestion_scenarios(g, 20, seed=1)
    with pytest.raises(ValueError):
        run_experiment(ExperimentConfig(n_train=15, n_eval=10, k=2), g, sc)


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict({"n_trian": 5})
    with pytest.raises(ValueError):
        ExperimentConfig(k=10, n_train=10)
    with pytest.raises(ValueError):
        ExperimentConfig(methods=("kopt", "oracle"))
    cfg = ExperimentConfig.from_dict({"L_values": [2, 4]})
    assert cfg.L_values == (2, 4) and cfg.n_train == 200 and cfg.repeats == 10


def test_L_larger_than_feature_count():
    cfg = ExperimentConfig(L_values=(50,), repeats=1, **SMALL)
    with pytest.raises(ValueError):
        run_experiment(cfg)


def test_synthetic_network_shape():
    g = grid_road_network()
    assert g.n_nodes == 60
    sc = congestion_scenarios(g)
    assert sc.n_scenarios == 500 and sc.weights.min() > 0
