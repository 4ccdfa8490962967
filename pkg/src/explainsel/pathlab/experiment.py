"""Experiment harness: feature selection on road-network scenarios.

Per repeat, ``n_train`` scenarios form the historic dataset and ``n_eval``
disjoint scenarios are the new instances.  Three methods are compared for
every L:

``kopt``
    features chosen by :func:`k_opt_search` (pessimistic objective);
``all_edges``
    every per-edge weight used as a feature, no selection (independent of L);
``random``
    uniformly random size-L selections.  The objective is the mean over
    ``random_baseline_repeats`` selections; the relative length is averaged
    over the first ``random_path_selections`` of them.

For each eval scenario the most explainable path is computed from the
selected features and compared to the true shortest path.  Eval scenarios
whose transformed costs contain a negative cycle are skipped and counted in
the ``failures`` column.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from ..core import PESSIMISTIC, EvalConfig, evaluate_objective
from ..solvers import KOptConfig, k_opt_search, random_selection_baseline
from .explain import EXP_WEIGHTED, UNIFORM, PathDataset, build_path_dataset, most_explainable_path, relative_length
from .features import GridSpec, build_grid_features, edge_feature_table
from .graph import NegativeCycleError, RoadGraph, ScenarioSet
from .io import load_data_dir
from .synthetic import congestion_scenarios, grid_road_network

METHODS = ("kopt", "all_edges", "random")
CSV_COLUMNS = ("repeat", "L", "method", "mean_relative_length", "objective", "failures")


@dataclass(frozen=True)
class ExperimentConfig:
    n_train: int = 200
    n_eval: int = 50
    k: int = 5
    L_values: tuple = tuple(range(1, 11))
    grid_rows: int = 4
    grid_cols: int = 5
    include_edge_features: bool = False
    repeats: int = 10
    random_baseline_repeats: int = 100
    random_path_selections: int = 10
    seed: int = 0
    weighting: str = EXP_WEIGHTED
    swap_size: int = 1
    max_sampled_moves: int = 1000
    improving_moves_cutoff: int | None = 10
    start_candidates: int = 10
    restarts: int = 5
    workers: int = 1
    data_dir: str | None = None
    invert_weights: bool = False
    source: int | str | None = None    # node id overrides for shifted-endpoint runs
    target: int | str | None = None
    synthetic_rows: int = 6
    synthetic_cols: int = 10
    synthetic_scenarios: int = 500
    synthetic_seed: int = 0
    methods: tuple = field(default=METHODS)

    def __post_init__(self):
        object.__setattr__(self, "L_values", tuple(int(v) for v in self.L_values))
        object.__setattr__(self, "methods", tuple(self.methods))
        positive = ("n_train", "n_eval", "k", "grid_rows", "grid_cols", "repeats",
                    "random_baseline_repeats", "random_path_selections", "workers")
        for name in positive:
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not self.L_values or min(self.L_values) < 1:
            raise ValueError("L_values must be nonempty positive integers")
        if self.k >= self.n_train:
            raise ValueError("k must be smaller than n_train")
        if self.weighting not in (EXP_WEIGHTED, UNIFORM):
            raise ValueError(f"unknown weighting {self.weighting!r}")
        bad = set(self.methods) - set(METHODS)
        if bad or not self.methods:
            raise ValueError(f"methods must be a nonempty subset of {METHODS}")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"unknown experiment config keys: {unknown}")
        return cls(**data)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["L_values"] = list(self.L_values)
        out["methods"] = list(self.methods)
        return out

    def kopt_config(self, L: int, seed: int) -> KOptConfig:
        return KOptConfig(
            L=L, swap_size=min(self.swap_size, L), max_sampled_moves=self.max_sampled_moves,
            improving_moves_cutoff=self.improving_moves_cutoff, start_candidates=self.start_candidates,
            restarts=self.restarts, seed=seed, workers=self.workers,
        )


@dataclass
class ExperimentResult:
    rows: list            # dicts keyed by CSV_COLUMNS, ordered by (repeat, L, method)
    summary: dict

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in self.rows:
            writer.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(self.summary, indent=2, sort_keys=True, allow_nan=True) + "\n"

    def write(self, csv_path, json_path) -> None:
        Path(csv_path).write_text(self.to_csv())
        Path(json_path).write_text(self.to_json())


def _fmt(v) -> str:
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def load_network(config: ExperimentConfig, data_dir=None) -> tuple[RoadGraph, ScenarioSet, str]:
    """Graph and scenarios from the data directory, else the synthetic generator."""
    root = data_dir if data_dir is not None else config.data_dir
    if root is not None:
        graph, scen = load_data_dir(root, invert=config.invert_weights)
        origin = "data_dir"
    else:
        graph = grid_road_network(config.synthetic_rows, config.synthetic_cols, seed=config.synthetic_seed)
        scen = congestion_scenarios(graph, config.synthetic_scenarios, seed=config.synthetic_seed)
        origin = "synthetic"
    if config.source is not None or config.target is not None:
        s = graph.source if config.source is None else graph.node_index(config.source)
        t = graph.target if config.target is None else graph.node_index(config.target)
        graph = graph.with_endpoints(s, t)
    return graph, scen, origin


def _evaluate_paths(graph, history: PathDataset, selection, eval_rows, eval_weights, k, weighting):
    ratios, failures = [], 0
    for row, w in zip(eval_rows, eval_weights):
        try:
            path, _ = most_explainable_path(graph, history, selection, row, w, k, weighting)
        except NegativeCycleError:
            failures += 1
            continue
        ratios.append(relative_length(path, graph, w))
    mean = float(np.mean(ratios)) if ratios else float("nan")
    return mean, failures


def run_experiment(config: ExperimentConfig, graph: RoadGraph | None = None,
                   scenarios: ScenarioSet | None = None) -> ExperimentResult:
    """Run every repeat and return long-format rows plus a summary.

    Repeat ``r`` draws its scenario split and all solver seeds from child
    ``r`` of ``SeedSequence(config.seed)``, so results do not depend on
    ``workers``.
    """
    if (graph is None) != (scenarios is None):
        raise ValueError("pass both graph and scenarios or neither")
    origin = "given"
    if graph is None:
        graph, scenarios, origin = load_network(config)
    scenarios.check(graph)
    if config.n_train + config.n_eval > scenarios.n_scenarios:
        raise ValueError(f"need {config.n_train + config.n_eval} scenarios, only "
                         f"{scenarios.n_scenarios} available")
    grid_table = build_grid_features(graph, scenarios, GridSpec(config.grid_rows, config.grid_cols),
                                     config.include_edge_features)
    edge_table = edge_feature_table(graph, scenarios)
    ev = EvalConfig(k=config.k, mode=PESSIMISTIC)
    path_cache: dict = {}
    rows = []
    children = np.random.SeedSequence(config.seed).spawn(config.repeats)
    feature_counts = []
    for r, child in enumerate(children):
        split_seq, kopt_seq, rand_seq = child.spawn(3)
        perm = np.random.default_rng(split_seq).permutation(scenarios.n_scenarios)
        train = np.sort(perm[:config.n_train])
        held = perm[config.n_train:config.n_train + config.n_eval]
        table = grid_table.nonconstant_on(train)
        p = table.n_features
        feature_counts.append(p)
        if max(config.L_values) > p:
            raise ValueError(f"L={max(config.L_values)} exceeds the {p} available features")
        history = build_path_dataset(graph, scenarios, train, table, path_cache)
        eval_rows = table.values[held]
        eval_w = scenarios.weights[held]

        edge_res = None
        if "all_edges" in config.methods:
            etable = edge_table.nonconstant_on(train)
            ehist = build_path_dataset(graph, scenarios, train, etable, path_cache)
            esel = tuple(range(etable.n_features))
            edge_obj = evaluate_objective(ehist.dataset, esel, ev)
            edge_len, edge_fail = _evaluate_paths(graph, ehist, esel, etable.values[held], eval_w,
                                                  config.k, config.weighting)
            edge_res = (edge_len, edge_obj, edge_fail)

        kopt_seeds = kopt_seq.generate_state(len(config.L_values))
        rand_seeds = rand_seq.generate_state(len(config.L_values))
        for li, L in enumerate(config.L_values):
            for method in METHODS:
                if method not in config.methods:
                    continue
                if method == "kopt":
                    res = k_opt_search(history.dataset, config.kopt_config(L, int(kopt_seeds[li])), ev)
                    mean_len, fail = _evaluate_paths(graph, history, res.best_selection, eval_rows, eval_w,
                                                     config.k, config.weighting)
                    obj = res.best_objective
                elif method == "all_edges":
                    mean_len, obj, fail = edge_res
                else:
                    base = random_selection_baseline(history.dataset, L, config.random_baseline_repeats, ev,
                                                     int(rand_seeds[li]))
                    lens, fail = [], 0
                    for sel in base.selections[:config.random_path_selections]:
                        m, f = _evaluate_paths(graph, history, sel, eval_rows, eval_w, config.k,
                                               config.weighting)
                        fail += f
                        if not math.isnan(m):
                            lens.append(m)
                    mean_len = float(np.mean(lens)) if lens else float("nan")
                    obj = base.mean
                rows.append({"repeat": r, "L": L, "method": method, "mean_relative_length": float(mean_len),
                             "objective": float(obj), "failures": int(fail)})
    return ExperimentResult(rows, _summarize(rows, config, origin, graph, scenarios, feature_counts))


def _summarize(rows, config, origin, graph, scenarios, feature_counts) -> dict:
    agg = []
    for L in config.L_values:
        for method in METHODS:
            sub = [row for row in rows if row["L"] == L and row["method"] == method]
            if not sub:
                continue
            lens = [row["mean_relative_length"] for row in sub if not math.isnan(row["mean_relative_length"])]
            agg.append({
                "L": L, "method": method,
                "mean_relative_length": float(np.mean(lens)) if lens else None,
                "mean_objective": float(np.mean([row["objective"] for row in sub])),
                "failures": int(sum(row["failures"] for row in sub)),
            })
    echo = config.to_dict()
    del echo["workers"]  # does not affect results
    return {
        "config": echo,
        "network": {"origin": origin, "nodes": graph.n_nodes, "edges": graph.n_edges,
                    "scenarios": scenarios.n_scenarios},
        "features_per_repeat": feature_counts,
        "aggregate": agg,
        "rows": len(rows),
    }
