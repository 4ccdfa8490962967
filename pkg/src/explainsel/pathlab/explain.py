"""Historic path datasets and most-explainable-path computation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import Dataset, FeatureColumn
from .features import FeatureTable
from .graph import PathSolution, RoadGraph, ScenarioSet, label_correcting_path, shortest_path

UNIFORM = "uniform"
EXP_WEIGHTED = "exp_weighted"


@dataclass(frozen=True, eq=False)
class PathDataset:
    """A :class:`Dataset` of historic scenarios together with their optimal paths."""

    dataset: Dataset
    paths: np.ndarray          # N x E 0/1 indicators
    scenario_ids: tuple
    table: FeatureTable        # rows restricted to scenario_ids

    @property
    def n_points(self) -> int:
        return self.dataset.n_points


def path_hamming_matrix(paths: np.ndarray) -> np.ndarray:
    x = np.asarray(paths, dtype=float)
    return x @ (1 - x).T + (1 - x) @ x.T


def build_path_dataset(graph: RoadGraph, scenarios: ScenarioSet, scenario_ids, table: FeatureTable,
                       path_cache: dict | None = None) -> PathDataset:
    """Features of the sampled scenarios plus Hamming distances between their optimal paths.

    ``table`` rows are indexed by scenario id.  ``path_cache`` maps scenario id
    to a previously computed :class:`PathSolution`.
    """
    ids = tuple(int(s) for s in scenario_ids)
    if len(set(ids)) != len(ids):
        raise ValueError("scenario ids must be distinct")
    if any(not 0 <= s < scenarios.n_scenarios for s in ids):
        raise ValueError("scenario id out of range")
    paths = []
    for s in ids:
        if path_cache is not None and s in path_cache:
            sol = path_cache[s]
        else:
            sol = shortest_path(graph, scenarios.weights[s])
            if path_cache is not None:
                path_cache[s] = sol
        paths.append(sol.indicator)
    paths = np.array(paths, dtype=np.int8)
    rows = table.values[list(ids)]
    cols = tuple(FeatureColumn.numeric(nm, rows[:, c]) for c, nm in enumerate(table.names))
    sub = FeatureTable(rows, table.names, table.provenance, table.members)
    return PathDataset(Dataset(cols, path_hamming_matrix(paths)), paths, ids, sub)


def nearest_points(history: PathDataset, selection, new_row, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Indices of the k historic points closest to ``new_row`` (ties by index) and their distances."""
    sel = [history.dataset.feature_index(f) for f in selection]
    if not sel:
        raise ValueError("feature selection must be nonempty")
    if not 1 <= k <= history.n_points:
        raise ValueError(f"need 1 <= k <= N = {history.n_points}")
    new_row = np.asarray(new_row, dtype=float)
    d = np.abs(history.dataset.values[:, sel] - new_row[sel]).sum(axis=1)
    order = np.argsort(d, kind="stable")[:k]
    return order, d[order]


def most_explainable_path(graph: RoadGraph, history: PathDataset, selection, new_row, new_weights,
                          k: int, weighting: str = EXP_WEIGHTED) -> tuple[PathSolution, float]:
    """Path closest (weighted Hamming) to the paths of the k most similar historic scenarios.

    Edge ``e`` costs ``sum_i w_i (1 - 2 x^i_e)``; adding back
    ``sum_i w_i |x^i|`` to the cheapest path cost gives the score
    ``sum_i w_i Hamming(x, x^i)``.  ``w_i = 1/(1 + d_i)`` for ``exp_weighted``
    and 1 for ``uniform``.  The returned path's ``cost`` is its nominal cost
    under ``new_weights``.
    """
    idx, d = nearest_points(history, selection, new_row, k)
    if weighting == EXP_WEIGHTED:
        w = 1.0 / (1.0 + d)
    elif weighting == UNIFORM:
        w = np.ones(len(idx))
    else:
        raise ValueError(f"unknown weighting {weighting!r}")
    x = history.paths[idx].astype(float)
    costs = w @ (1.0 - 2.0 * x)
    edges, value = label_correcting_path(graph, costs)
    score = value + float(w @ x.sum(axis=1))
    nominal = np.asarray(new_weights, dtype=float)
    ind = np.zeros(graph.n_edges, dtype=np.int8)
    ind[list(edges)] = 1
    return PathSolution(edges, ind, float(nominal[list(edges)].sum())), max(score, 0.0)


def relative_length(path: PathSolution, graph: RoadGraph, weights) -> float:
    """Nominal cost of ``path`` over the cost of the true shortest path."""
    w = np.asarray(weights, dtype=float)
    best = shortest_path(graph, w).cost
    if best <= 0:
        raise ValueError("optimal path cost must be positive")
    return float(w[list(path.edges)].sum()) / best
