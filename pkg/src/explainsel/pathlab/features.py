"""Grid aggregation features over a road network."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import RoadGraph, ScenarioSet


@dataclass(frozen=True)
class GridSpec:
    rows: int
    cols: int
    bbox: tuple | None = None  # (xmin, xmax, ymin, ymax); default from node coordinates

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("grid needs at least one row and one column")

    def resolve_bbox(self, graph: RoadGraph) -> tuple:
        if self.bbox is not None:
            return tuple(float(v) for v in self.bbox)
        return (float(graph.x.min()), float(graph.x.max()), float(graph.y.min()), float(graph.y.max()))


def _bin(coord: np.ndarray, lo: float, hi: float, n: int) -> np.ndarray:
    # values on an interior boundary go to the lower cell
    if hi <= lo:
        return np.zeros(len(coord), dtype=int)
    t = (coord - lo) / (hi - lo) * n
    return np.clip(np.ceil(t).astype(int) - 1, 0, n - 1)


def edge_cells(graph: RoadGraph, grid: GridSpec) -> np.ndarray:
    """Cell index ``row * cols + col`` of every edge midpoint (row 0 at the smallest y)."""
    xmin, xmax, ymin, ymax = grid.resolve_bbox(graph)
    mid = graph.midpoints()
    col = _bin(mid[:, 0], xmin, xmax, grid.cols)
    row = _bin(mid[:, 1], ymin, ymax, grid.rows)
    return row * grid.cols + col


@dataclass(frozen=True, eq=False)
class FeatureTable:
    """Scenario x feature values with provenance.

    ``provenance[c]`` is ``("cell", row, col)`` or ``("edge", edge_position)``;
    ``members[c]`` lists the edges summed into column ``c``.
    """

    values: np.ndarray
    names: tuple
    provenance: tuple
    members: tuple

    @property
    def n_features(self) -> int:
        return len(self.names)

    def columns(self, idx) -> "FeatureTable":
        idx = list(idx)
        return FeatureTable(self.values[:, idx], tuple(self.names[c] for c in idx),
                            tuple(self.provenance[c] for c in idx), tuple(self.members[c] for c in idx))

    def nonconstant_on(self, rows) -> "FeatureTable":
        """Drop columns that take a single value on the given scenario rows."""
        sub = self.values[np.asarray(rows)]
        keep = np.flatnonzero(np.any(sub != sub[0], axis=0))
        if keep.size == 0:
            raise ValueError("no nonconstant features left")
        return self.columns(keep)


def edge_feature_table(graph: RoadGraph, scenarios: ScenarioSet) -> FeatureTable:
    """One column per edge, no filtering."""
    scenarios.check(graph)
    m = graph.n_edges
    return FeatureTable(
        scenarios.weights.copy(),
        tuple(f"edge_{graph.edge_ids[e]}" for e in range(m)),
        tuple(("edge", e) for e in range(m)),
        tuple((e,) for e in range(m)),
    )


def build_grid_features(graph: RoadGraph, scenarios: ScenarioSet, grid: GridSpec,
                        include_edge_features: bool = False) -> FeatureTable:
    """Sum of edge weights per nonempty grid cell, optionally plus one column per edge.

    Columns constant over all given scenarios are removed.
    """
    scenarios.check(graph)
    cells = edge_cells(graph, grid)
    cols, names, prov, members = [], [], [], []
    for cell in range(grid.rows * grid.cols):
        edges = np.flatnonzero(cells == cell)
        if edges.size == 0:
            continue
        r, c = divmod(cell, grid.cols)
        cols.append(scenarios.weights[:, edges].sum(axis=1))
        names.append(f"cell_r{r}_c{c}")
        prov.append(("cell", r, c))
        members.append(tuple(int(e) for e in edges))
    table = FeatureTable(np.column_stack(cols), tuple(names), tuple(prov), tuple(members))
    if include_edge_features:
        edge_t = edge_feature_table(graph, scenarios)
        table = FeatureTable(
            np.hstack([table.values, edge_t.values]),
            table.names + edge_t.names,
            table.provenance + edge_t.provenance,
            table.members + edge_t.members,
        )
    return table.nonconstant_on(range(scenarios.n_scenarios))
