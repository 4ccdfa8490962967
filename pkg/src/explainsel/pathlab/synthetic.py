"""Synthetic road network with regionally correlated congestion."""

from __future__ import annotations

import numpy as np

from .graph import RoadGraph, ScenarioSet


def grid_road_network(rows: int = 6, cols: int = 10, seed: int = 0, jitter: float = 0.2,
                      diagonal_prob: float = 0.15) -> RoadGraph:
    """Jittered lattice with two-way streets and a few diagonal shortcuts.

    Source is the lower-left node, target the upper-right one.
    """
    if rows < 2 or cols < 2:
        raise ValueError("need at least a 2 x 2 lattice")
    rng = np.random.default_rng(seed)
    ids = [(r, c) for r in range(rows) for c in range(cols)]
    x = np.array([c for _, c in ids], dtype=float) + rng.uniform(-jitter, jitter, len(ids))
    y = np.array([r for r, _ in ids], dtype=float) + rng.uniform(-jitter, jitter, len(ids))
    pos = {rc: a for a, rc in enumerate(ids)}
    tail, head = [], []

    def street(a, b):
        tail.extend([a, b])
        head.extend([b, a])

    for r in range(rows):
        for c in range(cols):
            if c + 1 < cols:
                street(pos[r, c], pos[r, c + 1])
            if r + 1 < rows:
                street(pos[r, c], pos[r + 1, c])
            if r + 1 < rows and c + 1 < cols and rng.random() < diagonal_prob:
                street(pos[r, c], pos[r + 1, c + 1])
    node_ids = tuple(range(len(ids)))
    return RoadGraph(node_ids, x, y, tuple(range(len(tail))), np.array(tail), np.array(head),
                     0, len(ids) - 1)


def congestion_scenarios(graph: RoadGraph, n_scenarios: int = 500, seed: int = 0, n_zones: int = 4,
                         zone_radius: float = 1.5, intensity: float = 2.0,
                         noise: float = 0.15) -> ScenarioSet:
    """Edge costs = length x (1 + sum of zone congestion bumps) x lognormal noise.

    Each scenario draws an independent exponential congestion level per zone,
    so the costs of nearby edges move together.
    """
    rng = np.random.default_rng(seed)
    mid = graph.midpoints()
    length = np.hypot(graph.x[graph.head] - graph.x[graph.tail], graph.y[graph.head] - graph.y[graph.tail])
    centers = np.column_stack([
        rng.uniform(graph.x.min(), graph.x.max(), n_zones),
        rng.uniform(graph.y.min(), graph.y.max(), n_zones),
    ])
    sq = ((mid[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    bump = np.exp(-sq / (2 * zone_radius**2))            # edges x zones
    levels = rng.exponential(intensity, size=(n_scenarios, n_zones))
    factor = 1.0 + levels @ bump.T
    w = length[None, :] * factor * rng.lognormal(0.0, noise, size=(n_scenarios, graph.n_edges))
    return ScenarioSet(np.round(w, 6))
