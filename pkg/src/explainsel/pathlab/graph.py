"""Road graphs, scenario weights and shortest-path routines.

Nodes and edges are addressed by position (0-based); the original ids are
kept for I/O.  "Smallest edge id" tie-breaking refers to edge position.
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass

import numpy as np


class UnreachableError(RuntimeError):
    pass


class NegativeCycleError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class RoadGraph:
    node_ids: tuple
    x: np.ndarray
    y: np.ndarray
    edge_ids: tuple
    tail: np.ndarray
    head: np.ndarray
    source: int
    target: int

    def __post_init__(self):
        n = len(self.node_ids)
        for name in ("x", "y"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (n,):
                raise ValueError(f"{name} must have one entry per node")
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        m = len(self.edge_ids)
        for name in ("tail", "head"):
            arr = np.asarray(getattr(self, name), dtype=int)
            if arr.shape != (m,):
                raise ValueError(f"{name} must have one entry per edge")
            if m and (arr.min() < 0 or arr.max() >= n):
                raise ValueError("edge endpoint refers to a missing node")
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if not (0 <= self.source < n and 0 <= self.target < n):
            raise ValueError("source/target must be existing nodes")
        if self.source == self.target:
            raise ValueError("source and target must differ")
        out = [[] for _ in range(n)]
        for e in range(m):
            out[self.tail[e]].append((e, int(self.head[e])))
        object.__setattr__(self, "_out", tuple(tuple(lst) for lst in out))
        if not self._reaches(self.source, self.target):
            raise ValueError("target is not reachable from source")

    @property
    def n_nodes(self) -> int:
        return len(self.node_ids)

    @property
    def n_edges(self) -> int:
        return len(self.edge_ids)

    def out_edges(self, u: int):
        return self._out[u]

    def _reaches(self, s: int, t: int) -> bool:
        seen = {s}
        stack = [s]
        while stack:
            u = stack.pop()
            if u == t:
                return True
            for _, v in self._out[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return False

    def midpoints(self) -> np.ndarray:
        return np.column_stack([
            (self.x[self.tail] + self.x[self.head]) / 2,
            (self.y[self.tail] + self.y[self.head]) / 2,
        ])

    def with_endpoints(self, source: int, target: int) -> "RoadGraph":
        return RoadGraph(self.node_ids, self.x, self.y, self.edge_ids, self.tail, self.head, source, target)

    def node_index(self, node_id) -> int:
        try:
            return self.node_ids.index(node_id)
        except ValueError:
            raise KeyError(f"unknown node {node_id!r}") from None


@dataclass(frozen=True, eq=False)
class ScenarioSet:
    """Edge weights per scenario: ``weights[s, e]``."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 2:
            raise ValueError("scenario weights must be a 2-d array")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise ValueError("scenario weights must be finite and positive")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    @property
    def n_scenarios(self) -> int:
        return self.weights.shape[0]

    def check(self, graph: RoadGraph) -> None:
        if self.weights.shape[1] != graph.n_edges:
            raise ValueError(f"{self.weights.shape[1]} weight columns for {graph.n_edges} edges")


@dataclass(frozen=True, eq=False)
class PathSolution:
    edges: tuple          # edge positions in travel order
    indicator: np.ndarray  # 0/1 per edge
    cost: float

    def __post_init__(self):
        ind = np.asarray(self.indicator, dtype=np.int8)
        ind.flags.writeable = False
        object.__setattr__(self, "indicator", ind)

    def is_simple_path(self, graph: RoadGraph) -> bool:
        if not self.edges or graph.tail[self.edges[0]] != graph.source:
            return False
        nodes = [graph.source]
        for a, b in zip(self.edges, self.edges[1:]):
            if graph.head[a] != graph.tail[b]:
                return False
        nodes += [int(graph.head[e]) for e in self.edges]
        return nodes[-1] == graph.target and len(set(nodes)) == len(nodes)


def _build_path(graph: RoadGraph, pred: list, weights: np.ndarray) -> PathSolution:
    edges = []
    v = graph.target
    seen = set()
    while v != graph.source:
        if v in seen:
            raise NegativeCycleError("predecessor graph contains a cycle")
        seen.add(v)
        e = pred[v]
        edges.append(e)
        v = int(graph.tail[e])
    edges.reverse()
    ind = np.zeros(graph.n_edges, dtype=np.int8)
    ind[edges] = 1
    return PathSolution(tuple(edges), ind, float(np.asarray(weights, dtype=float)[edges].sum()))


def shortest_path(graph: RoadGraph, weights) -> PathSolution:
    """Dijkstra; equal-cost labels keep the predecessor edge with the smallest id."""
    w = np.asarray(weights, dtype=float)
    if w.shape != (graph.n_edges,):
        raise ValueError("need one weight per edge")
    if np.any(w <= 0):
        raise ValueError("shortest_path needs positive weights")
    n = graph.n_nodes
    dist = [float("inf")] * n
    pred = [-1] * n
    done = [False] * n
    dist[graph.source] = 0.0
    heap = [(0.0, graph.source)]
    while heap:
        d, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        if u == graph.target:
            break
        for e, v in graph.out_edges(u):
            if done[v]:
                continue
            nd = d + w[e]
            if nd < dist[v] or (nd == dist[v] and e < pred[v]):
                dist[v] = nd
                pred[v] = e
                heapq.heappush(heap, (nd, v))
    if pred[graph.target] < 0:
        raise UnreachableError("target unreachable")
    return _build_path(graph, pred, w)


def label_correcting_path(graph: RoadGraph, costs) -> tuple[tuple, float]:
    """Cheapest source-target path under possibly negative edge costs.

    FIFO label-correcting search.  Raises :class:`NegativeCycleError` when a
    negative cycle is reachable from the source, in which case no cheapest
    simple path is returned.  Returns ``(edge positions, total cost)``.
    """
    c = np.asarray(costs, dtype=float)
    n = graph.n_nodes
    inf = float("inf")
    dist = [inf] * n
    pred = [-1] * n
    hops = [0] * n
    queued = [False] * n
    dist[graph.source] = 0.0
    queue = deque([graph.source])
    queued[graph.source] = True
    scale = 1e-12 * (1.0 + float(np.abs(c).sum()))
    while queue:
        u = queue.popleft()
        queued[u] = False
        du = dist[u]
        for e, v in graph.out_edges(u):
            nd = du + c[e]
            if nd < dist[v] - scale:
                dist[v] = nd
                pred[v] = e
                hops[v] = hops[u] + 1
                if hops[v] >= n:
                    raise NegativeCycleError(
                        f"negative cycle reachable from source (detected at node {graph.node_ids[v]!r})"
                    )
                if not queued[v]:
                    queued[v] = True
                    queue.append(v)
    if pred[graph.target] < 0:
        raise UnreachableError("target unreachable")
    path = _build_path(graph, pred, c)
    return path.edges, path.cost
