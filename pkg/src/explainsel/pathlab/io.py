"""File formats for road graphs and scenario weights.

Graph JSON::

    {"nodes": [{"id": 0, "x": 1.0, "y": 2.0}, ...],
     "edges": [{"id": 0, "tail": 0, "head": 1}, ...],
     "source": 0, "target": 5}

Graph CSV: a directory holding ``nodes.csv`` (``id,x,y``), ``edges.csv``
(``id,tail,head``) and ``endpoints.json`` (``{"source": .., "target": ..}``).

Scenario CSV: header row of edge ids, one row of positive weights per
scenario.  Columns are matched to graph edges by id.

A data directory (``--data-dir`` or ``$EXPLAINSEL_DATA_DIR``) holds
``graph.json`` (or the CSV trio) and ``scenarios.csv``.  The public Chicago
travel-time data has to be converted to this layout first.
"""

from __future__ import annotations

import csv
import json
import os
from pathlib import Path

import numpy as np

from .graph import RoadGraph, ScenarioSet

DATA_DIR_ENV = "EXPLAINSEL_DATA_DIR"


def _parse_id(raw: str):
    try:
        return int(raw)
    except ValueError:
        return raw


def graph_from_records(nodes, edges, source, target) -> RoadGraph:
    node_ids = tuple(n["id"] for n in nodes)
    index = {nid: a for a, nid in enumerate(node_ids)}
    if len(index) != len(node_ids):
        raise ValueError("duplicate node ids")
    try:
        tail = [index[e["tail"]] for e in edges]
        head = [index[e["head"]] for e in edges]
        s, t = index[source], index[target]
    except KeyError as exc:
        raise ValueError(f"unknown node id {exc.args[0]!r}") from None
    edge_ids = tuple(e["id"] for e in edges)
    if len(set(edge_ids)) != len(edge_ids):
        raise ValueError("duplicate edge ids")
    return RoadGraph(node_ids, np.array([float(n["x"]) for n in nodes]), np.array([float(n["y"]) for n in nodes]),
                     edge_ids, np.array(tail, dtype=int), np.array(head, dtype=int), s, t)


def graph_to_dict(graph: RoadGraph) -> dict:
    return {
        "nodes": [{"id": nid, "x": float(graph.x[a]), "y": float(graph.y[a])} for a, nid in enumerate(graph.node_ids)],
        "edges": [{"id": eid, "tail": graph.node_ids[graph.tail[e]], "head": graph.node_ids[graph.head[e]]}
                  for e, eid in enumerate(graph.edge_ids)],
        "source": graph.node_ids[graph.source],
        "target": graph.node_ids[graph.target],
    }


def load_graph(path) -> RoadGraph:
    path = Path(path)
    if path.is_dir():
        with open(path / "nodes.csv", newline="") as fh:
            nodes = [{"id": _parse_id(r["id"]), "x": r["x"], "y": r["y"]} for r in csv.DictReader(fh)]
        with open(path / "edges.csv", newline="") as fh:
            edges = [{"id": _parse_id(r["id"]), "tail": _parse_id(r["tail"]), "head": _parse_id(r["head"])}
                     for r in csv.DictReader(fh)]
        ends = json.loads((path / "endpoints.json").read_text())
        return graph_from_records(nodes, edges, ends["source"], ends["target"])
    data = json.loads(path.read_text())
    return graph_from_records(data["nodes"], data["edges"], data["source"], data["target"])


def save_graph(graph: RoadGraph, path) -> None:
    Path(path).write_text(json.dumps(graph_to_dict(graph), indent=1) + "\n")


def load_scenarios(path, graph: RoadGraph, invert: bool = False) -> ScenarioSet:
    """Read the scenario CSV; ``invert`` turns velocities into 1/velocity costs."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = [_parse_id(h) for h in next(reader)]
        rows = [[float(v) for v in row] for row in reader if row]
    pos = {eid: c for c, eid in enumerate(header)}
    missing = [eid for eid in graph.edge_ids if eid not in pos]
    if missing:
        raise ValueError(f"scenario file lacks edges {missing[:5]}")
    w = np.array(rows)[:, [pos[eid] for eid in graph.edge_ids]]
    return ScenarioSet(1.0 / w if invert else w)


def save_scenarios(scenarios: ScenarioSet, graph: RoadGraph, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(graph.edge_ids)
        for row in scenarios.weights:
            writer.writerow([repr(float(v)) for v in row])


def resolve_data_dir(flag: str | None) -> Path | None:
    raw = flag or os.environ.get(DATA_DIR_ENV)
    return Path(raw) if raw else None


def load_data_dir(path, invert: bool = False) -> tuple[RoadGraph, ScenarioSet]:
    path = Path(path)
    graph = load_graph(path / "graph.json" if (path / "graph.json").exists() else path)
    return graph, load_scenarios(path / "scenarios.csv", graph, invert=invert)
