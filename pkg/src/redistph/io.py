"""Reading and writing graphs, plans, ensembles, diagrams and reports."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Sequence

import numpy as np

from .chains import Ensemble
from .graph_core import DualGraph, NodeRecord, Plan, build_dual_graph, validate_plan
from .persistence import INF, Diagram, DiagramPoint


def _num(x: float) -> str:
    if x == INF:
        return "inf"
    return repr(float(x))


def _parse(x: str) -> float:
    return INF if x.strip() == "inf" else float(x)


def dump_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=_default) + "\n")


def _default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (set, frozenset)):
        return sorted(o)
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


# ---------------------------------------------------------------- graphs


def graph_to_dict(g: DualGraph) -> dict:
    return {
        "nodes": [{"id": n.id, "population": n.population, "attributes": dict(n.attributes)} for n in g.nodes],
        "edges": [[g.ids[u], g.ids[v]] for u, v in g.edges],
    }


def graph_from_dict(doc: dict) -> DualGraph:
    nodes = [
        NodeRecord(str(n["id"]), int(n["population"]), {k: float(v) for k, v in n.get("attributes", {}).items()})
        for n in doc["nodes"]
    ]
    return build_dual_graph(nodes, [(str(a), str(b)) for a, b in doc["edges"]])


def load_graph(path) -> DualGraph:
    return graph_from_dict(json.loads(Path(path).read_text()))


def save_graph(g: DualGraph, path) -> None:
    Path(path).write_text(json.dumps(graph_to_dict(g), indent=1) + "\n")


# ---------------------------------------------------------------- plans


def write_plan_csv(plan: Plan, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node_id", "district"])
        for v, d in zip(plan.node_ids, plan.labels):
            w.writerow([v, int(d)])


def read_assignment_csv(path) -> dict[str, int]:
    with open(path, newline="") as fh:
        return {row["node_id"]: int(row["district"]) for row in csv.DictReader(fh)}


def read_plan_csv(g: DualGraph, path, k: int | None = None, epsilon: float = 0.02) -> Plan:
    assignment = read_assignment_csv(path)
    if k is None:
        k = max(assignment.values()) + 1
    return validate_plan(g, assignment, k, epsilon)


def write_ensemble(ensemble: Ensemble, directory) -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    names = []
    for i, plan in enumerate(ensemble.plans):
        name = f"plan_{i:06d}.csv"
        write_plan_csv(plan, d / name)
        names.append(name)
    manifest = dict(ensemble.metadata)
    manifest["plans"] = names
    dump_json(manifest, d / "manifest.json")
    return d


def read_ensemble(g: DualGraph, directory) -> Ensemble:
    d = Path(directory)
    manifest = json.loads((d / "manifest.json").read_text())
    k = int(manifest["k"])
    eps = float(manifest["epsilon"])
    plans = [read_plan_csv(g, d / name, k, eps) for name in manifest["plans"]]
    return Ensemble(plans, manifest)


# ---------------------------------------------------------------- diagrams


def write_diagram_csv(diagram: Diagram, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["birth", "death", "anchor"])
        for q in diagram.points:
            w.writerow([_num(q.birth), _num(q.death), "" if q.anchor is None else q.anchor])


def read_diagram_csv(path) -> Diagram:
    pts = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            anchor = row.get("anchor", "")
            pts.append(DiagramPoint(_parse(row["birth"]), _parse(row["death"]), int(anchor) if anchor else None))
    return Diagram(tuple(pts))


def write_overlay_csv(pooled, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["plan", "birth", "death", "anchor"])
        for plan, q in pooled:
            w.writerow([plan, _num(q.birth), _num(q.death), "" if q.anchor is None else q.anchor])


def write_matrix_csv(matrix: np.ndarray, ids: Sequence[str], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["plan", *ids])
        for name, row in zip(ids, matrix):
            w.writerow([name, *(_num(x) for x in row)])


def read_matrix_csv(path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    ids = rows[0][1:]
    return ids, np.array([[_parse(x) for x in r[1:]] for r in rows[1:]])


def write_heatmap_csv(frequency: dict[str, float] | None, ids: Sequence[str], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["unit_id", "frequency"])
        for v in ids:
            w.writerow([v, "" if frequency is None else _num(frequency[v])])


def write_trace_csv(trace, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "bottleneck"])
        for step, value in trace:
            w.writerow([step, _num(value)])


def read_trace_csv(path) -> list[tuple[int, float]]:
    with open(path, newline="") as fh:
        return [(int(r["step"]), _parse(r["bottleneck"])) for r in csv.DictReader(fh)]


def finite_or_str(x: float):
    return "inf" if x == INF else (None if isinstance(x, float) and math.isnan(x) else x)
