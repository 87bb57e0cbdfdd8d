"""Influence distances and the weighted directed influence graph."""
from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .infotransfer import TransferMatrix

SENTINEL = 1e6


@dataclass
class InfluenceGraph:
    """``dist[i, j]`` is the influence distance from node ``i`` to node ``j``.

    Entries equal to ``sentinel`` mean no edge; the diagonal is always the
    sentinel. ``transfer`` keeps the raw transfers, before thresholding.
    """

    nodes: list
    dist: np.ndarray
    transfer: np.ndarray
    beta: float = 1.0
    zero_threshold: float = 0.0
    sentinel: float = SENTINEL
    provenance: dict = field(default_factory=dict)

    def edges(self):
        """``(i, j)`` pairs with a finite (non-sentinel) distance, row-major."""
        G = len(self.nodes)
        return [(i, j) for i in range(G) for j in range(G)
                if i != j and self.dist[i, j] != self.sentinel]


def influence_distance(T: float, beta: float = 1.0, sentinel: float = SENTINEL) -> float:
    """``exp(-|T| / beta)``, or ``sentinel`` when ``T`` is zero."""
    if not beta > 0:
        raise ValueError("beta must be positive")
    a = abs(T)
    if a == 0 or not math.isfinite(a):
        return sentinel
    return math.exp(-a / beta)


def build_influence_graph(tm: TransferMatrix, beta: float = 1.0, zero_threshold: float = 0.0,
                          sentinel: float = SENTINEL) -> InfluenceGraph:
    """Map every off-diagonal transfer to a distance; ``|T| < zero_threshold`` counts as zero."""
    if zero_threshold < 0:
        raise ValueError("zero_threshold must be nonnegative")
    G = len(tm.groups)
    dist = np.full((G, G), float(sentinel))
    for i in range(G):
        for j in range(G):
            if i == j:
                continue
            t = tm.T[i, j]
            if np.isfinite(t) and abs(t) >= zero_threshold:
                dist[i, j] = influence_distance(t, beta, sentinel)
    return InfluenceGraph(tm.labels, dist, np.array(tm.T, dtype=float), float(beta),
                          float(zero_threshold), float(sentinel), dict(tm.provenance))


def _dot_id(s: str) -> str:
    return '"' + str(s).replace("\\", "\\\\").replace('"', '\\"') + '"'


def _to_dot(g: InfluenceGraph, comment) -> str:
    out = io.StringIO()
    if comment:
        out.write(f"// {comment}\n")
    out.write("digraph influence {\n")
    for node in g.nodes:
        out.write(f"  {_dot_id(node)};\n")
    for i, j in g.edges():
        d = g.dist[i, j]
        out.write(f'  {_dot_id(g.nodes[i])} -> {_dot_id(g.nodes[j])} '
                  f'[label="{d:.4f}", weight={d:.4f}];\n')
    out.write("}\n")
    return out.getvalue()


def _to_edge_csv(g: InfluenceGraph, comment) -> str:
    out = io.StringIO()
    if comment:
        out.write(f"# {comment}\n")
    out.write("src,dst,distance,transfer\n")
    for i, j in g.edges():
        out.write(f"{g.nodes[i]},{g.nodes[j]},{float(g.dist[i, j])!r},{float(g.transfer[i, j])!r}\n")
    return out.getvalue()


def _num(v):
    return None if not np.isfinite(v) else float(v)


def _to_structured(g: InfluenceGraph, comment) -> str:
    doc = {
        "nodes": list(g.nodes),
        "dist": [[float(v) for v in row] for row in g.dist],
        "transfer": [[_num(v) for v in row] for row in g.transfer],
        "beta": g.beta,
        "zero_threshold": g.zero_threshold,
        "sentinel": g.sentinel,
        "provenance": g.provenance,
    }
    if comment:
        doc["comment"] = comment
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


_EXPORTERS = {"dot": _to_dot, "edge-csv": _to_edge_csv, "structured": _to_structured}


def export_graph(g: InfluenceGraph, fmt: str = "structured", comment: str | None = None) -> str:
    """Serialize as ``dot``, ``edge-csv`` or ``structured`` (round-trippable JSON)."""
    try:
        exporter = _EXPORTERS[fmt]
    except KeyError:
        raise ValueError(f"unknown graph format {fmt!r}; expected one of {sorted(_EXPORTERS)}") \
            from None
    return exporter(g, comment)


def import_graph(text: str) -> InfluenceGraph:
    doc = json.loads(text)
    transfer = np.array([[np.nan if v is None else v for v in row] for row in doc["transfer"]],
                        dtype=float)
    return InfluenceGraph(doc["nodes"], np.array(doc["dist"], dtype=float), transfer,
                          doc["beta"], doc["zero_threshold"], doc["sentinel"],
                          doc.get("provenance", {}))
