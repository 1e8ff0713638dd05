"""Finite edge-weighted graphs with vertex weights.

Edge weights are resistances (lengths); conductances are their reciprocals.
Vertices are arbitrary hashable addresses. Integer positions follow the order
the vertices were declared in, and every array-valued vertex function in the
package is aligned with that order.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Hashable, Iterable, Mapping

import numpy as np

from .exceptions import (
    DomainMismatch,
    DuplicateEdge,
    GraphError,
    IsolatedVertexSpecMismatch,
    NonPositiveResistance,
    SelfLoop,
    UnknownVertex,
)

Vertex = Hashable


def vertex_label(v) -> str:
    """Stable string form of a vertex address, used in every file format.

    Tree addresses (tuples of child indices) become ``r.0.1``; tagged tuples
    such as ``("u", 3, 5)`` become ``u:3:5``.
    """
    if isinstance(v, str):
        return v
    if isinstance(v, tuple):
        if not v:
            return "r"
        if isinstance(v[0], str):
            return ":".join(vertex_label(x) for x in v)
        if all(isinstance(x, (int, np.integer)) for x in v):
            return "r." + ".".join(str(int(x)) for x in v)
        return "(" + ",".join(vertex_label(x) for x in v) + ")"
    return str(v)


def parse_vertex_label(label: str):
    """Inverse of :func:`vertex_label` for generator addresses.

    Labels that match no generator pattern come back unchanged, so file-based
    graphs keep their opaque string ids.
    """
    label = label.strip()
    if label == "r":
        return ()
    if label.startswith("r.") and all(p.isdigit() for p in label[2:].split(".")):
        return tuple(int(p) for p in label[2:].split("."))
    if ":" in label:
        head, *rest = label.split(":")
        if rest and all(p.lstrip("-").isdigit() for p in rest):
            return (head, *[int(p) for p in rest])
    if label.isdigit():
        return int(label)
    return label


@dataclass(frozen=True)
class EdgeRecord:
    u: Vertex
    v: Vertex
    resistance: float

    @property
    def conductance(self) -> float:
        return 1.0 / self.resistance

    def key(self) -> frozenset:
        return frozenset((self.u, self.v))

    def other(self, w):
        if w == self.u:
            return self.v
        if w == self.v:
            return self.u
        raise UnknownVertex(w)


class WeightedGraph:
    """Immutable finite graph with resistances and vertex weights ``mu``.

    Build instances with :func:`build_finite`; the constructor assumes its
    inputs were already validated.
    """

    def __init__(self, vertices, mu, edges):
        self.vertices = tuple(vertices)
        self.index = {v: i for i, v in enumerate(self.vertices)}
        self.edges = tuple(edges)
        n, m = len(self.vertices), len(self.edges)
        self.mu = np.asarray(mu, dtype=float).reshape(n)
        self.mu.setflags(write=False)
        self.heads = np.fromiter((self.index[e.u] for e in self.edges), dtype=np.intp, count=m)
        self.tails = np.fromiter((self.index[e.v] for e in self.edges), dtype=np.intp, count=m)
        self.resistance = np.fromiter((e.resistance for e in self.edges), dtype=float, count=m)
        self.conductance = 1.0 / self.resistance
        for arr in (self.heads, self.tails, self.resistance, self.conductance):
            arr.setflags(write=False)
        adjacency = [[] for _ in range(n)]
        for k, (i, j) in enumerate(zip(self.heads, self.tails)):
            adjacency[i].append((int(j), k))
            adjacency[j].append((int(i), k))
        self.adjacency = tuple(tuple(a) for a in adjacency)
        self._edge_lookup = {e.key(): k for k, e in enumerate(self.edges)}

    def __repr__(self):
        return f"WeightedGraph(n_vertices={self.n_vertices}, n_edges={self.n_edges})"

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def degree(self, v=None):
        if v is None:
            return np.array([len(a) for a in self.adjacency], dtype=int)
        return len(self.adjacency[self.position(v)])

    def position(self, v) -> int:
        try:
            return self.index[v]
        except (KeyError, TypeError):
            raise UnknownVertex(v) from None

    def neighbors(self, v):
        """``[(neighbor, resistance), ...]`` in edge-list order."""
        i = self.position(v)
        return [(self.vertices[j], self.edges[k].resistance) for j, k in self.adjacency[i]]

    def edge_index(self, u, v) -> int | None:
        return self._edge_lookup.get(frozenset((u, v)))

    def has_edge(self, u, v) -> bool:
        return frozenset((u, v)) in self._edge_lookup

    def conductance_sums(self) -> np.ndarray:
        """Total incident conductance at every vertex."""
        n = self.n_vertices
        return (np.bincount(self.heads, self.conductance, minlength=n)
                + np.bincount(self.tails, self.conductance, minlength=n))

    def vector(self, f, name="f") -> np.ndarray:
        """Coerce a vertex function (array or ``{vertex: value}``) to an array."""
        if isinstance(f, Mapping):
            missing = [v for v in self.vertices if v not in f]
            if missing:
                raise DomainMismatch(f"{name} is undefined at {vertex_label(missing[0])}")
            arr = np.array([f[v] for v in self.vertices], dtype=float)
        else:
            arr = np.asarray(f, dtype=float)
            if arr.shape != (self.n_vertices,):
                raise DomainMismatch(
                    f"{name} has shape {arr.shape}, host has {self.n_vertices} vertices")
        if not np.all(np.isfinite(arr)):
            raise DomainMismatch(f"{name} has non-finite values")
        return arr

    def as_dict(self, values) -> dict:
        return dict(zip(self.vertices, np.asarray(values, dtype=float).tolist()))

    def with_mu(self, mu) -> "WeightedGraph":
        """Same edges, new vertex weights (a scheme or an array)."""
        if isinstance(mu, str):
            mu = parse_scheme(mu)
        if isinstance(mu, VertexWeightScheme):
            mu = mu.weights(self.vertices, self.edges)
        mu = np.asarray(mu, dtype=float)
        if mu.shape != (self.n_vertices,) or np.any(~(mu > 0)):
            raise GraphError("vertex weights must be positive, one per vertex")
        return WeightedGraph(self.vertices, mu, self.edges)

    def with_resistances(self, resistance) -> "WeightedGraph":
        resistance = np.asarray(resistance, dtype=float)
        edges = [EdgeRecord(e.u, e.v, float(r)) for e, r in zip(self.edges, resistance)]
        _check_edges(edges)
        return WeightedGraph(self.vertices, self.mu, edges)

    def subgraph(self, keep) -> "WeightedGraph":
        """Induced subgraph on ``keep`` (order preserved), same ``mu`` values."""
        kept = set(keep)
        keep = [v for v in self.vertices if v in kept]
        edges = [e for e in self.edges if e.u in kept and e.v in kept]
        mu = [self.mu[self.index[v]] for v in keep]
        return WeightedGraph(keep, mu, edges)

    def to_json(self) -> dict:
        return {
            "vertices": [{"id": vertex_label(v), "mu": float(m)}
                         for v, m in zip(self.vertices, self.mu)],
            "edges": [{"u": vertex_label(e.u), "v": vertex_label(e.v), "r": e.resistance}
                      for e in self.edges],
        }


# -- vertex weight schemes -------------------------------------------------

class VertexWeightScheme:
    """Rule turning an edge list into strictly positive vertex weights."""

    name = "scheme"

    def weights(self, vertices, edges) -> np.ndarray:
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}()"


def _incident_sums(vertices, edges, values):
    index = {v: i for i, v in enumerate(vertices)}
    out = np.zeros(len(vertices))
    for e, x in zip(edges, values):
        out[index[e.u]] += x
        out[index[e.v]] += x
    return out


class HalfEdgeLength(VertexWeightScheme):
    """Half the summed lengths of incident edges; total weight equals volume."""

    name = "mu0"

    def weights(self, vertices, edges):
        return 0.5 * _incident_sums(vertices, edges, [e.resistance for e in edges])


class ConductanceSum(VertexWeightScheme):
    """Sum of incident conductances (the random-walk weighting)."""

    name = "deg"

    def weights(self, vertices, edges):
        return _incident_sums(vertices, edges, [1.0 / e.resistance for e in edges])


class Constant(VertexWeightScheme):
    name = "const"

    def __init__(self, c=1.0):
        if not c > 0:
            raise GraphError("constant vertex weight must be positive")
        self.c = float(c)

    def weights(self, vertices, edges):
        return np.full(len(vertices), self.c)

    def __repr__(self):
        return f"Constant({self.c})"


class Explicit(VertexWeightScheme):
    name = "explicit"

    def __init__(self, table: Mapping, default: VertexWeightScheme | None = None):
        self.table = dict(table)
        self.default = default

    def weights(self, vertices, edges):
        fallback = None
        if self.default is not None:
            fallback = self.default.weights(vertices, edges)
        out = np.empty(len(vertices))
        for i, v in enumerate(vertices):
            if v in self.table:
                out[i] = self.table[v]
            elif vertex_label(v) in self.table:
                out[i] = self.table[vertex_label(v)]
            elif fallback is not None:
                out[i] = fallback[i]
            else:
                raise IsolatedVertexSpecMismatch(f"no weight given for {vertex_label(v)}")
        return out


def parse_scheme(spec) -> VertexWeightScheme:
    """Accept a scheme object or one of ``mu0``, ``deg``, ``const``, ``const:c``."""
    if isinstance(spec, VertexWeightScheme):
        return spec
    if spec is None:
        return HalfEdgeLength()
    name, _, arg = str(spec).partition(":")
    name = name.strip().lower()
    if name in ("mu0", "half-edge-length", "halfedgelength"):
        return HalfEdgeLength()
    if name in ("deg", "conductance-sum", "conductancesum"):
        return ConductanceSum()
    if name in ("const", "constant"):
        return Constant(float(arg) if arg else 1.0)
    raise GraphError(f"unknown vertex weight scheme {spec!r}")


# -- construction ----------------------------------------------------------

def _check_edges(edges):
    seen = set()
    for e in edges:
        if e.u == e.v:
            raise SelfLoop(f"self-loop at {vertex_label(e.u)}")
        if not (e.resistance > 0) or not math.isfinite(e.resistance):
            raise NonPositiveResistance(
                f"edge {vertex_label(e.u)}-{vertex_label(e.v)} has resistance {e.resistance}")
        k = e.key()
        if k in seen:
            raise DuplicateEdge(f"parallel edge {vertex_label(e.u)}-{vertex_label(e.v)}")
        seen.add(k)


def _as_edge(item) -> EdgeRecord:
    if isinstance(item, EdgeRecord):
        return item
    u, v, r = item
    return EdgeRecord(u, v, float(r))


def build_finite(edges: Iterable, scheme=None, vertices=None) -> WeightedGraph:
    """Validate an edge list and attach vertex weights.

    ``edges`` holds :class:`EdgeRecord` or ``(u, v, r)`` triples. Vertex order
    is ``vertices`` when given, otherwise order of first appearance. Parallel
    edges are rejected, not merged.
    """
    edges = [_as_edge(e) for e in edges]
    _check_edges(edges)
    incident = {}
    for e in edges:
        incident.setdefault(e.u, None)
        incident.setdefault(e.v, None)
    if vertices is None:
        vertices = list(incident)
    else:
        vertices = list(vertices)
        if len(set(vertices)) != len(vertices):
            raise GraphError("duplicate vertex ids")
        lonely = [v for v in vertices if v not in incident]
        if lonely:
            raise IsolatedVertexSpecMismatch(f"vertex {vertex_label(lonely[0])} has no edges")
        extra = [v for v in incident if v not in set(vertices)]
        if extra:
            raise IsolatedVertexSpecMismatch(
                f"edge endpoint {vertex_label(extra[0])} missing from vertex list")
    mu = parse_scheme(scheme).weights(vertices, edges)
    if np.any(~(mu > 0)):
        raise GraphError("vertex weight scheme produced a non-positive weight")
    return WeightedGraph(vertices, mu, edges)


def volume(graph: WeightedGraph) -> float:
    """Sum of edge lengths."""
    return float(np.sum(graph.resistance)) if graph.n_edges else 0.0


# -- JSON interchange ------------------------------------------------------

def graph_from_json(data, scheme=None) -> WeightedGraph:
    """Read the graph interchange format.

    Per-vertex ``mu`` entries override the scheme; vertices without one take
    the scheme value.
    """
    if isinstance(data, (str, bytes)):
        data = json.loads(data)
    try:
        edges = [EdgeRecord(str(e["u"]), str(e["v"]), float(e["r"])) for e in data["edges"]]
        declared = data.get("vertices")
    except (KeyError, TypeError) as exc:
        raise GraphError(f"malformed graph JSON: {exc}") from None
    vertices = None
    table = {}
    if declared:
        vertices = [str(item["id"]) for item in declared]
        table = {str(item["id"]): float(item["mu"]) for item in declared
                 if item.get("mu") is not None}
    base = parse_scheme(scheme)
    if table:
        base = Explicit(table, default=base)
    return build_finite(edges, base, vertices=vertices)


def load_graph(path, scheme=None) -> WeightedGraph:
    with open(path) as fh:
        return graph_from_json(json.load(fh), scheme)


def save_graph(graph: WeightedGraph, path):
    with open(path, "w") as fh:
        json.dump(graph.to_json(), fh, indent=1)
        fh.write("\n")
