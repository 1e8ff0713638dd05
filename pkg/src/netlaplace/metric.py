"""Resistance path metric, finite truncations, and cut witnesses.

The completion of an infinite graph is approached through truncations: the
ball of a given hop radius around the source root, whose outermost vertices
(the frontier) are tagged with the boundary point of the canonical ray through
them.
"""
from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    BadDepth,
    Disconnected,
    DominanceViolated,
    EdgeNotInGraph,
    NotSeparable,
    WitnessOutsideTruncation,
)
from .generators import BoundaryPoint, FiniteSource, GraphSource
from .graph import EdgeRecord, WeightedGraph, build_finite, parse_scheme, vertex_label

#: Serialised stand-in for an infinite distance.
UNREACHABLE = "unreachable"


# -- truncations -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Truncation:
    """Finite window onto a source.

    Attributes
    ----------
    host : WeightedGraph
        Induced subgraph on all vertices within ``depth`` hops of the root.
    frontier : dict
        Host vertices with unexplored source neighbors, mapped to the boundary
        point of the canonical ray through them (None for sources without rays).
    cut_conductance : dict
        For each frontier vertex, the summed conductance of its truncated edges
        to non-leaf neighbors. Absorbing boundary conditions attach this as a
        zero-valued virtual neighbor.
    boundary_vertices : tuple
        Host vertices of degree one in the source. With ``lumped=True`` each
        group of parallel leaves is a single vertex carrying their combined
        conductance.
    """

    host: WeightedGraph
    depth: int | None
    frontier: dict
    cut_conductance: dict
    boundary_vertices: tuple
    hops: dict
    source: GraphSource | None = None
    lumped: bool = False
    _boundary_set: frozenset = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_boundary_set", frozenset(self.boundary_vertices))

    @classmethod
    def from_graph(cls, graph: WeightedGraph) -> "Truncation":
        """Whole finite graph: no frontier, degree-one vertices are boundary."""
        deg = graph.degree()
        bverts = tuple(v for v, d in zip(graph.vertices, deg) if d == 1)
        hops = {}
        if graph.n_vertices:
            hops = dict(zip(graph.vertices, _hop_counts(graph, 0)))
        return cls(graph, None, {}, {}, bverts, hops, FiniteSource(graph))

    @property
    def acyclic(self) -> bool:
        return bool(self.source is not None and self.source.acyclic)

    def is_boundary_vertex(self, v) -> bool:
        return v in self._boundary_set

    @property
    def interior(self) -> list:
        """Host vertices that are neither frontier nor degree-one boundary."""
        return [v for v in self.host.vertices
                if v not in self.frontier and v not in self._boundary_set]

    @property
    def classes(self) -> list:
        """Distinct boundary points met by the frontier, in host order."""
        out = []
        for p in self.frontier.values():
            if p is not None and p not in out:
                out.append(p)
        return out

    def frontier_of(self, point) -> list:
        return [v for v, p in self.frontier.items() if p == point]


def _hop_counts(graph, start):
    hops = np.full(graph.n_vertices, -1, dtype=int)
    hops[start] = 0
    queue = deque([start])
    while queue:
        i = queue.popleft()
        for j, _ in graph.adjacency[i]:
            if hops[j] < 0:
                hops[j] = hops[i] + 1
                queue.append(j)
    return hops.tolist()


def truncate(source, depth: int, scheme=None, lump_leaves: bool = False) -> Truncation:
    """Cut the ``depth``-hop ball around the source root out of ``source``.

    With ``lump_leaves`` the degree-one neighbors of each vertex are replaced by
    one vertex per resistance group, joined by the parallel resistance. Harmonic
    values at the remaining vertices are unchanged as long as every leaf of a
    group carries the same datum; vertex weights of lumped vertices are not
    meaningful.
    """
    if isinstance(source, WeightedGraph):
        source = FiniteSource(source)
    if int(depth) != depth or depth < 1:
        raise BadDepth(f"depth must be an integer >= 1, got {depth}")
    depth = int(depth)
    scheme = parse_scheme(scheme)
    root = source.root
    hops = {root: 0}
    order = [root]
    extra_edges = []
    bundles = []
    queue = deque([root])
    explore = source.core_neighbors if lump_leaves else source.neighbors
    while queue:
        v = queue.popleft()
        h = hops[v]
        if h == depth:
            continue
        for w, _ in explore(v):
            if w not in hops:
                hops[w] = h + 1
                order.append(w)
                queue.append(w)
        if lump_leaves:
            for gid, count, r in source.leaf_groups(v):
                hops[gid] = h + 1
                order.append(gid)
                bundles.append(gid)
                extra_edges.append(EdgeRecord(v, gid, r / count))

    pos = {v: i for i, v in enumerate(order)}
    lumped = set(bundles)
    edges = []
    frontier = {}
    cut = {}
    for v in order:
        if v in lumped:
            continue
        unexplored = False
        c_out = 0.0
        for w, r in explore(v):
            if w in pos:
                if pos[w] > pos[v]:
                    edges.append(EdgeRecord(v, w, r))
            else:
                unexplored = True
                if lump_leaves or source.degree(w) > 1:
                    c_out += 1.0 / r
        if lump_leaves and hops[v] == depth and source.leaf_groups(v):
            unexplored = True
        if unexplored:
            frontier[v] = source.boundary_class(v)
            cut[v] = c_out
    edges.extend(extra_edges)
    host = build_finite(edges, scheme, vertices=order)
    if lump_leaves:
        bverts = tuple(bundles)
    else:
        bverts = tuple(v for v in order if v not in frontier and source.degree(v) == 1)
    return Truncation(host, depth, frontier, cut, bverts, hops, source, lump_leaves)


# -- distances -------------------------------------------------------------

def distances_from(graph: WeightedGraph, u) -> np.ndarray:
    """Single-source shortest path lengths (``inf`` where unreachable)."""
    s = graph.position(u)
    dist = np.full(graph.n_vertices, math.inf)
    dist[s] = 0.0
    done = np.zeros(graph.n_vertices, dtype=bool)
    # ties resolve by vertex position, i.e. declared vertex order
    heap = [(0.0, s)]
    while heap:
        d, i = heapq.heappop(heap)
        if done[i]:
            continue
        done[i] = True
        for j, k in graph.adjacency[i]:
            nd = d + graph.resistance[k]
            if nd < dist[j]:
                dist[j] = nd
                heapq.heappush(heap, (nd, j))
    return dist


def distance(graph: WeightedGraph, u, v) -> float:
    """Resistance path distance; ``math.inf`` if ``u`` and ``v`` are disconnected."""
    t = graph.position(v)
    return float(distances_from(graph, u)[t])


def distance_matrix(graph: WeightedGraph) -> np.ndarray:
    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import dijkstra

    n = graph.n_vertices
    w = csr_matrix((graph.resistance, (graph.heads, graph.tails)), shape=(n, n))
    D = dijkstra(w, directed=False)
    # the two search directions can round differently; both are path lengths
    return np.minimum(D, D.T)


def diameter(graph: WeightedGraph) -> float:
    """Largest pairwise distance of a connected finite graph."""
    if graph.n_vertices <= 1:
        return 0.0
    d = distance_matrix(graph)
    if not np.all(np.isfinite(d)):
        raise Disconnected("diameter of a disconnected graph is infinite")
    return float(d.max())


def encode_distance(d: float):
    """JSON-safe distance: finite floats pass, infinity becomes ``"unreachable"``."""
    return d if math.isfinite(d) else UNREACHABLE


# -- cuts ------------------------------------------------------------------

def _edge_positions(graph, W):
    out = set()
    for e in W:
        if isinstance(e, EdgeRecord):
            u, v = e.u, e.v
        else:
            u, v = tuple(e)
        k = graph.edge_index(u, v)
        if k is None:
            raise EdgeNotInGraph(f"{vertex_label(u)}-{vertex_label(v)}")
        out.add(k)
    return out


def components_after_cut(graph: WeightedGraph, W=()) -> np.ndarray:
    """Component label per vertex once the edges ``W`` are deleted.

    Labels count up from 0 in order of each component's first vertex.
    """
    removed = _edge_positions(graph, W)
    labels = np.full(graph.n_vertices, -1, dtype=int)
    current = 0
    for s in range(graph.n_vertices):
        if labels[s] >= 0:
            continue
        labels[s] = current
        stack = [s]
        while stack:
            i = stack.pop()
            for j, k in graph.adjacency[i]:
                if k not in removed and labels[j] < 0:
                    labels[j] = current
                    stack.append(j)
        current += 1
    return labels


def avoiding_path(graph: WeightedGraph, u, v, W=()):
    """Shortest-hop path from ``u`` to ``v`` that uses no edge of ``W``, or None."""
    removed = _edge_positions(graph, W)
    s, t = graph.position(u), graph.position(v)
    prev = {s: None}
    queue = deque([s])
    while queue:
        i = queue.popleft()
        if i == t:
            path = []
            while i is not None:
                path.append(graph.vertices[i])
                i = prev[i]
            return path[::-1]
        for j, k in graph.adjacency[i]:
            if k not in removed and j not in prev:
                prev[j] = i
                queue.append(j)
    return None


@dataclass(frozen=True)
class CutWitness:
    """Finite edge set claimed to separate two boundary points."""

    edges: tuple
    side_a: str = "a"
    side_b: str = "b"

    def __post_init__(self):
        norm = []
        for e in self.edges:
            if isinstance(e, EdgeRecord):
                e = (e.u, e.v)
            norm.append(tuple(e))
        if not norm:
            raise ValueError("a cut witness needs at least one edge")
        object.__setattr__(self, "edges", tuple(norm))

    def to_json(self) -> dict:
        return {"edges": [[vertex_label(u), vertex_label(v)] for u, v in self.edges],
                "side_a": self.side_a, "side_b": self.side_b}


@dataclass(frozen=True)
class CutVerdict:
    status: str  # "separated" | "not-separated" | "unknown-at-depth"
    depth: int
    path: tuple | None = None

    SEPARATED = "separated"
    NOT_SEPARATED = "not-separated"
    UNKNOWN = "unknown-at-depth"

    def to_json(self) -> dict:
        out = {"status": self.status, "depth": self.depth}
        if self.path is not None:
            out["path"] = [vertex_label(v) for v in self.path]
        return out


def verify_cut_witness(source: GraphSource, witness, x: BoundaryPoint, y: BoundaryPoint,
                       max_depth: int, truncation: Truncation | None = None) -> CutVerdict:
    """Check whether every path between the rays of ``x`` and ``y`` crosses ``witness``.

    A W-avoiding path inside the truncation is a definite counterexample. A
    clean split is only conclusive for acyclic sources, since otherwise a
    connection might exist beyond the truncation.
    """
    if not isinstance(witness, CutWitness):
        witness = CutWitness(tuple(witness))
    tr = truncation if truncation is not None else truncate(source, max_depth)
    host = tr.host
    for u, v in witness.edges:
        if not host.has_edge(u, v):
            raise WitnessOutsideTruncation(
                f"edge {vertex_label(u)}-{vertex_label(v)} is not inside the depth-{max_depth} host")
    xv = source.ray_vertex(x, max_depth)
    yv = source.ray_vertex(y, max_depth)
    for p, w in ((x, xv), (y, yv)):
        if w not in host.index:
            raise WitnessOutsideTruncation(f"ray of {p} leaves the truncation")
    path = avoiding_path(host, xv, yv, witness.edges)
    if path is not None:
        return CutVerdict(CutVerdict.NOT_SEPARATED, max_depth, tuple(path))
    if source.acyclic:
        return CutVerdict(CutVerdict.SEPARATED, max_depth)
    return CutVerdict(CutVerdict.UNKNOWN, max_depth)


# -- eventually flat functions ---------------------------------------------

@dataclass(frozen=True, eq=False)
class FlatFunction:
    """Vertex function that changes across finitely many edges (``witness``)."""

    graph: WeightedGraph
    values: np.ndarray
    witness: tuple
    cut: tuple = ()

    @classmethod
    def from_values(cls, graph, values, cut=()):
        values = graph.vector(values)
        jumps = np.flatnonzero(values[graph.heads] != values[graph.tails])
        witness = tuple((graph.edges[k].u, graph.edges[k].v) for k in jumps)
        return cls(graph, values, witness, tuple(cut))

    def check(self):
        """Raise AssertionError unless values agree across every non-witness edge."""
        g = self.graph
        marked = {frozenset(e) for e in self.witness}
        for k, e in enumerate(g.edges):
            same = self.values[g.heads[k]] == self.values[g.tails[k]]
            if not same and e.key() not in marked:
                raise AssertionError(f"value jumps across unlisted edge {vertex_label(e.u)}-"
                                     f"{vertex_label(e.v)}")
        return True

    def to_json(self) -> dict:
        return {"values": {vertex_label(v): float(x)
                           for v, x in zip(self.graph.vertices, self.values)},
                "witness": [[vertex_label(u), vertex_label(v)] for u, v in self.witness]}


def separate_compact_sets(graph: WeightedGraph, A, B) -> FlatFunction:
    """0/1 flat function equal to 1 on ``A`` and 0 on ``B``.

    A minimum-cardinality edge cut between ``A`` and ``B`` is found by max-flow;
    the function is the indicator of everything still reachable from ``A``,
    which puts the cut as close to ``A`` as possible.
    """
    import networkx as nx

    A, B = list(A), list(B)
    if not A or not B:
        raise NotSeparable("both sets must be nonempty")
    for v in A + B:
        graph.position(v)
    if set(A) & set(B):
        raise NotSeparable("the sets intersect")
    G = nx.Graph()
    G.add_nodes_from(range(graph.n_vertices))
    G.add_edges_from((int(i), int(j), {"capacity": 1.0}) for i, j in zip(graph.heads, graph.tails))
    src, snk = object(), object()
    for v in A:
        G.add_edge(src, graph.index[v])
    for v in B:
        G.add_edge(snk, graph.index[v])
    value, (reach, _) = nx.minimum_cut(G, src, snk)
    if not math.isfinite(value):
        raise NotSeparable("no finite cut separates the sets")
    values = np.zeros(graph.n_vertices)
    for i in reach:
        if i is not src:
            values[i] = 1.0
    cut = [(e.u, e.v) for k, e in enumerate(graph.edges)
           if values[graph.heads[k]] != values[graph.tails[k]]]
    return FlatFunction.from_values(graph, values, cut)


# -- weight comparison -----------------------------------------------------

def metric_dominance_check(graph: WeightedGraph, r0, r1, sample_pairs=None, witnesses=(),
                           rtol: float = 1e-12) -> dict:
    """Check that pointwise smaller resistances give pointwise smaller distances.

    ``r0`` and ``r1`` are per-edge resistance arrays on ``graph``'s edge list.
    ``witnesses`` are cut witnesses whose edges must keep positive length.
    """
    r0 = np.asarray(r0, dtype=float)
    r1 = np.asarray(r1, dtype=float)
    if r0.shape != (graph.n_edges,) or r1.shape != (graph.n_edges,):
        raise ValueError("resistance assignments must match the edge list")
    bad = np.flatnonzero(r1 > r0)
    if bad.size:
        e = graph.edges[bad[0]]
        raise DominanceViolated("R1 exceeds R0 on an edge", (e.u, e.v))
    g0, g1 = graph.with_resistances(r0), graph.with_resistances(r1)
    if sample_pairs is None:
        sample_pairs = [(u, v) for i, u in enumerate(graph.vertices)
                        for v in graph.vertices[i + 1:]]
    cache0, cache1 = {}, {}
    worst, best = 0.0, math.inf
    for u, v in sample_pairs:
        if u not in cache0:
            cache0[u] = distances_from(g0, u)
            cache1[u] = distances_from(g1, u)
        j = graph.position(v)
        d0, d1 = cache0[u][j], cache1[u][j]
        if d1 > d0 * (1 + rtol):
            raise DominanceViolated(f"d1={d1} > d0={d0}", (u, v))
        if d0 > 0:
            worst = max(worst, d1 / d0)
            best = min(best, d1 / d0)
    witness_min = []
    for w in witnesses:
        edges = w.edges if isinstance(w, CutWitness) else tuple(w)
        ks = _edge_positions(graph, edges)
        m = float(min(r1[k] for k in ks))
        if not m > 0:
            raise DominanceViolated("witness edge lost positive length under R1", edges)
        witness_min.append(m)
    return {"pairs": len(sample_pairs), "max_ratio": worst, "min_ratio": best,
            "witness_min_r1": witness_min, "passed": True}
