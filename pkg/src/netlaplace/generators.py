"""Lazy sources for (possibly infinite) locally finite weighted graphs.

A source answers neighbor queries on demand; finite windows onto it are cut
out by :func:`netlaplace.metric.truncate`. Resistances are computed from
closed forms at query time, so the same vertex gets bit-identical edges no
matter which truncation asked.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .exceptions import BadSpec, UnknownVertex
from .graph import EdgeRecord, WeightedGraph, build_finite, load_graph, vertex_label


@dataclass(frozen=True)
class BoundaryPoint:
    """A point of the completion, named by a Cauchy ray.

    The ray follows ``prefix`` and then repeats ``tail`` forever. Prefixes are
    normalised so that ``(0, 1) + (0,)*inf`` and ``(0, 1, 0) + (0,)*inf`` compare
    equal. Sources whose completion adds a single point use an empty word and
    distinguish themselves by ``family``.
    """

    prefix: tuple = ()
    tail: tuple = ()
    family: str = "tree"
    name: str = field(default="", compare=False)

    def __post_init__(self):
        prefix, tail = tuple(self.prefix), tuple(self.tail)
        while prefix and tail and prefix[-1] == tail[-1]:
            prefix = prefix[:-1]
            tail = (tail[-1],) + tail[:-1]
        object.__setattr__(self, "prefix", prefix)
        object.__setattr__(self, "tail", tail)
        if not self.name:
            if self.family == "tree":
                word = "".join(map(str, prefix)) + "(" + "".join(map(str, tail)) + ")"
                object.__setattr__(self, "name", word)
            else:
                object.__setattr__(self, "name", self.family)

    def word(self, n: int) -> tuple:
        """First ``n`` symbols of the infinite ray word."""
        if n <= len(self.prefix):
            return self.prefix[:n]
        if not self.tail:
            raise ValueError(f"boundary point {self.name} has no ray word")
        extra = n - len(self.prefix)
        reps = -(-extra // len(self.tail))
        return self.prefix + (self.tail * reps)[:extra]

    def __str__(self):
        return self.name


def tree_point(word, tail=(0,)) -> BoundaryPoint:
    """Boundary point of a tree reached by ``word`` followed by ``tail`` forever."""
    return BoundaryPoint(tuple(word), tuple(tail), "tree")


class GraphSource:
    """Deterministic neighbor oracle for a locally finite graph.

    Subclasses implement :meth:`neighbors`; the other queries have generic
    fallbacks that subclasses override when enumeration would be too costly.
    """

    root = None
    #: True when the graph has no cycles at all, which makes finite cut checks exact.
    acyclic = False
    spec = "source"

    def neighbors(self, v):
        raise NotImplementedError

    def degree(self, v) -> int:
        return len(self.neighbors(v))

    def core_neighbors(self, v):
        """Neighbors that are not degree-one boundary vertices."""
        return [(w, r) for w, r in self.neighbors(v) if self.degree(w) > 1]

    def leaf_groups(self, v):
        """Degree-one neighbors of ``v`` grouped by resistance.

        Returns ``[(group_id, count, resistance), ...]``. A group of ``count``
        parallel leaves with equal data behaves, for harmonic problems, like one
        leaf with resistance ``resistance / count``.
        """
        counts = {}
        for w, r in self.neighbors(v):
            if self.degree(w) == 1:
                counts[r] = counts.get(r, 0) + 1
        return [(("leaves", v, i), c, r) for i, (r, c) in enumerate(sorted(counts.items()))]

    def boundary_class(self, v):
        """Boundary point of the canonical ray through ``v``, or None."""
        return None

    def ray_vertex(self, point: BoundaryPoint, depth: int):
        """Vertex at hop distance ``depth`` from the root on the ray of ``point``."""
        raise NotImplementedError(f"{type(self).__name__} has no boundary rays")

    def label(self, v) -> str:
        return vertex_label(v)

    def __repr__(self):
        return f"<{type(self).__name__} {self.spec}>"


class FigureA(GraphSource):
    """Spine ``v_n`` with ``R(v_n, v_n+1) = 2**-(n+1)``; ``v_n`` carries ``2**n`` unit pendants.

    Spine vertices are ``("v", n)``, pendants ``("u", n, k)`` for ``0 <= k < 2**n``.
    """

    root = ("v", 0)
    spec = "figure-a"
    point = BoundaryPoint((), (), "spine", "v")

    def _check(self, v):
        ok = (isinstance(v, tuple) and len(v) in (2, 3) and v[0] in ("v", "u")
              and all(isinstance(x, (int, np.integer)) and x >= 0 for x in v[1:]))
        if ok and v[0] == "v" and len(v) == 2:
            return
        if ok and v[0] == "u" and len(v) == 3 and v[2] < 2 ** v[1]:
            return
        raise UnknownVertex(v)

    @staticmethod
    def spine_resistance(n: int) -> float:
        """Length of the spine edge ``v_n -- v_n+1``."""
        return 2.0 ** (-n - 1)

    def neighbors(self, v):
        self._check(v)
        if v[0] == "u":
            return [(("v", v[1]), 1.0)]
        n = v[1]
        out = []
        if n > 0:
            out.append((("v", n - 1), self.spine_resistance(n - 1)))
        out.append((("v", n + 1), self.spine_resistance(n)))
        out.extend((("u", n, k), 1.0) for k in range(2 ** n))
        return out

    def degree(self, v):
        self._check(v)
        if v[0] == "u":
            return 1
        return 2 ** v[1] + (2 if v[1] > 0 else 1)

    def core_neighbors(self, v):
        self._check(v)
        if v[0] == "u":
            return []
        n = v[1]
        out = [(("v", n - 1), self.spine_resistance(n - 1))] if n > 0 else []
        out.append((("v", n + 1), self.spine_resistance(n)))
        return out

    def leaf_groups(self, v):
        self._check(v)
        if v[0] == "u":
            return []
        return [(("u", v[1], "*"), 2 ** v[1], 1.0)]

    def boundary_class(self, v):
        self._check(v)
        return self.point if v[0] == "v" else None

    def ray_vertex(self, point, depth):
        if point != self.point:
            raise UnknownVertex(point)
        return ("v", depth)


class GeometricTree(GraphSource):
    """Complete ``b``-ary tree; edges from depth ``d`` to ``d+1`` have length ``a**(d+1)``."""

    acyclic = True
    root = ()

    def __init__(self, branching: int = 2, ratio: float = 1 / 3):
        if int(branching) != branching or branching < 2:
            raise BadSpec(f"branching must be an integer >= 2, got {branching}")
        if not 0 < ratio < 1:
            raise BadSpec(f"ratio must lie in (0, 1), got {ratio}")
        self.b = int(branching)
        self.a = float(ratio)
        self.spec = f"geometric-tree:{self.b},{self.a!r}"

    def _check(self, v):
        if not isinstance(v, tuple) or not all(
                isinstance(x, (int, np.integer)) and 0 <= x < self.b for x in v):
            raise UnknownVertex(v)

    def edge_length(self, depth: int) -> float:
        """Length of an edge joining depth ``depth - 1`` to ``depth``."""
        return self.a ** depth

    def neighbors(self, v):
        self._check(v)
        d = len(v)
        out = [(v[:-1], self.edge_length(d))] if d else []
        r = self.edge_length(d + 1)
        out.extend((v + (k,), r) for k in range(self.b))
        return out

    def degree(self, v):
        self._check(v)
        return self.b + (1 if v else 0)

    def core_neighbors(self, v):
        return self.neighbors(v)

    def leaf_groups(self, v):
        return []

    def boundary_class(self, v):
        self._check(v)
        return tree_point(v, (0,))

    def ray_vertex(self, point, depth):
        word = point.word(depth)
        self._check(word)
        return word


class SiblingTree(GeometricTree):
    """Geometric tree plus, at every depth ``n >= 1``, an edge of length ``c**n``
    joining the extremal vertices ``(0,)*n`` and ``(b-1,)*n``."""

    acyclic = False

    def __init__(self, branching: int = 2, ratio: float = 1 / 3, cross: float = 0.25):
        super().__init__(branching, ratio)
        if not 0 < cross < 1:
            raise BadSpec(f"cross-edge ratio must lie in (0, 1), got {cross}")
        self.c = float(cross)
        self.spec = f"sibling-tree:{self.b},{self.a!r},{self.c!r}"

    def _partner(self, v):
        n = len(v)
        if n == 0:
            return None
        if v == (0,) * n:
            return (self.b - 1,) * n
        if v == (self.b - 1,) * n:
            return (0,) * n
        return None

    def neighbors(self, v):
        out = super().neighbors(v)
        w = self._partner(v)
        if w is not None:
            out.append((w, self.c ** len(v)))
        return out

    def degree(self, v):
        return super().degree(v) + (self._partner(v) is not None)


class Ray(GraphSource):
    """Half-line ``0 - 1 - 2 - ...`` with ``R(n, n+1) = first * ratio**n``."""

    root = 0
    acyclic = True
    point = BoundaryPoint((), (), "ray", "end")

    def __init__(self, first: float = 1.0, ratio: float = 0.5, compact: bool = True):
        if not first > 0 or not ratio > 0:
            raise BadSpec("ray lengths must be positive")
        if compact and ratio >= 1:
            raise BadSpec(f"ray with ratio {ratio} has infinite length; pass compact=False")
        self.first = float(first)
        self.ratio = float(ratio)
        self.spec = f"ray:{self.first!r},{self.ratio!r}"

    def _check(self, v):
        if not isinstance(v, (int, np.integer)) or isinstance(v, bool) or v < 0:
            raise UnknownVertex(v)

    def edge_length(self, n: int) -> float:
        return self.first * self.ratio ** n

    def neighbors(self, v):
        self._check(v)
        out = [(v - 1, self.edge_length(v - 1))] if v > 0 else []
        out.append((v + 1, self.edge_length(v)))
        return out

    def degree(self, v):
        self._check(v)
        return 2 if v > 0 else 1

    def boundary_class(self, v):
        self._check(v)
        return self.point

    def ray_vertex(self, point, depth):
        if point != self.point:
            raise UnknownVertex(point)
        return depth


class FiniteSource(GraphSource):
    """Source view of a finite :class:`WeightedGraph`; it has no boundary rays."""

    def __init__(self, graph: WeightedGraph, spec: str = "finite"):
        self.graph = graph
        self.root = graph.vertices[0] if graph.n_vertices else None
        self.spec = spec
        from scipy.sparse.csgraph import connected_components

        ncomp = connected_components(_adjacency_matrix(graph), directed=False)[0] \
            if graph.n_vertices else 0
        self.acyclic = graph.n_edges == graph.n_vertices - ncomp

    def neighbors(self, v):
        return self.graph.neighbors(v)

    def degree(self, v):
        return self.graph.degree(v)


def _adjacency_matrix(graph):
    from scipy.sparse import coo_matrix

    n = graph.n_vertices
    return coo_matrix((np.ones(graph.n_edges), (graph.heads, graph.tails)), shape=(n, n))


# -- random finite graphs --------------------------------------------------

def random_tree(n: int, rng, r_range=(0.1, 2.0), scheme=None) -> WeightedGraph:
    """Uniform random recursive tree on ``0..n-1`` with uniform resistances."""
    rng = np.random.default_rng(rng)
    if n < 2:
        raise BadSpec("a random tree needs at least two vertices")
    lo, hi = r_range
    parents = [int(rng.integers(0, i)) for i in range(1, n)]
    rs = rng.uniform(lo, hi, size=n - 1)
    edges = [EdgeRecord(p, i, float(r)) for i, (p, r) in enumerate(zip(parents, rs), start=1)]
    return build_finite(edges, scheme, vertices=range(n))


def random_connected_graph(n: int, extra_edges: int, rng, r_range=(0.1, 2.0),
                           scheme=None) -> WeightedGraph:
    """Random tree plus ``extra_edges`` random chords (simple graph kept)."""
    rng = np.random.default_rng(rng)
    tree = random_tree(n, rng, r_range, scheme)
    edges = list(tree.edges)
    present = {e.key() for e in edges}
    lo, hi = r_range
    budget = extra_edges
    attempts = 0
    while budget and attempts < 50 * (extra_edges + 1):
        attempts += 1
        u, v = (int(x) for x in rng.integers(0, n, size=2))
        if u == v or frozenset((u, v)) in present:
            continue
        present.add(frozenset((u, v)))
        edges.append(EdgeRecord(u, v, float(rng.uniform(lo, hi))))
        budget -= 1
    return build_finite(edges, scheme, vertices=range(n))


# -- spec parsing ----------------------------------------------------------

_SPEC = re.compile(r"^\s*([a-zA-Z][\w-]*)\s*(?::\s*(.*))?$")


def _floats(arg, count, kind):
    parts = [p for p in (arg or "").split(",") if p.strip()]
    if len(parts) != count:
        raise BadSpec(f"{kind} expects {count} parameters, got {arg!r}")
    try:
        return [float(eval_fraction(p)) for p in parts]
    except ValueError:
        raise BadSpec(f"bad numeric parameter in {arg!r}") from None


def eval_fraction(text: str) -> float:
    """Parse ``0.25``, ``1/4`` or ``2^-3`` style numbers."""
    text = text.strip()
    if "/" in text:
        num, den = text.split("/", 1)
        return float(num) / float(den)
    if "^" in text:
        base, exp = text.split("^", 1)
        return float(base) ** float(exp)
    return float(text)


def instantiate_generator(spec, seed=None, scheme=None) -> GraphSource:
    """Build a source from a spec string (or dict, or an existing source).

    Recognised strings: ``figure-a``, ``geometric-tree:b,a``, ``sibling-tree:b,a,c``,
    ``ray:first,ratio``, ``random-tree:n``, ``random-graph:n,extra``, ``file:path``.
    Random kinds require ``seed``.
    """
    if isinstance(spec, GraphSource):
        return spec
    if isinstance(spec, WeightedGraph):
        return FiniteSource(spec)
    if isinstance(spec, dict):
        kind = spec.get("kind", "")
        args = ",".join(str(x) for x in spec.get("params", []))
        spec = f"{kind}:{args}" if args else kind
    m = _SPEC.match(str(spec))
    if not m:
        raise BadSpec(f"cannot parse generator spec {spec!r}")
    kind, arg = m.group(1).lower(), m.group(2)
    if kind in ("figure-a", "figurea", "figure_a"):
        return FigureA()
    if kind in ("geometric-tree", "tree"):
        b, a = _floats(arg, 2, kind)
        return GeometricTree(b, a)
    if kind == "sibling-tree":
        b, a, c = _floats(arg, 3, kind)
        return SiblingTree(b, a, c)
    if kind == "ray":
        first, ratio = _floats(arg, 2, kind)
        return Ray(first, ratio)
    if kind in ("random-tree", "random-graph"):
        if seed is None:
            raise BadSpec(f"{kind} needs an explicit seed")
        if kind == "random-tree":
            (n,) = _floats(arg, 1, kind)
            return FiniteSource(random_tree(int(n), seed, scheme=scheme), f"{kind}:{arg}")
        n, extra = _floats(arg, 2, kind)
        return FiniteSource(random_connected_graph(int(n), int(extra), seed, scheme=scheme),
                            f"{kind}:{arg}")
    if kind == "file":
        if not arg:
            raise BadSpec("file spec needs a path")
        return FiniteSource(load_graph(arg, scheme), f"file:{arg}")
    raise BadSpec(f"unknown generator kind {kind!r}")
