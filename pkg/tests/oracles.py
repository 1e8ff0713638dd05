"""Reference computations that share no code with the package.

Each works from a plain edge list ``[(u, v, r), ...]`` and builds what it
needs with dictionaries, networkx or dense scipy routines.
"""
from __future__ import annotations

import math
from fractions import Fraction

import networkx as nx
import numpy as np
import scipy.linalg as sla


def edge_list(graph):
    return [(e.u, e.v, float(e.resistance)) for e in graph.edges]


def nx_graph(edges):
    G = nx.Graph()
    for u, v, r in edges:
        G.add_edge(u, v, r=r)
    return G


def dijkstra_all(edges, vertices):
    """Distance table via networkx, indexed like ``vertices``."""
    G = nx_graph(edges)
    G.add_nodes_from(vertices)
    pos = {v: i for i, v in enumerate(vertices)}
    D = np.full((len(vertices), len(vertices)), np.inf)
    for u, dist in nx.all_pairs_dijkstra_path_length(G, weight="r"):
        for v, d in dist.items():
            D[pos[u], pos[v]] = d
    return D


def stiffness_dense(edges, vertices):
    """Dense ``K`` with ``f @ K @ g = sum C df dg``, filled edge by edge."""
    pos = {v: i for i, v in enumerate(vertices)}
    K = np.zeros((len(vertices), len(vertices)))
    for u, v, r in edges:
        i, j = pos[u], pos[v]
        c = 1.0 / r
        K[i, i] += c
        K[j, j] += c
        K[i, j] -= c
        K[j, i] -= c
    return K


def energy_loop(edges, f):
    """``sum over edges C (f(u) - f(v))^2`` with ``f`` a dict."""
    return math.fsum((f[u] - f[v]) ** 2 / r for u, v, r in edges)


def harmonic_dense(edges, vertices, pinned):
    """Solve for the free values by a dense generic linear solve."""
    K = stiffness_dense(edges, vertices)
    free = [i for i, v in enumerate(vertices) if v not in pinned]
    fixed = [i for i, v in enumerate(vertices) if v in pinned]
    g = np.array([pinned[vertices[i]] for i in fixed])
    x = np.linalg.solve(K[np.ix_(free, free)], -K[np.ix_(free, fixed)] @ g)
    out = np.empty(len(vertices))
    out[fixed] = g
    out[free] = x
    return out


def generalized_lambda_min(K, mu):
    """Smallest ``lambda`` with ``K x = lambda M x`` by the generalized eigensolver."""
    return float(sla.eigh(K, np.diag(mu), eigvals_only=True)[0])


def heat_expm(K, mu, p0, t):
    """``exp(-t M^-1 K) p0`` by dense Pade exponentiation."""
    L = K / np.asarray(mu)[:, None]
    return sla.expm(-t * L) @ np.asarray(p0, dtype=float)


def path_crosses_everywhere(edges, x, y, W):
    """Exhaustive: does every simple ``x``-``y`` path use an edge of ``W``?"""
    G = nx_graph(edges)
    cut = {frozenset(e) for e in W}
    for path in nx.all_simple_paths(G, x, y):
        if not any(frozenset(p) in cut for p in zip(path, path[1:])):
            return False
    return True


# -- spine with pendants -----------------------------------------------------

SQRT2 = math.sqrt(2.0)
ROOTS = (1 + SQRT2 / 2, 1 - SQRT2 / 2)


def spine_values_exact(N):
    """Exact spine values with pendants 0 and ``f_N = 1``.

    Interior balance ``4 f_n = f_{n-1} + 2 f_{n+1}`` and root balance
    ``3 f_0 = 2 f_1`` determine the profile up to scale; iterate it forward
    in rationals and normalise.
    """
    f = [Fraction(2), Fraction(3)]
    for n in range(1, N):
        f.append((4 * f[n] - f[n - 1]) / 2)
    scale = f[N]
    return [x / scale for x in f[: N + 1]]


def spine_root_closed_form(N):
    """``f(v_0; N)`` from ``f_n = A r_+^n + B r_-^n``."""
    rp, rm = ROOTS
    # A + B = (2/3)(A rp + B rm)  ->  A (1 - 2rp/3) = -B (1 - 2rm/3)
    a = -(1 - 2 * rm / 3)
    b = 1 - 2 * rp / 3
    scale = a * rp**N + b * rm**N
    return (a + b) / scale
