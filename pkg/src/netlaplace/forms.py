"""Energy form, weighted Laplacian and Q-matrix of a finite weighted graph.

Vertex functions are float arrays aligned with ``graph.vertices`` (dicts are
accepted anywhere and converted). The energy is accumulated one edge at a
time, which is the same number as the symmetric double sum over vertices
with its factor one half.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .exceptions import CheckFailed, Disconnected
from .graph import WeightedGraph
from .metric import distances_from


def bilinear_form(graph: WeightedGraph, f, g=None) -> float:
    """``sum over edges of C * (f(u) - f(v)) * (g(u) - g(v))``; ``g`` defaults to ``f``."""
    f = graph.vector(f, "f")
    g = f if g is None else graph.vector(g, "g")
    df = f[graph.heads] - f[graph.tails]
    dg = g[graph.heads] - g[graph.tails]
    # df * dg first so that swapping f and g gives the identical float
    return float(np.dot(graph.conductance, df * dg))


def form_scale(graph: WeightedGraph, f, g=None) -> float:
    """Sum of absolute edge contributions, the natural scale for rounding error."""
    f = graph.vector(f, "f")
    g = f if g is None else graph.vector(g, "g")
    return float(np.sum(graph.conductance * np.abs(f[graph.heads] - f[graph.tails])
                        * np.abs(g[graph.heads] - g[graph.tails])))


def conductance_flux(graph: WeightedGraph, f) -> np.ndarray:
    """``sum_{u ~ v} C(u, v) (f(v) - f(u))`` at every vertex, before dividing by ``mu``."""
    f = graph.vector(f, "f")
    n = graph.n_vertices
    flow = graph.conductance * (f[graph.heads] - f[graph.tails])
    return np.bincount(graph.heads, flow, minlength=n) - np.bincount(graph.tails, flow, minlength=n)


def laplacian_apply(graph: WeightedGraph, f) -> np.ndarray:
    """Weighted Laplacian ``mu(v)^-1 sum_{u ~ v} C(u, v) (f(v) - f(u))``."""
    return conductance_flux(graph, f) / graph.mu


def inner(graph: WeightedGraph, f, g) -> float:
    """``<f, g>_mu``."""
    return float(np.dot(graph.vector(f) * graph.mu, graph.vector(g)))


def stiffness_matrix(graph: WeightedGraph) -> sp.csr_matrix:
    """Symmetric conductance Laplacian ``K`` with ``f @ K @ f = B(f, f)``."""
    n = graph.n_vertices
    c = graph.conductance
    rows = np.concatenate([graph.heads, graph.tails, np.arange(n)])
    cols = np.concatenate([graph.tails, graph.heads, np.arange(n)])
    vals = np.concatenate([-c, -c, graph.conductance_sums()])
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def assemble_qmatrix(graph: WeightedGraph, atol: float = 1e-12) -> sp.csr_matrix:
    """Matrix of the weighted Laplacian in the vertex basis.

    Diagonal ``mu(w)^-1 sum C(u, w)``, off-diagonal ``-mu(v)^-1 C(v, w)``. Each
    diagonal entry is summed from the same quotients that fill its row, and
    row sums are checked against ``atol`` scaled by the diagonal.
    """
    n = graph.n_vertices
    inv_mu = 1.0 / graph.mu
    off_hv = -graph.conductance * inv_mu[graph.heads]
    off_th = -graph.conductance * inv_mu[graph.tails]
    diag = -(np.bincount(graph.heads, off_hv, minlength=n)
             + np.bincount(graph.tails, off_th, minlength=n))
    rows = np.concatenate([graph.heads, graph.tails, np.arange(n)])
    cols = np.concatenate([graph.tails, graph.heads, np.arange(n)])
    Q = sp.csr_matrix((np.concatenate([off_hv, off_th, diag]), (rows, cols)), shape=(n, n))
    Q.sort_indices()
    sums = np.asarray(Q.sum(axis=1)).ravel()
    bad = np.flatnonzero(np.abs(sums) > atol * np.maximum(1.0, np.abs(diag)))
    if bad.size:
        raise CheckFailed("qmatrix-row-sum", f"row {int(bad[0])} sums to {sums[bad[0]]:.3e}",
                          {"row": int(bad[0]), "sum": float(sums[bad[0]])})
    return Q


def export_matrix_market(Q, path, comment: str = ""):
    """Write a sparse matrix in Matrix Market coordinate format."""
    from scipy.io import mmwrite

    mmwrite(str(path), sp.coo_matrix(Q), comment=comment, precision=17)


def h1_norm(graph: WeightedGraph, f) -> float:
    """``sqrt(sum f^2 mu + B(f, f))``."""
    f = graph.vector(f, "f")
    return float(np.sqrt(np.dot(f * f, graph.mu) + bilinear_form(graph, f)))


def continuity_modulus_check(graph: WeightedGraph, f, sample_pairs) -> float:
    """Largest ``|f(w) - f(v)|^2 - 4 B(f, f) d(v, w)`` over the sampled pairs.

    The estimate guarantees the result is never positive on a connected graph.
    """
    f = graph.vector(f, "f")
    energy = bilinear_form(graph, f)
    worst = -np.inf
    cache = {}
    for v, w in sample_pairs:
        if v not in cache:
            cache[v] = distances_from(graph, v)
        d = cache[v][graph.position(w)]
        if not np.isfinite(d):
            raise Disconnected("sampled pair lies in different components")
        diff = f[graph.position(w)] - f[graph.position(v)]
        worst = max(worst, diff * diff - 4.0 * energy * d)
    return float(worst)
