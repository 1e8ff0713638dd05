"""Seeded invariant suite over one finite host graph.

Each check returns a JSON-friendly record; :func:`run_property_suite` never
raises on a failed invariant, it reports it, so the CLI can name every
failure at once.
"""
from __future__ import annotations

import itertools

import numpy as np

from .dirichlet import DirichletProblem, lambda_min_dirichlet, solve_dirichlet
from .forms import (
    assemble_qmatrix,
    bilinear_form,
    continuity_modulus_check,
    form_scale,
    inner,
    laplacian_apply,
)
from .graph import ConductanceSum, Constant, HalfEdgeLength, WeightedGraph, vertex_label, volume
from .metric import (
    Truncation,
    avoiding_path,
    components_after_cut,
    distance_matrix,
    separate_compact_sets,
)
from .semigroup import (
    ABSORBING,
    BoundaryCondition,
    assemble_generator,
    decay_bound_check,
    markov_checks,
)


def _record(name, passed, **detail):
    return {"invariant": name, "passed": bool(passed), **detail}


def check_metric_axioms(graph, rng, n_triples=200, rtol=1e-12):
    D = distance_matrix(graph)
    n = graph.n_vertices
    sym = float(np.max(np.abs(D - D.T)))
    diag = float(np.max(np.abs(np.diag(D))))
    off = D[~np.eye(n, dtype=bool)]
    positive = bool(np.all(off > 0))
    worst = -np.inf
    for _ in range(n_triples):
        i, j, k = rng.integers(0, n, size=3)
        worst = max(worst, D[i, k] - D[i, j] - D[j, k])
    ok = sym <= rtol * D.max() and diag == 0 and positive and worst <= rtol * D.max()
    return _record("metric-axioms", ok, symmetry_error=sym, triangle_slack=float(worst))


def check_cut_duality(graph, rng, n_cuts=5):
    bad = None
    for c in range(n_cuts):
        k = int(rng.integers(1, min(4, graph.n_edges) + 1))
        W = [(graph.edges[i].u, graph.edges[i].v)
             for i in rng.choice(graph.n_edges, size=k, replace=False)]
        labels = components_after_cut(graph, W)
        x = graph.vertices[int(rng.integers(graph.n_vertices))]
        for v, lab in zip(graph.vertices, labels):
            reachable = avoiding_path(graph, x, v, W) is not None
            if reachable != (lab == labels[graph.index[x]]):
                bad = {"cut": c, "vertex": vertex_label(v)}
                break
        if bad:
            break
    return _record("cut-component-duality", bad is None, counterexample=bad)


def check_flat_functions(graph, rng, n_sets=5):
    bad = None
    for s in range(n_sets):
        perm = rng.permutation(graph.n_vertices)
        a = [graph.vertices[i] for i in perm[:3]]
        b = [graph.vertices[i] for i in perm[3:6]]
        f = separate_compact_sets(graph, a, b)
        try:
            f.check()
            ok = (all(f.values[graph.index[v]] == 1 for v in a)
                  and all(f.values[graph.index[v]] == 0 for v in b)
                  and set(np.unique(f.values)) <= {0.0, 1.0})
        except AssertionError:
            ok = False
        if not ok:
            bad = {"sample": s}
            break
    return _record("flat-function-soundness", bad is None, counterexample=bad)


def check_forms(graph, rng, n_functions=20, rtol=1e-12):
    Q = assemble_qmatrix(graph)
    row = float(np.max(np.abs(np.asarray(Q.sum(axis=1)).ravel())))
    M = Q.multiply(graph.mu[:, None]).toarray()
    balance = float(np.max(np.abs(M - M.T)))
    worst = 0.0
    neg = 0
    for _ in range(n_functions):
        f, g = rng.normal(size=(2, graph.n_vertices))
        b = bilinear_form(graph, f, g)
        scale = max(form_scale(graph, f, g), np.finfo(float).tiny)
        worst = max(worst, abs(inner(graph, laplacian_apply(graph, f), g) - b) / scale,
                    abs(inner(graph, f, laplacian_apply(graph, g)) - b) / scale)
        neg += bilinear_form(graph, f) < 0
    balanced = balance <= rtol * float(graph.conductance.max())
    ok = row <= 1e-12 and balanced and worst <= rtol and neg == 0
    return _record("form-identities", ok, row_sum=row, detailed_balance=balance,
                   adjointness=worst, negative_energies=int(neg))


def check_continuity(graph, rng, n_functions=20, n_pairs=50):
    worst = -np.inf
    for _ in range(n_functions):
        f = rng.normal(size=graph.n_vertices)
        pairs = [(graph.vertices[i], graph.vertices[j])
                 for i, j in rng.integers(0, graph.n_vertices, size=(n_pairs, 2))]
        worst = max(worst, continuity_modulus_check(graph, f, pairs))
    return _record("continuity-estimate", worst <= 0, max_violation=float(worst))


def check_spectral_bound(graph):
    res = lambda_min_dirichlet(Truncation.from_graph(graph))
    return _record("dirichlet-lower-bound", res.passed, eigenvalue=res.eigenvalue,
                   lower_bound=res.lower_bound)


def check_dirichlet(graph, rng, tol=1e-9):
    tr = Truncation.from_graph(graph)
    data = {v: float(x) for v, x in zip(tr.boundary_vertices,
                                        rng.uniform(-1, 1, len(tr.boundary_vertices)))}
    dense = solve_dirichlet(DirichletProblem(tr, vertex_data=data, method="dense"))
    cg = solve_dirichlet(DirichletProblem(tr, vertex_data=data, method="cg"))
    agree = float(np.max(np.abs(dense.values - cg.values)))
    lo, hi = min(data.values()), max(data.values())
    maxp = bool(np.all(dense.values >= lo - 1e-12) and np.all(dense.values <= hi + 1e-12))
    mu_diff = 0.0
    for scheme in (ConductanceSum(), Constant(2.5)):
        other = Truncation.from_graph(graph.with_mu(scheme))
        sol = solve_dirichlet(DirichletProblem(other, vertex_data=data, method="dense"))
        mu_diff = max(mu_diff, float(np.max(np.abs(sol.values - dense.values))))
    resid = max(dense.max_residual(), cg.max_residual())
    ok = agree <= tol and maxp and mu_diff <= tol and resid <= 1e-10
    return _record("dirichlet-solver", ok, cg_vs_dense=agree, maximum_principle=maxp,
                   mu_invariance=mu_diff, max_residual=resid)


def check_semigroup(graph, rng, times=(0.0, 0.1, 0.5, 1.0, 2.0), n_samples=5):
    tr = Truncation.from_graph(graph)
    out = []
    for bc in (BoundaryCondition(), BoundaryCondition.uniform(ABSORBING, True)):
        L = assemble_generator(tr, bc)
        dens = []
        for _ in range(n_samples):
            p = rng.exponential(size=L.n)
            dens.append(p / (p @ L.mu))
        funcs = rng.normal(size=(n_samples, L.n))
        rep = markov_checks(L, dens, times, funcs, raise_on_failure=False)
        out.append(rep)
    ok = all(r["passed"] for r in out)
    return _record("markov-semigroup", ok,
                   failures=list(itertools.chain.from_iterable(r["failures"] for r in out)),
                   min_density=min(r["min_density"] for r in out),
                   max_mass_drift=out[0]["max_mass_drift"])


def check_decay(graph, rng, times=(0.0, 0.25, 1.0)):
    tr = Truncation.from_graph(graph)
    L = assemble_generator(tr, BoundaryCondition.uniform(ABSORBING, True))
    k = int(rng.integers(graph.n_edges))
    labels = components_after_cut(graph, [(graph.edges[k].u, graph.edges[k].v)])
    sides = [[v for v, lab in zip(graph.vertices, labels) if (lab == labels[0]) == keep
              and v in L.index] for keep in (True, False)]
    U = sides[0] or sides[1]
    p0 = np.zeros(L.n)
    p0[[L.index[u] for u in U]] = 1.0
    p0 /= p0 @ L.mu
    rep = decay_bound_check(L, p0, U, times, raise_on_failure=False)
    return _record("decay-bound", rep["passed"], failures=rep["failures"])


def run_property_suite(graph: WeightedGraph, seed: int) -> dict:
    """Every finite-host invariant, seeded; returns ``{"passed": bool, "checks": [...]}``."""
    rng = np.random.default_rng(seed)
    if not isinstance(graph.mu, np.ndarray) or graph.n_vertices < 7:
        raise ValueError("property suite needs a graph with at least 7 vertices")
    graph = graph.with_mu(HalfEdgeLength())
    checks = [
        check_metric_axioms(graph, rng),
        _record("mu0-volume", abs(graph.mu.sum() - volume(graph)) <= 1e-12 * volume(graph),
                total_weight=float(graph.mu.sum()), volume=volume(graph)),
        check_cut_duality(graph, rng),
        check_flat_functions(graph, rng),
        check_forms(graph, rng),
        check_continuity(graph, rng),
        check_spectral_bound(graph),
        check_dirichlet(graph, rng),
        check_semigroup(graph, rng),
        check_decay(graph, rng),
    ]
    return {"seed": seed, "n_vertices": graph.n_vertices, "n_edges": graph.n_edges,
            "passed": all(c["passed"] for c in checks), "checks": checks}
