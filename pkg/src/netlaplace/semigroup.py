"""Heat semigroups with absorbing and reflecting boundary conditions.

On a truncation, an absorbing boundary point gives each of its frontier
vertices a zero-valued virtual neighbor across the truncated edges; a
reflecting one simply drops those edges. Degree-one vertices are ordinary
states unless the boundary condition marks them absorbing, in which case
they are removed and act as zero-valued neighbors.

The generator is ``L = M^-1 K`` with ``M = diag(mu)`` and ``K`` symmetric, so
``L`` is self-adjoint in ``l^2(mu)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping

import numpy as np
import scipy.sparse as sp

from .exceptions import (
    BoundViolated,
    CheckFailed,
    IncompleteBoundaryCondition,
    MethodCapExceeded,
    StepFailure,
)
from .forms import stiffness_matrix
from .graph import WeightedGraph, vertex_label
from .linalg import jacobi_cg
from .metric import Truncation, truncate

ABSORBING = "absorbing"
REFLECTING = "reflecting"
EIGEN_CAP = 5000


def _kind(value):
    v = str(value).strip().lower()
    if v in ("absorbing", "a", "dirichlet", "kill"):
        return ABSORBING
    if v in ("reflecting", "r", "neumann", "free"):
        return REFLECTING
    raise ValueError(f"unknown boundary condition {value!r}")


def _rule_lookup(rule, key, *aliases):
    if isinstance(rule, str):
        return _kind(rule)
    if callable(rule) and not isinstance(rule, Mapping):
        return _kind(rule(key))
    if isinstance(rule, Mapping):
        for k in (key, *aliases):
            if k in rule:
                return _kind(rule[k])
    raise KeyError(key)


@dataclass(frozen=True)
class BoundaryCondition:
    """Absorbing/reflecting choice per boundary point.

    ``points`` is a single kind, a mapping keyed by :class:`BoundaryPoint` (or
    its name), or a callable on boundary points. ``vertices`` does the same for
    degree-one vertices and defaults to treating them as ordinary states.
    """

    points: object = REFLECTING
    vertices: object = REFLECTING

    @classmethod
    def uniform(cls, kind, include_boundary_vertices=False):
        kind = _kind(kind)
        return cls(kind, kind if include_boundary_vertices else REFLECTING)

    def point_kind(self, p):
        try:
            return _rule_lookup(self.points, p, getattr(p, "name", None))
        except KeyError:
            raise IncompleteBoundaryCondition(f"no condition for boundary point {p}") from None

    def vertex_kind(self, v):
        try:
            return _rule_lookup(self.vertices, v, vertex_label(v))
        except KeyError:
            return REFLECTING

    def resolve(self, tr: Truncation) -> dict:
        """Kind for every frontier vertex and every degree-one vertex."""
        out = {}
        for v, p in tr.frontier.items():
            out[v] = self.vertex_kind(v) if p is None else self.point_kind(p)
        for v in tr.boundary_vertices:
            out[v] = self.vertex_kind(v)
        return out


@dataclass(frozen=True, eq=False)
class GeneratorMatrix:
    """``L = M^-1 K`` on the surviving vertices of a truncation."""

    K: sp.csr_matrix
    mu: np.ndarray
    vertices: tuple
    virtual: dict  # frontier vertex -> conductance to its virtual zero neighbor
    pinned: tuple  # absorbing degree-one vertices removed from the state space
    truncation: Truncation | None = None
    index: dict = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "index", {v: i for i, v in enumerate(self.vertices)})

    @property
    def n(self) -> int:
        return len(self.vertices)

    @property
    def conservative(self) -> bool:
        """True when nothing is absorbed, so constants lie in the kernel."""
        return not self.pinned and not any(c > 0 for c in self.virtual.values())

    @cached_property
    def L(self) -> sp.csr_matrix:
        return sp.diags(1.0 / self.mu) @ self.K

    def apply(self, f) -> np.ndarray:
        return (self.K @ np.asarray(f, dtype=float)) / self.mu

    def form(self, f, g=None) -> float:
        """``<L f, g>_mu``, the energy including virtual absorbing edges."""
        f = np.asarray(f, dtype=float)
        g = f if g is None else np.asarray(g, dtype=float)
        return float(f @ (self.K @ g))

    def inner(self, f, g) -> float:
        return float(np.dot(np.asarray(f) * self.mu, g))

    def dense(self) -> np.ndarray:
        return self.L.toarray()

    @cached_property
    def spectral(self):
        """Eigenpairs of the symmetrised generator ``M^-1/2 K M^-1/2``."""
        from scipy.linalg import eigh

        s = 1.0 / np.sqrt(self.mu)
        S = (self.K.toarray() * s[:, None]) * s[None, :]
        lam, V = eigh(0.5 * (S + S.T))
        return lam, V


def assemble_generator(truncation: Truncation, bc: BoundaryCondition) -> GeneratorMatrix:
    """Generator of the truncation under ``bc``."""
    tr = truncation
    host = tr.host
    kinds = bc.resolve(tr)
    K = stiffness_matrix(host).tolil()
    virtual = {}
    for v, c in tr.cut_conductance.items():
        if kinds.get(v) == ABSORBING:
            virtual[v] = c
            if c > 0:
                i = host.index[v]
                K[i, i] += c
    pinned = tuple(v for v in tr.boundary_vertices if kinds.get(v) == ABSORBING)
    drop = set(pinned)
    keep = [i for i, v in enumerate(host.vertices) if v not in drop]
    K = K.tocsr()[keep][:, keep].tocsr()
    K.sort_indices()
    return GeneratorMatrix(K, np.asarray(host.mu[keep]), tuple(host.vertices[i] for i in keep),
                           virtual, pinned, tr)


# -- time evolution --------------------------------------------------------

def _check_times(times):
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if times.size and (times[0] < 0 or np.any(np.diff(times) < 0)):
        raise ValueError("times must be nonnegative and nondecreasing")
    return times


def default_step(L: GeneratorMatrix) -> float:
    """``min(0.01, 1/lambda_max)`` with the Gershgorin estimate ``2 max L_ii``."""
    diag = L.K.diagonal() / L.mu
    lam_max = 2.0 * float(diag.max()) if diag.size else 0.0
    return 0.01 if lam_max <= 0 else min(0.01, 1.0 / lam_max)


def evolve(L: GeneratorMatrix, p0, times, method: str = "auto", eigen_cap: int = EIGEN_CAP,
           step: float | None = None, cg_tol: float = 1e-13) -> np.ndarray:
    """``exp(-t L) p0`` at each time; rows follow ``times``.

    ``eigen`` diagonalises the symmetrised generator (exact to rounding);
    ``cn`` runs Crank-Nicolson with step ``min(0.01, 1/lambda_max)`` shrunk to
    land on every requested time, solving each step by CG. With that step
    both step matrices are entrywise nonnegative, so the scheme preserves
    positivity and the sup norm. ``auto`` picks ``eigen`` up to ``eigen_cap``
    states.
    """
    p0 = np.asarray(p0, dtype=float)
    if p0.shape != (L.n,):
        raise ValueError(f"p0 has shape {p0.shape}, generator has {L.n} states")
    times = _check_times(times)
    if method == "auto":
        method = "eigen" if L.n <= eigen_cap else "cn"
    if method == "eigen":
        if L.n > eigen_cap:
            raise MethodCapExceeded(f"{L.n} states exceeds the eigen cap {eigen_cap}")
        lam, V = L.spectral
        sq = np.sqrt(L.mu)
        coef = V.T @ (sq * p0)
        out = (V @ (np.exp(-np.outer(lam, times)) * coef[:, None])).T / sq
        out[times == 0] = p0
        return out
    if method != "cn":
        raise ValueError(f"unknown method {method!r}")
    h = default_step(L) if step is None else float(step)
    M = sp.diags(L.mu)
    out = np.empty((times.size, L.n))
    p = p0.copy()
    t = 0.0
    cache = {}
    for k, target in enumerate(times):
        span = target - t
        if span > 0:
            nsteps = max(1, math.ceil(span / h - 1e-12))
            hk = span / nsteps
            key = round(hk, 15)
            if key not in cache:
                cache[key] = ((M + 0.5 * hk * L.K).tocsr(), (M - 0.5 * hk * L.K).tocsr())
            A, B = cache[key]
            for _ in range(nsteps):
                rhs = B @ p
                try:
                    p, _, _ = jacobi_cg(A, rhs, cg_tol * max(1.0, float(np.abs(p).max())),
                                        x0=p)
                except Exception as exc:
                    raise StepFailure(f"Crank-Nicolson step failed near t={t}: {exc}") from exc
            t = target
        out[k] = p
    return out


# -- checks ----------------------------------------------------------------

def _fail(report, name, message, sample, raise_on_failure):
    report["failures"].append({"invariant": name, "message": message, "sample": sample})
    if raise_on_failure:
        raise CheckFailed(name, message, sample)


def normal_contractions():
    """Maps ``phi`` with ``phi(0) = 0`` and ``|phi(a) - phi(b)| <= |a - b|``."""
    return {
        "abs": np.abs,
        "clip": lambda f: np.clip(f, -0.5, 0.5),
        "positive-part": lambda f: np.maximum(f, 0.0),
        "sin": np.sin,
        "shrink": lambda f: np.sign(f) * np.maximum(np.abs(f) - 0.25, 0.0),
        "half": lambda f: 0.5 * f,
    }


def markov_checks(L: GeneratorMatrix, densities, times, functions=(), raise_on_failure=True,
                  pos_tol=1e-12, norm_tol=1e-10, mass_tol=1e-10, compose_tol=1e-8,
                  method="auto") -> dict:
    """Positivity, contraction, conservation, composition and Dirichlet-form checks.

    ``densities`` are nonnegative initial vectors; ``functions`` are arbitrary
    vectors for the two form conditions, each tested against every map in
    :func:`normal_contractions`. Every tolerance is echoed in the report.
    """
    times = _check_times(times)
    report = {
        "tolerances": {"positivity": pos_tol, "norm": norm_tol, "mass": mass_tol,
                       "composition": compose_tol},
        "n_states": L.n, "conservative": L.conservative, "failures": [],
        "min_density": math.inf, "max_l1_increase": -math.inf,
        "max_linf_increase": -math.inf, "max_mass_drift": 0.0, "max_composition_error": 0.0,
        "form_abs_violations": 0, "normal_contraction_violations": 0,
        "samples": {"densities": 0, "functions": 0},
    }
    grid = np.concatenate([[0.0], times[times > 0]])
    for s, p0 in enumerate(densities):
        p0 = np.asarray(p0, dtype=float)
        report["samples"]["densities"] += 1
        P = evolve(L, p0, grid, method=method)
        mn = float(P.min())
        report["min_density"] = min(report["min_density"], mn)
        if mn < -pos_tol:
            _fail(report, "positivity", f"min density {mn:.3e}", {"sample": s}, raise_on_failure)
        l1 = np.abs(P) @ L.mu
        linf = np.abs(P).max(axis=1)
        d1 = float(np.max(np.diff(l1))) if len(l1) > 1 else 0.0
        dinf = float(np.max(np.diff(linf))) if len(linf) > 1 else 0.0
        report["max_l1_increase"] = max(report["max_l1_increase"], d1)
        report["max_linf_increase"] = max(report["max_linf_increase"], dinf)
        if d1 > norm_tol:
            _fail(report, "l1-contraction", f"l1(mu) norm grew by {d1:.3e}", {"sample": s},
                  raise_on_failure)
        if dinf > norm_tol:
            _fail(report, "linf-contraction", f"sup norm grew by {dinf:.3e}", {"sample": s},
                  raise_on_failure)
        if L.conservative:
            mass = P @ L.mu
            drift = float(np.max(np.abs(mass - mass[0])))
            report["max_mass_drift"] = max(report["max_mass_drift"], drift)
            if drift > mass_tol:
                _fail(report, "mass-conservation", f"mass drift {drift:.3e}", {"sample": s},
                      raise_on_failure)
        pos = times[times > 0]
        if pos.size:
            t = float(pos[-1])
            mid = 0.5 * t
            direct = evolve(L, p0, [t], method=method)[0]
            half = evolve(L, evolve(L, p0, [mid], method=method)[0], [t - mid], method=method)[0]
            err = float(np.max(np.abs(direct - half))) / max(1.0, float(np.abs(p0).max()))
            report["max_composition_error"] = max(report["max_composition_error"], err)
            if err > compose_tol:
                _fail(report, "semigroup-composition", f"error {err:.3e}", {"sample": s, "t": t},
                      raise_on_failure)
    maps = normal_contractions()
    for s, f in enumerate(functions):
        f = np.asarray(f, dtype=float)
        report["samples"]["functions"] += 1
        e_f = L.form(f)
        scale = max(1.0, abs(e_f))
        if L.form(np.abs(f)) > e_f + 1e-12 * scale:
            report["form_abs_violations"] += 1
            _fail(report, "form-abs", "B(|f|,|f|) > B(f,f)", {"sample": s}, raise_on_failure)
        q_f = e_f + L.inner(f, f)
        for name, phi in maps.items():
            g = phi(f)
            q_g = L.form(g) + L.inner(g, g)
            if q_g > q_f + 1e-12 * max(1.0, abs(q_f)):
                report["normal_contraction_violations"] += 1
                _fail(report, "normal-contraction", f"{name} increased the form",
                      {"sample": s, "map": name}, raise_on_failure)
    report["passed"] = not report["failures"]
    return report


def edge_boundary(graph: WeightedGraph, U) -> list:
    """Edges with exactly one endpoint in ``U``."""
    U = set(U)
    return [e for e in graph.edges if (e.u in U) != (e.v in U)]


def _boundary_terms(L: GeneratorMatrix, U):
    """``(inside_index, outside_index_or_None, conductance)`` for every edge leaving ``U``.

    Edges to removed absorbing vertices and virtual absorbing edges count as
    leaving ``U`` toward a zero-valued state (``outside_index`` None).
    """
    host = L.truncation.host
    U = set(U)
    terms = []
    for e in edge_boundary(host, U):
        u, v = (e.u, e.v) if e.u in U else (e.v, e.u)
        terms.append((L.index[u], L.index.get(v), e.conductance))
    for v, c in L.virtual.items():
        if v in U and c > 0:
            terms.append((L.index[v], None, c))
    return terms


def decay_bound_check(L: GeneratorMatrix, p0, U, times, slack=1e-6, identity_tol=1e-10,
                      fd_step=1e-4, method="auto", raise_on_failure=True) -> dict:
    """Mass of ``U`` under the flow against the edge-boundary bound.

    At each time the analytic rate ``-<L p, 1_U>_mu`` is compared with the
    boundary flux ``-sum C(u, v) (p(u) - p(v))`` (to ``identity_tol`` relative to
    the summed absolute flux) and with the floor ``-||p0||_inf sum C``.
    A central finite difference of ``P_U`` is reported as a cross-check.
    """
    if L.truncation is None:
        raise ValueError("decay check needs a generator assembled from a truncation")
    p0 = np.asarray(p0, dtype=float)
    times = _check_times(times)
    U = [u for u in U if u in L.index]
    ind = np.zeros(L.n)
    ind[[L.index[u] for u in U]] = 1.0
    terms = _boundary_terms(L, U)
    ctot = float(sum(c for _, _, c in terms))
    bound = -float(np.abs(p0).max()) * ctot
    P = evolve(L, p0, times, method=method)
    mass = P @ (ind * L.mu)
    rows = []
    report = {"bound": bound, "boundary_conductance": ctot, "n_boundary_edges": len(terms),
              "tolerances": {"slack": slack, "identity": identity_tol}, "rows": rows,
              "failures": []}
    fd_times = np.concatenate([np.maximum(times - fd_step, 0.0), times + fd_step])
    Pfd = evolve(L, p0, np.sort(fd_times), method=method)
    order = np.argsort(fd_times, kind="stable")
    fd_mass = np.empty(fd_times.size)
    fd_mass[order] = Pfd @ (ind * L.mu)
    n = times.size
    for k, t in enumerate(times):
        p = P[k]
        analytic = -float(ind @ (L.K @ p))
        flux_terms = [c * (p[i] - (p[j] if j is not None else 0.0)) for i, j, c in terms]
        flux = -float(sum(flux_terms))
        scale = max(1.0, float(sum(abs(x) for x in flux_terms)))
        lo, hi = fd_times[k], fd_times[n + k]
        fd = (fd_mass[n + k] - fd_mass[k]) / (hi - lo)
        row = {"t": float(t), "P_U": float(mass[k]), "rate": analytic, "flux": flux,
               "fd_rate": float(fd), "bound": bound}
        rows.append(row)
        if abs(analytic - flux) > identity_tol * scale:
            _fail(report, "flux-identity", f"|rate - flux| = {abs(analytic - flux):.3e}", row,
                  raise_on_failure)
        if analytic < bound - slack:
            report["failures"].append({"invariant": "decay-bound", "sample": row})
            if raise_on_failure:
                raise BoundViolated("decay-bound", f"rate {analytic:.6g} < bound {bound:.6g}", row)
    report["passed"] = not report["failures"]
    return report


# -- comparing boundary conditions -----------------------------------------

def compare_boundary_conditions(source, bc1: BoundaryCondition, bc2: BoundaryCondition, probe,
                                depth: int, times, scheme=None, tol=1e-12,
                                method="auto") -> dict:
    """Evolve one probe under two boundary conditions and measure the difference.

    ``probe`` is ``"uniform"`` (constant density of unit mass), an array over
    the host vertices, or a callable taking the truncation. Densities are
    compared on the states both generators keep.
    """
    tr = source if isinstance(source, Truncation) else truncate(source, depth, scheme)
    L1, L2 = assemble_generator(tr, bc1), assemble_generator(tr, bc2)
    host = tr.host
    if isinstance(probe, str) and probe == "uniform":
        q = np.full(host.n_vertices, 1.0 / float(host.mu.sum()))
    elif callable(probe):
        q = np.asarray(probe(tr), dtype=float)
    else:
        q = host.vector(probe, "probe")
    p1 = q[[host.index[v] for v in L1.vertices]]
    p2 = q[[host.index[v] for v in L2.vertices]]
    times = _check_times(times)
    P1, P2 = evolve(L1, p1, times, method=method), evolve(L2, p2, times, method=method)
    common = [v for v in L1.vertices if v in L2.index]
    i1 = [L1.index[v] for v in common]
    i2 = [L2.index[v] for v in common]
    diffs = np.abs(P1[:, i1] - P2[:, i2]).max(axis=1) if common else np.zeros(times.size)
    ones1, ones2 = np.ones(L1.n), np.ones(L2.n)
    indicator_diff = float(np.max(np.abs(L1.apply(ones1)[i1] - L2.apply(ones2)[i2]))) \
        if common else 0.0
    k1, k2 = bc1.resolve(tr), bc2.resolve(tr)
    differing = sorted({vertex_label(v) for v in k1 if k1[v] != k2.get(v)})
    if not differing:
        status = "identical"
    elif float(diffs.max(initial=0.0)) > tol:
        status = "distinguished"
    else:
        status = "indistinguishable-probe"
    return {
        "status": status,
        "differing_vertices": differing,
        "times": times.tolist(),
        "sup_difference": diffs.tolist(),
        "mass_1": (P1 @ L1.mu).tolist(),
        "mass_2": (P2 @ L2.mu).tolist(),
        "indicator_image_difference": indicator_diff,
    }
