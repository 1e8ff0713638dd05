"""scikit-learn style wrappers around the harmonic solve and the heat flow.

Both follow the usual estimator contract: hyper-parameters in ``__init__``,
learned state in trailing-underscore attributes set by ``fit``, and
``get_params``/``set_params`` inherited from :class:`~sklearn.base.BaseEstimator`.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .dirichlet import DEFAULT_TOL, DENSE_CAP, DirichletProblem, solve_dirichlet
from .graph import WeightedGraph
from .metric import Truncation
from .semigroup import EIGEN_CAP, BoundaryCondition, GeneratorMatrix, assemble_generator, evolve


def check_truncation(X) -> Truncation:
    """Accept a truncation or a finite graph (taken whole)."""
    if isinstance(X, Truncation):
        return X
    if isinstance(X, WeightedGraph):
        return Truncation.from_graph(X)
    raise TypeError(f"expected a Truncation or WeightedGraph, got {type(X).__name__}")


def check_generator(X, bc=None) -> GeneratorMatrix:
    if isinstance(X, GeneratorMatrix):
        return X
    tr = check_truncation(X)
    return assemble_generator(tr, bc if bc is not None else BoundaryCondition())


def check_densities(P, n_states: int) -> np.ndarray:
    """2-D float array of shape ``(n_samples, n_states)``; 1-D input is one sample."""
    P = np.asarray(P, dtype=float)
    if P.ndim == 1:
        P = P[None, :]
    if P.ndim != 2 or P.shape[1] != n_states:
        raise ValueError(f"expected densities with {n_states} columns, got shape {P.shape}")
    if not np.all(np.isfinite(P)):
        raise ValueError("densities contain non-finite values")
    return P


class HarmonicExtension(BaseEstimator):
    """Harmonic extension of boundary data into a truncation.

    Parameters
    ----------
    method : {"auto", "dense", "cg"}, default="auto"
        Linear solver. ``auto`` uses a dense Cholesky solve below ``dense_cap``
        unknowns and Jacobi-preconditioned CG above.
    tol : float, default=1e-10
        CG stopping tolerance on the 2-norm of the harmonic residuals.
    max_iter : int, default=None
        CG iteration cap; None means ten times the number of unknowns.
    dense_cap : int, default=2000

    Attributes
    ----------
    values_ : ndarray
        Solution on every host vertex (pinned ones included).
    vertices_ : tuple
    residual_norm_ : float
    n_iter_ : int
    """

    def __init__(self, method="auto", tol=DEFAULT_TOL, max_iter=None, dense_cap=DENSE_CAP):
        self.method = method
        self.tol = tol
        self.max_iter = max_iter
        self.dense_cap = dense_cap

    def fit(self, X, y=None, vertex_data=None):
        """``X`` is the truncation, ``y`` the boundary-point data."""
        tr = check_truncation(X)
        sol = solve_dirichlet(DirichletProblem(tr, y, vertex_data, self.method, self.tol,
                                               self.max_iter, self.dense_cap))
        self.solution_ = sol
        self.values_ = sol.values
        self.vertices_ = tr.host.vertices
        self.residual_norm_ = sol.residual_norm
        self.n_iter_ = sol.iterations
        return self

    def predict(self, vertices=None):
        check_is_fitted(self, "values_")
        if vertices is None:
            return self.values_.copy()
        host = self.solution_.truncation.host
        return np.array([self.values_[host.position(v)] for v in vertices])


class HeatSemigroup(TransformerMixin, BaseEstimator):
    """Maps initial densities to ``exp(-t L) p0`` at the requested times.

    ``fit`` takes a :class:`GeneratorMatrix` (or a truncation plus ``bc``) and,
    for the eigen method, factors it once so repeated ``transform`` calls are
    matrix products.

    ``transform`` returns an array of shape ``(n_samples, n_times, n_states)``.
    """

    def __init__(self, times=(1.0,), method="auto", eigen_cap=EIGEN_CAP):
        self.times = times
        self.method = method
        self.eigen_cap = eigen_cap

    def fit(self, X, y=None, bc=None):
        L = check_generator(X, bc)
        method = self.method
        if method == "auto":
            method = "eigen" if L.n <= self.eigen_cap else "cn"
        if method == "eigen":
            L.spectral  # noqa: B018 - factor now, reuse on every transform
        self.generator_ = L
        self.method_ = method
        self.n_features_in_ = L.n
        return self

    def transform(self, X):
        check_is_fitted(self, "generator_")
        P0 = check_densities(X, self.generator_.n)
        return np.stack([evolve(self.generator_, p, self.times, self.method_, self.eigen_cap)
                         for p in P0])
