import math

import numpy as np
import pytest

from netlaplace import (
    ABSORBING,
    REFLECTING,
    BoundaryCondition,
    Constant,
    FigureA,
    GeometricTree,
    Truncation,
    WeightedGraph,
    assemble_generator,
    build_finite,
    compare_boundary_conditions,
    decay_bound_check,
    edge_boundary,
    evolve,
    markov_checks,
    random_connected_graph,
    tree_point,
    truncate,
)
from netlaplace.exceptions import CheckFailed, IncompleteBoundaryCondition, MethodCapExceeded
from netlaplace.semigroup import default_step, normal_contractions

from oracles import heat_expm


def lone_vertex():
    host = WeightedGraph(["x"], [1.0], [])
    return Truncation(host, 1, {"x": tree_point((), (0,))}, {"x": 1.0}, (), {"x": 0})


def two_vertex():
    return Truncation.from_graph(build_finite([("a", "b", 1.0)], Constant(1.0)))


def test_single_vertex_generators():
    tr = lone_vertex()
    assert assemble_generator(tr, BoundaryCondition(ABSORBING)).dense().tolist() == [[1.0]]
    assert assemble_generator(tr, BoundaryCondition(REFLECTING)).dense().tolist() == [[0.0]]


def test_two_vertex_generator():
    L = assemble_generator(two_vertex(), BoundaryCondition())
    assert L.dense().tolist() == [[1.0, -1.0], [-1.0, 1.0]]
    assert L.conservative


@pytest.mark.parametrize("method", ["eigen", "cn"])
def test_scalar_decay(method):
    L = assemble_generator(lone_vertex(), BoundaryCondition(ABSORBING))
    t = np.array([0.0, 0.5, 1.0, 3.0])
    P = evolve(L, [1.0], t, method=method)
    tol = 1e-13 if method == "eigen" else 1e-4
    np.testing.assert_allclose(P[:, 0], np.exp(-t), atol=tol)


def test_two_vertex_closed_form():
    L = assemble_generator(two_vertex(), BoundaryCondition())
    t = np.linspace(0, 3, 7)
    P = evolve(L, [1.0, 0.0], t, method="eigen")
    e = np.exp(-2 * t)
    np.testing.assert_allclose(P, np.c_[(1 + e) / 2, (1 - e) / 2], atol=1e-14)
    np.testing.assert_allclose(P.sum(axis=1), 1.0, atol=1e-14)


@pytest.mark.parametrize("method", ["eigen", "cn"])
def test_time_zero_is_identity(method):
    L = assemble_generator(truncate(GeometricTree(2, 0.5), 3), BoundaryCondition(ABSORBING))
    p0 = np.random.default_rng(0).random(L.n)
    assert np.array_equal(evolve(L, p0, [0.0], method=method)[0], p0)


@pytest.mark.parametrize("seed", range(3))
def test_evolve_matches_expm(seed):
    rng = np.random.default_rng(seed)
    tr = truncate(GeometricTree(2, 0.5), 4)
    bc = BoundaryCondition(lambda p: ABSORBING if p.word(1) == (0,) else REFLECTING)
    L = assemble_generator(tr, bc)
    p0 = rng.random(L.n)
    K = L.K.toarray()
    for t in (0.1, 1.0, 4.0):
        ref = heat_expm(K, L.mu, p0, t)
        np.testing.assert_allclose(evolve(L, p0, [t], method="eigen")[0], ref, atol=1e-11)
        np.testing.assert_allclose(evolve(L, p0, [t], method="cn")[0], ref, atol=1e-4)


def test_cn_converges_with_step():
    tr = truncate(GeometricTree(2, 0.5), 3)
    L = assemble_generator(tr, BoundaryCondition(ABSORBING))
    p0 = np.random.default_rng(2).random(L.n)
    ref = heat_expm(L.K.toarray(), L.mu, p0, 1.0)
    h = default_step(L)
    e1 = np.abs(evolve(L, p0, [1.0], "cn", step=h)[0] - ref).max()
    e2 = np.abs(evolve(L, p0, [1.0], "cn", step=h / 2)[0] - ref).max()
    assert e2 < e1 / 3  # second order


def test_eigen_cap():
    L = assemble_generator(truncate(GeometricTree(2, 0.5), 3), BoundaryCondition())
    with pytest.raises(MethodCapExceeded):
        evolve(L, np.ones(L.n), [1.0], method="eigen", eigen_cap=5)


def test_incomplete_boundary_condition():
    tr = truncate(GeometricTree(2, 0.5), 2)
    with pytest.raises(IncompleteBoundaryCondition):
        assemble_generator(tr, BoundaryCondition({tree_point((), (0,)): ABSORBING}))


def test_absorbing_degree_one_vertices_are_removed():
    tr = truncate(FigureA(), 3)
    L = assemble_generator(tr, BoundaryCondition.uniform(ABSORBING, True))
    assert L.n == 4 and len(L.pinned) == 7
    L = assemble_generator(tr, BoundaryCondition.uniform(ABSORBING))
    assert L.n == tr.host.n_vertices and not L.conservative


def test_mass_conservation_reflecting():
    g = random_connected_graph(40, 10, np.random.default_rng(3))
    L = assemble_generator(Truncation.from_graph(g), BoundaryCondition())
    p0 = np.random.default_rng(4).random(L.n)
    P = evolve(L, p0, [0.0, 0.5, 2.0, 10.0])
    mass = P @ L.mu
    assert np.max(np.abs(mass - mass[0])) <= 1e-12


def test_markov_checks_pass():
    rng = np.random.default_rng(8)
    tr = truncate(GeometricTree(3, 0.4), 3)
    for bc in (BoundaryCondition(), BoundaryCondition(ABSORBING)):
        L = assemble_generator(tr, bc)
        rep = markov_checks(L, [rng.random(L.n) for _ in range(3)], [0.0, 0.3, 1.0, 2.5],
                            rng.normal(size=(10, L.n)))
        assert rep["passed"]
        assert rep["min_density"] >= -1e-12
        assert rep["tolerances"]["composition"] == 1e-8


def test_markov_checks_catch_negative_density():
    L = assemble_generator(two_vertex(), BoundaryCondition())
    with pytest.raises(CheckFailed) as err:
        markov_checks(L, [np.array([-1.0, 0.0])], [0.0, 1.0])
    assert err.value.invariant == "positivity"


def test_form_conditions_equality_case():
    g = random_connected_graph(20, 5, np.random.default_rng(0))
    L = assemble_generator(Truncation.from_graph(g), BoundaryCondition())
    f = np.abs(np.random.default_rng(1).normal(size=L.n))
    assert L.form(np.abs(f)) == L.form(f)
    for name, phi in normal_contractions().items():
        assert phi(np.zeros(3)).tolist() == [0.0, 0.0, 0.0], name


def test_abs_form_edgewise():
    rng = np.random.default_rng(9)
    g = random_connected_graph(100, 30, rng)
    L = assemble_generator(Truncation.from_graph(g), BoundaryCondition())
    for _ in range(200):
        f = rng.normal(size=L.n)
        da = np.abs(np.abs(f[g.heads]) - np.abs(f[g.tails]))
        d = np.abs(f[g.heads] - f[g.tails])
        assert np.all(da <= d)
        assert L.form(np.abs(f)) <= L.form(f) * (1 + 1e-12)


def test_edge_boundary_examples():
    g = build_finite([("a", "b", 1.0), ("b", "c", 1.0)])
    assert [(e.u, e.v) for e in edge_boundary(g, ["a"])] == [("a", "b")]
    assert edge_boundary(g, g.vertices) == []
    tree = truncate(GeometricTree(2, 0.5), 2).host
    left = [v for v in tree.vertices if v[:1] == (0,)]
    assert [(e.u, e.v) for e in edge_boundary(tree, left)] == [((), (0,))]


def test_decay_whole_host_reflecting():
    g = random_connected_graph(20, 5, np.random.default_rng(0))
    L = assemble_generator(Truncation.from_graph(g), BoundaryCondition())
    p0 = np.random.default_rng(1).random(L.n)
    rep = decay_bound_check(L, p0, g.vertices, [0.0, 1.0])
    assert rep["n_boundary_edges"] == 0
    assert all(abs(r["rate"]) <= 1e-12 for r in rep["rows"])


def test_decay_two_vertex_tight():
    L = assemble_generator(two_vertex(), BoundaryCondition())
    rep = decay_bound_check(L, [1.0, 0.0], ["a"], [0.0])
    row = rep["rows"][0]
    assert row["rate"] == -1.0 and row["flux"] == -1.0 and rep["bound"] == -1.0
    assert row["fd_rate"] == pytest.approx(-1.0, abs=1e-3)  # one-sided at t = 0


def test_decay_figure_a_depth_12():
    tr = truncate(FigureA(), 12)
    L = assemble_generator(tr, BoundaryCondition.uniform(ABSORBING))
    U = [v for v in L.vertices if v[1] <= 6]  # spine index or pendant owner
    p0 = np.zeros(L.n)
    p0[[L.index[u] for u in U]] = 1.0
    rep = decay_bound_check(L, p0, U, [0.0, 0.05, 0.2])
    assert rep["passed"]
    assert rep["n_boundary_edges"] == 1


def test_compare_one_vertex():
    tr = lone_vertex()
    rep = compare_boundary_conditions(tr, BoundaryCondition(ABSORBING),
                                      BoundaryCondition(REFLECTING), "uniform", 1, [0.0, 1.0, 2.0])
    assert rep["status"] == "distinguished"
    np.testing.assert_allclose(rep["sup_difference"], [1 - math.exp(-t) for t in (0, 1, 2)],
                               atol=1e-14)


def test_compare_identical():
    bc = BoundaryCondition(ABSORBING)
    rep = compare_boundary_conditions(GeometricTree(2, 0.5), bc, bc, "uniform", 3, [0.0, 1.0])
    assert rep["status"] == "identical"
    assert max(rep["sup_difference"]) == 0.0


def test_compare_half_absorbing_tree():
    src = GeometricTree(2, 1 / 3)
    half = BoundaryCondition(lambda p: ABSORBING if p.word(1) == (0,) else REFLECTING)
    rep = compare_boundary_conditions(src, half, BoundaryCondition(), "uniform", 8,
                                      [0.0, 0.1, 0.5, 1.0])
    assert rep["status"] == "distinguished"
    assert rep["mass_1"][-1] < rep["mass_1"][0] - 1e-6
    np.testing.assert_allclose(rep["mass_2"], rep["mass_2"][0], atol=1e-10)
