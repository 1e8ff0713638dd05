import json

import numpy as np
import pytest

from netlaplace import (
    UNREACHABLE,
    CutVerdict,
    CutWitness,
    FigureA,
    GeometricTree,
    Ray,
    SiblingTree,
    build_finite,
    components_after_cut,
    diameter,
    distance,
    distance_matrix,
    distances_from,
    metric_dominance_check,
    random_connected_graph,
    random_tree,
    separate_compact_sets,
    tree_point,
    truncate,
    verify_cut_witness,
)
from netlaplace.exceptions import (
    BadDepth,
    Disconnected,
    DominanceViolated,
    NotSeparable,
    WitnessOutsideTruncation,
)
from netlaplace.metric import avoiding_path, encode_distance

from oracles import dijkstra_all, edge_list, path_crosses_everywhere

LEFT, RIGHT = tree_point((), (0,)), tree_point((), (1,))


@pytest.fixture
def path3():
    return build_finite([("a", "b", 0.5), ("b", "c", 0.25)])


def test_path_distance(path3):
    assert distance(path3, "a", "c") == 0.75


def test_triangle_takes_short_route():
    g = build_finite([("a", "b", 1.0), ("b", "c", 1.0), ("a", "c", 3.0)])
    assert distance(g, "a", "c") == 2.0


@pytest.mark.parametrize("N", [1, 4, 10])
def test_figure_a_spine_distance(N):
    g = truncate(FigureA(), N).host
    assert distance(g, ("v", 0), ("v", N)) == pytest.approx(1 - 2.0**-N, rel=1e-15)


def test_diameter_examples(path3):
    assert diameter(build_finite([("a", "b", 2.0)])) == 2.0
    assert diameter(path3) == 0.75
    star = build_finite([("c", k, 1.0) for k in "xyz"])
    assert diameter(star) == 2.0


def test_diameter_disconnected():
    g = build_finite([("a", "b", 1.0), ("y", "z", 1.0)])
    with pytest.raises(Disconnected):
        diameter(g)
    assert encode_distance(distances_from(g, "a")[3]) == UNREACHABLE


@pytest.mark.parametrize("seed", range(5))
def test_dijkstra_matches_networkx(seed):
    g = random_connected_graph(60, 30, np.random.default_rng(seed))
    D = distance_matrix(g)
    ref = dijkstra_all(edge_list(g), g.vertices)
    np.testing.assert_allclose(D, ref, rtol=1e-14)
    for i in (0, 17, 59):
        np.testing.assert_allclose(distances_from(g, g.vertices[i]), ref[i], rtol=1e-14)


def test_truncation_counts():
    tr = truncate(GeometricTree(2, 0.5), 3)
    assert tr.host.n_vertices == 15
    assert len(tr.frontier) == 8
    assert set(tr.frontier) == {v for v in tr.host.vertices if len(v) == 3}
    assert tr.frontier[(1, 0, 1)] == tree_point((1, 0, 1), (0,))


@pytest.mark.parametrize("N", [1, 3, 6])
def test_figure_a_truncation(N):
    tr = truncate(FigureA(), N)
    spine = [v for v in tr.host.vertices if v[0] == "v"]
    pendants = [v for v in tr.host.vertices if v[0] == "u"]
    assert len(spine) == N + 1
    assert len(pendants) == 2**N - 1
    assert list(tr.frontier) == [("v", N)]
    assert tr.frontier[("v", N)] == FigureA.point
    assert set(tr.boundary_vertices) == set(pendants)


def test_ray_truncation():
    tr = truncate(Ray(1.0, 0.5), 5)
    assert tr.host.n_vertices == 6
    assert list(tr.frontier) == [5]
    assert tr.cut_conductance[5] == pytest.approx(2.0**5)


def test_bad_depth():
    with pytest.raises(BadDepth):
        truncate(FigureA(), 0)


def test_components_examples(path3):
    labels = components_after_cut(path3, [("b", "c")])
    assert labels[0] == labels[1] != labels[2]
    assert len(set(components_after_cut(path3, []))) == 1
    tree = truncate(GeometricTree(2, 0.5), 2).host
    assert len(set(components_after_cut(tree, [((), (0,)), ((), (1,))]))) == 3


def test_verify_both_root_edges_separated():
    src = GeometricTree(2, 1 / 3)
    v = verify_cut_witness(src, [((), (0,)), ((), (1,))], LEFT, RIGHT, 5)
    assert v.status == CutVerdict.SEPARATED


def test_verify_single_root_edge_separated():
    v = verify_cut_witness(GeometricTree(2, 1 / 3), [((), (0,))], LEFT, RIGHT, 5)
    assert v.status == CutVerdict.SEPARATED


def test_sibling_tree_not_separated():
    src = SiblingTree(2, 1 / 3, 1 / 4)
    v = verify_cut_witness(src, [((), (0,)), ((), (1,))], LEFT, RIGHT, 6)
    assert v.status == CutVerdict.NOT_SEPARATED
    path = v.path
    assert path[0] == (0,) * 6 and path[-1] == (1,) * 6
    host = truncate(src, 6).host
    for a, b in zip(path, path[1:]):
        assert host.has_edge(a, b)
        assert {a, b} not in ({(), (0,)}, {(), (1,)})
    assert any(len(a) == len(b) and a != b for a, b in zip(path, path[1:]))


def test_sibling_tree_clean_split_is_unknown():
    # cutting the depth-6 cross edge and the root edges still leaves deeper crossings unseen
    src = SiblingTree(2, 1 / 3, 1 / 4)
    W = [((), (0,)), ((), (1,))] + [((0,) * n, (1,) * n) for n in range(1, 7)]
    assert verify_cut_witness(src, W, LEFT, RIGHT, 6).status == CutVerdict.UNKNOWN


def test_witness_outside_truncation():
    with pytest.raises(WitnessOutsideTruncation):
        verify_cut_witness(GeometricTree(2, 0.5), [((0,) * 6, (0,) * 7)], LEFT, RIGHT, 3)


@pytest.mark.parametrize("seed", range(10))
def test_verdict_matches_exhaustive_search(seed):
    rng = np.random.default_rng(seed)
    src = GeometricTree(int(rng.integers(2, 4)), 0.4)
    depth = 4
    tr = truncate(src, depth)
    host = tr.host
    x = tree_point(tuple(rng.integers(0, src.b, 2)), (0,))
    y = tree_point(tuple(rng.integers(0, src.b, 2)), (1,))
    k = rng.choice(host.n_edges, size=3, replace=False)
    W = [(host.edges[i].u, host.edges[i].v) for i in k]
    verdict = verify_cut_witness(src, W, x, y, depth, truncation=tr)
    expected = path_crosses_everywhere(edge_list(host), src.ray_vertex(x, depth),
                                       src.ray_vertex(y, depth), W)
    assert (verdict.status == CutVerdict.SEPARATED) == expected


def test_avoiding_path_respects_cut(path3):
    assert avoiding_path(path3, "a", "c", [("a", "b")]) is None
    assert avoiding_path(path3, "a", "c") == ["a", "b", "c"]


def test_separate_path(path3):
    f = separate_compact_sets(path3, ["a"], ["c"])
    assert f.check()
    assert set(f.values) == {0.0, 1.0}
    assert f.values[0] == 1 and f.values[2] == 0
    assert len(f.witness) == 1


def test_separate_same_set(path3):
    with pytest.raises(NotSeparable):
        separate_compact_sets(path3, ["a"], ["a"])


def test_separate_subtrees():
    host = truncate(GeometricTree(2, 0.5), 3).host
    A = [v for v in host.vertices if len(v) == 3 and v[0] == 0]
    B = [v for v in host.vertices if len(v) == 3 and v[0] == 1]
    f = separate_compact_sets(host, A, B)
    f.check()
    assert {frozenset(e) for e in f.witness} in ({frozenset(((), (0,)))},
                                                {frozenset(((), (1,)))})
    assert np.all(f.values[[host.index[v] for v in A]] == 1)
    json.dumps(f.to_json())


def test_dominance_identity_and_scaling():
    g = random_tree(40, np.random.default_rng(3))
    rep = metric_dominance_check(g, g.resistance, g.resistance)
    assert rep["max_ratio"] == pytest.approx(1.0, abs=0)
    rep = metric_dominance_check(g, g.resistance, g.resistance / 2)
    assert rep["max_ratio"] == pytest.approx(0.5, rel=1e-14)
    assert rep["min_ratio"] == pytest.approx(0.5, rel=1e-14)


def test_dominance_random_smaller():
    rng = np.random.default_rng(4)
    g = random_tree(40, rng)
    r1 = g.resistance * rng.uniform(0.1, 1.0, g.n_edges)
    metric_dominance_check(g, g.resistance, r1)
    D0 = dijkstra_all(edge_list(g), g.vertices)
    D1 = dijkstra_all([(e.u, e.v, r) for e, r in zip(g.edges, r1)], g.vertices)
    assert np.all(D1 <= D0)


def test_dominance_violation():
    g = build_finite([("a", "b", 1.0), ("b", "c", 1.0)])
    with pytest.raises(DominanceViolated):
        metric_dominance_check(g, [1.0, 1.0], [2.0, 1.0])


def test_cut_witness_json():
    w = CutWitness((((), (0,)),))
    assert w.to_json()["edges"] == [["r", "r.0"]]
