"""Resistance networks on finite truncations of infinite graphs.

Path metric and cut witnesses, vertex-weighted Laplacians and energy forms,
harmonic extension, and heat semigroups with absorbing or reflecting
boundary conditions.
"""
from .dirichlet import (
    DirichletProblem,
    FigureAReport,
    HarmonicSolution,
    SpectralBound,
    TowerResult,
    harmonic_extension_tower,
    harmonic_residual,
    lambda_min_dirichlet,
    reproduce_figure_a,
    series_reduce,
    solve_dirichlet,
)
from .estimators import HarmonicExtension, HeatSemigroup
from .exceptions import *  # noqa: F401,F403
from .forms import (
    assemble_qmatrix,
    bilinear_form,
    continuity_modulus_check,
    export_matrix_market,
    h1_norm,
    inner,
    laplacian_apply,
    stiffness_matrix,
)
from .generators import (
    BoundaryPoint,
    FigureA,
    FiniteSource,
    GeometricTree,
    GraphSource,
    Ray,
    SiblingTree,
    instantiate_generator,
    random_connected_graph,
    random_tree,
    tree_point,
)
from .graph import (
    ConductanceSum,
    Constant,
    EdgeRecord,
    Explicit,
    HalfEdgeLength,
    WeightedGraph,
    build_finite,
    graph_from_json,
    load_graph,
    save_graph,
    vertex_label,
    volume,
)
from .metric import (
    UNREACHABLE,
    CutVerdict,
    CutWitness,
    FlatFunction,
    Truncation,
    components_after_cut,
    diameter,
    distance,
    distance_matrix,
    distances_from,
    metric_dominance_check,
    separate_compact_sets,
    truncate,
    verify_cut_witness,
)
from .semigroup import (
    ABSORBING,
    REFLECTING,
    BoundaryCondition,
    GeneratorMatrix,
    assemble_generator,
    compare_boundary_conditions,
    decay_bound_check,
    edge_boundary,
    evolve,
    markov_checks,
)

__version__ = "0.1.0"
