"""Command-line runner: ``netlaplace <command> [options]``.

Exit status is 0 on success, 1 when an invariant or check fails and 2 for a
bad configuration. Output files go to ``--out`` (default: ``$NETLAPLACE_OUT``
or the working directory); a JSON summary is always printed to stdout.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import re
import sys
from pathlib import Path

import numpy as np

from .checks import run_property_suite
from .dirichlet import (
    DEFAULT_TOL,
    harmonic_extension_tower,
    lambda_min_dirichlet,
    reproduce_figure_a,
)
from .exceptions import BadDepth, BadSpec, CheckFailed, ConfigError, NetworkError
from .generators import FigureA, instantiate_generator, tree_point
from .graph import parse_scheme, parse_vertex_label, save_graph, vertex_label, volume
from .metric import (
    CutWitness,
    diameter,
    distances_from,
    encode_distance,
    separate_compact_sets,
    truncate,
    verify_cut_witness,
)
from .semigroup import (
    ABSORBING,
    REFLECTING,
    BoundaryCondition,
    assemble_generator,
    evolve,
    markov_checks,
)

OUT_ENV = "NETLAPLACE_OUT"
_RANGE = re.compile(r"^\s*(\d+)\s*\.\.\s*(\d+)\s*$")
_POINT = re.compile(r"^([0-9]*)\(([0-9]+)\)$")


# -- argument parsing helpers ----------------------------------------------

def parse_depths(text: str) -> list:
    """``"5..30"`` (inclusive) or ``"3,5,8"`` to an explicit increasing list."""
    m = _RANGE.match(text)
    if m:
        lo, hi = int(m.group(1)), int(m.group(2))
        if hi < lo:
            raise ConfigError(f"empty depth range {text!r}")
        return list(range(lo, hi + 1))
    try:
        depths = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse depths {text!r}") from None
    if not depths or any(d < 0 for d in depths) or any(b <= a for a, b in zip(depths, depths[1:])):
        raise ConfigError(f"depths must be nonnegative and increasing: {text!r}")
    return depths


def parse_times(text: str) -> list:
    try:
        times = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse times {text!r}") from None
    if not times or times[0] < 0 or any(b < a for a, b in zip(times, times[1:])):
        raise ConfigError("times must be nonnegative and nondecreasing")
    return times


def parse_point(text: str, source):
    """Boundary point from ``prefix(tail)`` notation or a class name."""
    m = _POINT.match(text.strip())
    if m:
        return tree_point(tuple(int(c) for c in m.group(1)), tuple(int(c) for c in m.group(2)))
    point = getattr(source, "point", None)
    if point is not None and text == point.name:
        return point
    raise ConfigError(f"cannot parse boundary point {text!r}")


def parse_witness(text: str):
    """``"r.0:r;r.1:r"`` style edge list (``;`` between edges, ``:`` inside)."""
    edges = []
    for part in text.split(";"):
        if not part.strip():
            continue
        ends = part.split(":") if ":" in part else part.split("-")
        if len(ends) != 2:
            raise ConfigError(f"cannot parse witness edge {part!r}")
        edges.append(tuple(parse_vertex_label(e.strip()) for e in ends))
    if not edges:
        raise ConfigError("witness is empty")
    return CutWitness(tuple(edges))


def _read_table(text):
    """Scalar, inline JSON, or a path to a JSON file."""
    if text is None:
        return None
    try:
        return float(text)
    except ValueError:
        pass
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        pass
    path = Path(text)
    if not path.exists():
        raise ConfigError(f"no such table file {text}")
    return json.loads(path.read_text())


def _label_table(table):
    """JSON tables are keyed by labels; resolve to vertex keys where possible."""
    if not isinstance(table, dict):
        return table
    out = dict(table)
    for k, v in table.items():
        try:
            out[parse_vertex_label(k)] = v
        except (ValueError, KeyError):
            pass
    return out


def _out_dir(args) -> Path:
    out = Path(args.out or os.environ.get(OUT_ENV) or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _source(args):
    spec = args.generator
    if spec is None:
        raise ConfigError("a generator (--generator / --graph) is required")
    return instantiate_generator(spec, seed=args.seed, scheme=parse_scheme(args.scheme))


def _write_json(path: Path, data):
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def _emit(summary):
    sys.stdout.write(json.dumps(summary, indent=2, sort_keys=True) + "\n")


# -- commands --------------------------------------------------------------

def cmd_generate(args):
    src = _source(args)
    tr = truncate(src, args.depth, parse_scheme(args.scheme), lump_leaves=args.lump)
    out = _out_dir(args)
    path = out / (args.output or f"truncation-{args.depth}.json")
    save_graph(tr.host, path)
    frontier = {vertex_label(v): (str(p) if p is not None else None)
                for v, p in tr.frontier.items()}
    _emit({"command": "generate", "generator": src.spec, "depth": args.depth,
           "n_vertices": tr.host.n_vertices, "n_edges": tr.host.n_edges,
           "frontier": frontier, "file": str(path)})
    return 0


def cmd_metric(args):
    src = _source(args)
    tr = truncate(src, args.depth, parse_scheme(args.scheme))
    g = tr.host
    summary = {"command": "metric", "generator": src.spec, "depth": args.depth,
               "n_vertices": g.n_vertices, "n_edges": g.n_edges}
    if args.volume:
        summary["volume"] = volume(g)
    if args.diameter:
        summary["diameter"] = encode_distance(diameter(g))
    if args.source_vertex is not None:
        v = parse_vertex_label(args.source_vertex)
        d = distances_from(g, v)
        summary["distances"] = {vertex_label(w): encode_distance(x)
                                for w, x in zip(g.vertices, d)}
    _emit(summary)
    return 0


def cmd_cut(args):
    src = _source(args)
    x, y = parse_point(args.x, src), parse_point(args.y, src)
    witness = parse_witness(args.witness)
    tr = truncate(src, args.depth, parse_scheme(args.scheme))
    verdict = verify_cut_witness(src, witness, x, y, args.depth, truncation=tr)
    summary = {"command": "cut", "generator": src.spec, "x": str(x), "y": str(y),
               "witness": witness.to_json(), "verdict": verdict.to_json()}
    xv, yv = src.ray_vertex(x, args.depth), src.ray_vertex(y, args.depth)
    if xv != yv:
        flat = separate_compact_sets(tr.host, [xv], [yv])
        flat.check()
        path = _out_dir(args) / (args.output or "flat-function.json")
        _write_json(path, flat.to_json())
        summary["flat_function"] = str(path)
    _emit(summary)
    if args.expect and verdict.status != args.expect:
        raise CheckFailed("cut-verdict", f"expected {args.expect}, got {verdict.status}",
                          verdict.to_json())
    return 0


def cmd_dirichlet(args):
    depths = parse_depths(args.depths)
    out = _out_dir(args)
    src = _source(args)
    if isinstance(src, FigureA):
        report = reproduce_figure_a(depths, pendants=args.pendants, limit=args.limit,
                                    method=args.method, ratio_tol=args.ratio_tol,
                                    ratio_from=args.ratio_from, n_jobs=args.workers)
        with open(out / "figure-a.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["depth", "f_v0", "ratio"])
            for n, f, r in report.rows:
                w.writerow([n, repr(f), "" if r is None else repr(r)])
        summary = {"command": "dirichlet", "generator": src.spec, "depths": depths,
                   "pendants": args.pendants, "limit": args.limit,
                   "tolerances": {"ratio": args.ratio_tol, "ratio_from": args.ratio_from},
                   "passed": report.passed, **report.to_json()}
        _write_json(out / "figure-a.json", summary)
        _emit(summary)
        report.check()
        return 0
    data = _label_table(_read_table(args.data))
    vdata = _label_table(_read_table(args.vertex_data))
    if vdata is None:
        vdata = data if not isinstance(data, dict) else None
    tower = harmonic_extension_tower(src, data, depths, vertex_data=vdata,
                                     scheme=parse_scheme(args.scheme), method=args.method,
                                     tol=args.tol, n_jobs=args.workers)
    with open(out / "dirichlet.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["depth", "vertexId", "value"])
        for d, sol in zip(depths, tower.solutions):
            for v, x in zip(sol.truncation.host.vertices, sol.values):
                w.writerow([d, vertex_label(v), repr(float(x))])
    summary = {"command": "dirichlet", "generator": src.spec, "depths": depths,
               "tolerances": {"cg": args.tol}, "method": args.method,
               "residual_norms": [s.residual_norm for s in tower.solutions],
               "max_residuals": [s.max_residual() for s in tower.solutions],
               "sup_diffs": tower.sup_diffs}
    if args.spectral:
        bounds = [lambda_min_dirichlet(s.truncation) for s in tower.solutions]
        summary["spectral"] = [{"eigenvalue": b.eigenvalue, "lower_bound": b.lower_bound,
                                "passed": b.passed} for b in bounds]
    _write_json(out / "dirichlet.json", summary)
    _emit(summary)
    if args.spectral and not all(s["passed"] for s in summary["spectral"]):
        raise CheckFailed("dirichlet-lower-bound", "eigenvalue below bound", summary["spectral"])
    return 0


def _boundary_condition(text):
    if text is None:
        return BoundaryCondition()
    if text.lower() in (ABSORBING, REFLECTING, "all-absorbing", "all-reflecting"):
        kind = text.lower().replace("all-", "")
        return BoundaryCondition.uniform(kind, include_boundary_vertices=text.startswith("all-"))
    table = _read_table(text)
    if not isinstance(table, dict):
        raise ConfigError("boundary condition table must be a JSON object")
    return BoundaryCondition(table.get("points", REFLECTING),
                             _label_table(table.get("vertices", REFLECTING)))


def cmd_evolve(args):
    src = _source(args)
    tr = truncate(src, args.depth, parse_scheme(args.scheme))
    bc = _boundary_condition(args.bc)
    L = assemble_generator(tr, bc)
    times = parse_times(args.times)
    if args.probe == "uniform":
        p0 = np.full(L.n, 1.0 / float(L.mu.sum()))
    else:
        v = parse_vertex_label(args.probe)
        if v not in L.index:
            raise ConfigError(f"probe vertex {args.probe} is not a state")
        p0 = np.zeros(L.n)
        p0[L.index[v]] = 1.0 / L.mu[L.index[v]]
    P = evolve(L, p0, times, method=args.method)
    out = _out_dir(args)
    with open(out / "evolve.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time", "vertexId", "value"])
        for t, row in zip(times, P):
            for v, x in zip(L.vertices, row):
                w.writerow([repr(t), vertex_label(v), repr(float(x))])
    rng = np.random.default_rng(args.seed if args.seed is not None else 0)
    funcs = rng.normal(size=(4, L.n))
    report = markov_checks(L, [p0], times, funcs, raise_on_failure=False, method=args.method)
    summary = {"command": "evolve", "generator": src.spec, "depth": args.depth,
               "n_states": L.n, "times": times, "mass": (P @ L.mu).tolist(),
               "checks": report}
    _write_json(out / "evolve.json", summary)
    _emit(summary)
    if not report["passed"]:
        first = report["failures"][0]
        raise CheckFailed(first["invariant"], first["message"], first["sample"])
    return 0


def cmd_check(args):
    if args.seed is None:
        raise ConfigError("check needs --seed")
    src = _source(args)
    graph = getattr(src, "graph", None)
    if graph is None:
        graph = truncate(src, args.depth).host
    report = run_property_suite(graph, args.seed)
    report["generator"] = src.spec
    _write_json(_out_dir(args) / "check.json", report)
    _emit(report)
    if not report["passed"]:
        failed = [c for c in report["checks"] if not c["passed"]]
        raise CheckFailed(failed[0]["invariant"], "property suite failed", failed)
    return 0


# -- entry point -----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--generator", "--graph", dest="generator",
                        help="generator spec, e.g. figure-a, geometric-tree:2,1/3, "
                             "random-tree:200, file:path.json")
    common.add_argument("--scheme", default="mu0", help="vertex weights: mu0, deg, const:c")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--out", default=None, help=f"output directory (default ${OUT_ENV} or .)")
    common.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    common.add_argument("--output", default=None, help="file name inside the output directory")

    p = argparse.ArgumentParser(prog="netlaplace", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", parents=[common], help="write a truncation as graph JSON")
    g.add_argument("--depth", type=int, required=True)
    g.add_argument("--lump", action="store_true", help="merge sibling leaves per vertex")
    g.set_defaults(func=cmd_generate)

    m = sub.add_parser("metric", parents=[common], help="distances, diameter, volume")
    m.add_argument("--depth", type=int, required=True)
    m.add_argument("--volume", action="store_true")
    m.add_argument("--diameter", action="store_true")
    m.add_argument("--from", dest="source_vertex", default=None)
    m.set_defaults(func=cmd_metric)

    c = sub.add_parser("cut", parents=[common], help="verify a cut witness")
    c.add_argument("--depth", type=int, required=True)
    c.add_argument("--x", required=True, help="boundary point, e.g. 0(0)")
    c.add_argument("--y", required=True)
    c.add_argument("--witness", required=True, help="edges as 'a:b;c:d' using vertex labels")
    c.add_argument("--expect", choices=["separated", "not-separated", "unknown-at-depth"])
    c.set_defaults(func=cmd_cut)

    d = sub.add_parser("dirichlet", parents=[common], help="harmonic extension tower")
    d.add_argument("--depths", required=True, help="'5..30' or '3,4,5'")
    d.add_argument("--data", default=None, help="boundary data: number, JSON or JSON file")
    d.add_argument("--vertex-data", default=None)
    d.add_argument("--pendants", type=float, default=0.0)
    d.add_argument("--limit", type=float, default=1.0)
    d.add_argument("--method", choices=["auto", "dense", "cg"], default="auto")
    d.add_argument("--tol", type=float, default=DEFAULT_TOL)
    d.add_argument("--ratio-tol", type=float, default=0.01)
    d.add_argument("--ratio-from", type=int, default=20)
    d.add_argument("--spectral", action="store_true", help="also check the eigenvalue bound")
    d.set_defaults(func=cmd_dirichlet)

    e = sub.add_parser("evolve", parents=[common], help="heat flow plus semigroup checks")
    e.add_argument("--depth", type=int, required=True)
    e.add_argument("--bc", default=None,
                   help="absorbing, reflecting, all-absorbing, or JSON {points, vertices}")
    e.add_argument("--times", default="0,0.5,1,2")
    e.add_argument("--probe", default="uniform", help="'uniform' or a vertex label")
    e.add_argument("--method", choices=["auto", "eigen", "cn"], default="auto")
    e.set_defaults(func=cmd_evolve)

    k = sub.add_parser("check", parents=[common], help="seeded property suite")
    k.add_argument("--depth", type=int, default=6, help="depth for infinite generators")
    k.set_defaults(func=cmd_check)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CheckFailed as exc:
        sys.stderr.write(json.dumps({"error": "CheckFailed", **exc.to_dict()}, default=str) + "\n")
        return 1
    except (ConfigError, BadSpec, BadDepth) as exc:
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return 2
    except (NetworkError, ValueError, KeyError, OSError) as exc:
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
