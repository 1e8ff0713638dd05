import csv
import json
import math

import pytest

from netlaplace.cli import main, parse_depths, parse_witness
from netlaplace.exceptions import ConfigError


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_parse_depths():
    assert parse_depths("5..8") == [5, 6, 7, 8]
    assert parse_depths("3,5,9") == [3, 5, 9]
    for bad in ("8..5", "5,3", "x"):
        with pytest.raises(ConfigError):
            parse_depths(bad)


def test_parse_witness():
    w = parse_witness("r:r.0;r:r.1")
    assert w.edges == (((), (0,)), ((), (1,)))


def test_figure_a_ratio_column(tmp_path, capsys):
    code, out, _ = run(capsys, "dirichlet", "--generator", "figure-a", "--depths", "5..30",
                       "--pendants", "0", "--limit", "1", "--out", str(tmp_path))
    assert code == 0
    with open(tmp_path / "figure-a.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [int(r["depth"]) for r in rows] == list(range(5, 31))
    ratios = [float(r["ratio"]) for r in rows if int(r["depth"]) >= 20]
    assert all(abs(r - (2 - math.sqrt(2))) <= 0.01 for r in ratios)
    summary = json.loads(out)
    assert summary["tolerances"]["ratio"] == 0.01


def test_metric_volume(capsys):
    code, out, _ = run(capsys, "metric", "--generator", "geometric-tree:2,0.3333333333",
                       "--depth", "6", "--volume")
    assert code == 0
    a = 0.3333333333
    expected = sum((2 * a) ** n for n in range(1, 7))
    assert json.loads(out)["volume"] == pytest.approx(expected, rel=1e-14)
    assert expected == pytest.approx(2 * (1 - (2 / 3) ** 6), rel=1e-9)


def test_check_random_tree(tmp_path, capsys):
    code, out, _ = run(capsys, "check", "--seed", "42", "--graph", "random-tree:200",
                       "--out", str(tmp_path))
    report = json.loads(out)
    assert code == 0 and report["passed"]
    assert all(c["passed"] for c in report["checks"])


def test_check_is_byte_identical(tmp_path, capsys):
    for sub in ("a", "b"):
        run(capsys, "check", "--seed", "7", "--graph", "random-graph:60,15",
            "--out", str(tmp_path / sub))
    assert (tmp_path / "a" / "check.json").read_bytes() == \
        (tmp_path / "b" / "check.json").read_bytes()


def test_check_needs_seed(capsys):
    code, _, err = run(capsys, "check", "--graph", "random-tree:20")
    assert code == 2
    assert json.loads(err)["error"] in ("ConfigError", "BadSpec")


def test_bad_generator_exit_code(capsys):
    code, _, err = run(capsys, "metric", "--generator", "nonsense", "--depth", "3")
    assert code == 2
    assert json.loads(err)["error"] == "BadSpec"


def test_failed_expectation_exit_code(capsys):
    code, _, err = run(capsys, "cut", "--generator", "sibling-tree:2,1/3,1/4", "--depth", "5",
                       "--x", "(0)", "--y", "(1)", "--witness", "r:r.0;r:r.1",
                       "--expect", "separated")
    assert code == 1
    assert json.loads(err)["invariant"] == "cut-verdict"


def test_cut_separated(tmp_path, capsys):
    code, out, _ = run(capsys, "cut", "--generator", "geometric-tree:2,1/3", "--depth", "5",
                       "--x", "(0)", "--y", "(1)", "--witness", "r:r.0", "--out", str(tmp_path),
                       "--expect", "separated")
    assert code == 0
    summary = json.loads(out)
    assert summary["verdict"]["status"] == "separated"
    flat = json.loads((tmp_path / "flat-function.json").read_text())
    assert set(flat["values"].values()) == {0.0, 1.0}


def test_generate_round_trip(tmp_path, capsys):
    code, out, _ = run(capsys, "generate", "--generator", "figure-a", "--depth", "4",
                       "--out", str(tmp_path))
    assert code == 0
    data = json.loads((tmp_path / "truncation-4.json").read_text())
    assert len(data["vertices"]) == 5 + 15
    code, out, _ = run(capsys, "metric", "--graph", f"file:{tmp_path / 'truncation-4.json'}",
                       "--depth", "10", "--diameter")
    assert code == 0
    # longest route: pendant of v0 to a pendant of v3 through the spine
    assert json.loads(out)["diameter"] == pytest.approx(2 + 1 - 2.0**-3)


def test_dirichlet_tower_csv(tmp_path, capsys):
    code, out, _ = run(capsys, "dirichlet", "--generator", "geometric-tree:2,1/3",
                       "--depths", "2,3", "--data", "1.5", "--spectral", "--out", str(tmp_path))
    assert code == 0
    with open(tmp_path / "dirichlet.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 7 + 15
    assert all(abs(float(r["value"]) - 1.5) <= 1e-14 for r in rows)
    assert all(s["passed"] for s in json.loads(out)["spectral"])


def test_evolve_outputs(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("NETLAPLACE_OUT", str(tmp_path))
    code, out, _ = run(capsys, "evolve", "--generator", "geometric-tree:2,1/3", "--depth", "4",
                       "--bc", "reflecting", "--times", "0,0.5,1")
    assert code == 0
    summary = json.loads(out)
    assert summary["checks"]["passed"]
    assert max(summary["mass"]) - min(summary["mass"]) <= 1e-10
    assert (tmp_path / "evolve.csv").exists()


def test_evolve_point_probe_absorbing(tmp_path, capsys):
    code, out, _ = run(capsys, "evolve", "--generator", "geometric-tree:2,1/3", "--depth", "3",
                       "--bc", "absorbing", "--probe", "r.0", "--times", "0,1",
                       "--out", str(tmp_path))
    assert code == 0
    mass = json.loads(out)["mass"]
    assert mass[0] == pytest.approx(1.0) and mass[1] < mass[0]
