import csv
import json

import pytest

from lipone.cli import main
from lipone.suites import ExperimentConfig

QUARTER = '{"kind": "cantor", "alpha": {"rule": "geometric", "c": 0.25, "q": 0.25}, "max_stage": 14}'


def run(tmp_path, *args):
    return main([*args, "--out", str(tmp_path)])


def test_cantor_table(tmp_path, capsys):
    assert run(tmp_path, "cantor", "--set", QUARTER, "--stage", "3") == 0
    out = json.loads((tmp_path / "cantor_stage3.json").read_text())
    assert len(out["intervals"]["data"]) == 8
    assert out["measure_table"][-1]["measure"] == 0.5625
    assert "0.5625" in capsys.readouterr().out


def test_cantor_stage_zero(tmp_path):
    assert run(tmp_path, "cantor", "--stage", "0") == 0
    out = json.loads((tmp_path / "cantor_stage0.json").read_text())
    assert out["intervals"]["data"] == [[0.0, 1.0]] and out["measure_table"][0]["measure"] == 1.0


def test_cantor_summability(tmp_path, capsys):
    bad = '{"kind": "cantor", "alpha": {"rule": "geometric", "c": 0.5, "q": 0.25}}'
    assert run(tmp_path, "cantor", "--set", bad) == 2
    assert "summability violated" in capsys.readouterr().err


def test_set_from_file(tmp_path):
    path = tmp_path / "set.json"
    path.write_text(QUARTER)
    assert run(tmp_path, "cantor", "--set", str(path), "--stage", "2") == 0


@pytest.mark.parametrize("spec, grid, n, last", [
    ('{"kind": "intervals", "data": [[0, 1]]}', "-1,2,0.01", 301, 1.0),
    ('{"kind": "intervals", "data": []}', "-1,2,0.5", 7, 0.0),
    (QUARTER, "0,1,0.0625", 17, 0.5),
])
def test_primitive(tmp_path, spec, grid, n, last):
    assert run(tmp_path, "primitive", "--set", spec, f"--grid={grid}") == 0
    lines = (tmp_path / "primitive.csv").read_text().split()
    assert lines[0] == "value" and len(lines) == n + 1 and float(lines[-1]) == last
    head = json.loads((tmp_path / "primitive.json").read_text())
    assert head["shape"] == [n]
    assert (head["bracket_width"] > 0) == (spec == QUARTER)


@pytest.mark.parametrize("argv", [
    ["verify", "nope"],
    ["verify", "thm4.1", "--grid=0,1,0.3"],
    ["verify", "thm4.1", "--radii", "abc"],
    ["primitive", "--set", "{not json"],
    ["bogus"],
])
def test_config_errors_exit_2(tmp_path, argv):
    assert run(tmp_path, *argv) == 2


REDUCED = [
    ["verify", "thm4.1", "--set", '{"kind": "intervals", "data": [[0, 1]]}', "--grid=-0.5,1.5,0.0078125",
     "--radii", "0.125,3"],
    ["verify", "thm4.1", "--set", QUARTER, "--stage", "10", "--grid=-0.25,1.25,0.0009765625", "--radii", "0.125,5"],
    ["verify", "thm4.2-counterexample"],
    ["verify", "prop3.3-cantor", "--stage", "6"],
    ["verify", "sec5-cantor-square", "--stage", "4"],
    ["verify", "thm6.1-tent", "--budget", "100", "--resolution", "128", "--grid=-0.125,1.125,0.015625",
     "--grid=-0.125,1.125,0.015625"],
    ["verify", "final-example", "--set", QUARTER, "--stage", "10", "--grid=-1.25,1.25,0.0078125",
     "--grid=-1.25,1.25,0.0078125", "--radii", "0.0625,2"],
]


@pytest.mark.parametrize("argv", REDUCED, ids=lambda a: a[1])
def test_suites_pass_and_are_deterministic(tmp_path, argv):
    suite = argv[1]
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(a, *argv) == 0
    assert run(b, *argv) == 0
    for name in (f"{suite}_points.csv", f"{suite}_summary.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    summary = json.loads((a / f"{suite}_summary.json").read_text())
    assert summary["passed"] and all(summary["criteria"].values())
    with (a / f"{suite}_points.csv").open() as fh:
        assert next(csv.reader(fh))


def test_failing_criterion_exits_1(tmp_path):
    argv = ["verify", "thm4.1", "--set", '{"kind": "intervals", "data": [[0, 0], [1, 2]]}',
            "--grid=-0.5,2.5,0.0078125", "--radii", "0.125,3"]
    assert run(tmp_path, *argv) == 1
    summary = json.loads((tmp_path / "thm4.1_summary.json").read_text())
    assert summary["criteria"]["witness_llip_ge_1_minus_tol"] is False


@pytest.mark.parametrize("kw", [
    {"grid": [(0.0, 1.0, 0.3)]},
    {"radii": (0.0, 3)},
    {"budget": 0},
    {"stage": -1},
    {"tol": 1.5},
])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        ExperimentConfig("verify", **kw)
