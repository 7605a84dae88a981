"""``lipone`` command line: Cantor stages, sampled measure primitives and verification suites.

Exit codes: 0 pass, 1 criterion failure, 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .constructors import MeasurePrimitive
from .lipest import GridFunction
from .realsets import CantorSet, IntervalSet, parse_set
from .suites import CANTOR_QUARTER, SUITES, ExperimentConfig, run_suite

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _jsonable(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def dump_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def dump_csv(path: Path, header, rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])


def _set_arg(text: str) -> dict:
    p = Path(text)
    raw = p.read_text() if not text.lstrip().startswith("{") and p.exists() else text
    try:
        obj = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise argparse.ArgumentTypeError(f"--set is neither a JSON file nor inline JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise argparse.ArgumentTypeError("--set must describe a JSON object")
    return obj


def _grid_arg(text: str) -> tuple[float, float, float]:
    try:
        lo, hi, h = (float(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"--grid expects lo,hi,h, got {text!r}") from None
    return lo, hi, h


def _radii_arg(text: str) -> tuple[float, int]:
    try:
        R, K = text.split(",")
        return float(R), int(K)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--radii expects R,K, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--set", dest="set_spec", type=_set_arg, help="set JSON: a file path or inline JSON")
    common.add_argument("--grid", action="append", type=_grid_arg, metavar="LO,HI,H",
                        help="grid axis; repeat once per axis")
    common.add_argument("--radii", type=_radii_arg, metavar="R,K", help="radius sweep R*2^-k, k=0..K")
    common.add_argument("--stage", type=int)
    common.add_argument("--budget", type=int)
    common.add_argument("--resolution", type=int)
    common.add_argument("--tol", type=float)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--base", type=float, default=0.0, help="base point a of the measure primitive")
    common.add_argument("--out", default=".", help="output directory")

    p = _Parser(prog="lipone", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("cantor", parents=[common], help="stage intervals and measure table of a fat Cantor set")
    sub.add_parser("primitive", parents=[common], help="sample x -> measure([a, x] & F) on a grid")
    v = sub.add_parser("verify", parents=[common], help="run a verification suite")
    v.add_argument("suite", help=", ".join(SUITES))
    return p


def _config(ns: argparse.Namespace) -> ExperimentConfig:
    return ExperimentConfig(
        command=ns.command, suite=getattr(ns, "suite", None), set_spec=ns.set_spec, grid=ns.grid,
        radii=ns.radii, stage=ns.stage, budget=ns.budget, resolution=ns.resolution, tol=ns.tol,
        seed=ns.seed, base=ns.base, out=ns.out)


def cmd_cantor(cfg: ExperimentConfig) -> int:
    spec = cfg.set_spec if cfg.set_spec is not None else CANTOR_QUARTER
    cs = parse_set(spec)
    if not isinstance(cs, CantorSet):
        raise ValueError("cantor needs a set of kind 'cantor'")
    n = cfg.stage if cfg.stage is not None else 3
    stage = cs.stage(n)
    table = [{"stage": k, "intervals": 2**k, "length": cs.stage_length(k), "measure": cs.stage_measure(k)}
             for k in range(n + 1)]
    value, err = cs.measure()
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    dump_json(out / f"cantor_stage{n}.json", {"set": cs.to_json(), "stage": n, "intervals": stage.to_json(),
                                               "measure_table": table, "limit_measure": value,
                                               "limit_error_bound": err})
    dump_csv(out / f"cantor_stage{n}_measures.csv", ["stage", "intervals", "length", "measure"],
             [(r["stage"], r["intervals"], r["length"], r["measure"]) for r in table])
    for r in table:
        print(f"stage {r['stage']:>3}  measure {r['measure']!r}")
    return EXIT_OK


def cmd_primitive(cfg: ExperimentConfig) -> int:
    F = parse_set(cfg.set_spec if cfg.set_spec is not None else {"kind": "intervals", "data": [[0.0, 1.0]]})
    axes = cfg.grid if cfg.grid is not None else [(-1.0, 2.0, 0.01)]
    if len(axes) != 1:
        raise ValueError("primitive samples a 1D grid; pass --grid once")
    stage = None if isinstance(F, IntervalSet) else (cfg.stage if cfg.stage is not None else F.max_stage)
    prim = MeasurePrimitive(F, cfg.base, stage)
    f = GridFunction.sample(prim.evaluate, [(lo, hi) for lo, hi, _ in axes], [h for _, _, h in axes])
    width = float(np.max(prim.bracket(f.axis(0)).width))
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    f.save(out / "primitive", {"set": F.to_json(), "base": cfg.base, "stage": stage, "bracket_width": width})
    print(f"{f.shape[0]} samples, bracket width {width!r}")
    return EXIT_OK


def cmd_verify(cfg: ExperimentConfig) -> int:
    if cfg.suite not in SUITES:
        raise ConfigError(f"unknown suite {cfg.suite!r}; choose from {', '.join(SUITES)}")
    res = run_suite(cfg.suite, cfg)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    dump_csv(out / f"{res.suite}_points.csv", res.header, res.rows)
    summary = res.to_json()
    summary.pop("seconds")  # keep the file byte-identical across runs
    summary["config"] = {k: v for k, v in vars(cfg).items() if k != "out"}
    dump_json(out / f"{res.suite}_summary.json", summary)
    for name, ok in res.criteria.items():
        print(f"{'PASS' if ok else 'FAIL'}  {res.suite}: {name}")
    print(f"{res.suite}: {'pass' if res.passed else 'FAIL'} ({res.seconds:.2f} s)", file=sys.stderr)
    return EXIT_OK if res.passed else EXIT_FAIL


COMMANDS = {"cantor": cmd_cantor, "primitive": cmd_primitive, "verify": cmd_verify}


def main(argv: list[str] | None = None) -> int:
    try:
        ns = build_parser().parse_args(argv)
        cfg = _config(ns)
        return COMMANDS[ns.command](cfg)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except (ConfigError, ValueError, KeyError, TypeError, OSError) as exc:
        print(f"lipone: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
