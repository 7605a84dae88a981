"""Verification experiments run by ``lipone verify``.

Each suite takes an :class:`ExperimentConfig`, returns a :class:`SuiteResult`
with named pass/fail criteria, a JSON-able summary and per-point rows, and
never writes files itself.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import constructors as cons
from . import density as dens
from .lipest import GridFunction, global_lipschitz, llip_estimate, llip_field, radius_sweep
from .realsets import CantorSet, IntervalSet, as_interval_set, fat_cantor, make_interval_set, parse_set, stage_endpoints

POINT_HEADER = ["point", "r", "llip", "biglip", "littlelip"]


@dataclass
class ExperimentConfig:
    """Parameters of one CLI invocation; ``None`` means the suite's default."""

    command: str
    suite: str | None = None
    set_spec: dict | None = None
    grid: list[tuple[float, float, float]] | None = None
    radii: tuple[float, int] | None = None
    stage: int | None = None
    budget: int | None = None
    resolution: int | None = None
    tol: float | None = None
    seed: int = 0
    base: float = 0.0
    out: str = "."

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.grid is not None:
            for lo, hi, h in self.grid:
                if not (hi > lo and h > 0):
                    raise ValueError(f"bad grid axis {(lo, hi, h)!r}")
                steps = (hi - lo) / h
                if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
                    raise ValueError(f"spacing {h!r} does not divide [{lo!r}, {hi!r}] evenly")
        if self.radii is not None:
            R, K = self.radii
            if not (R > 0 and int(K) == K and K >= 0):
                raise ValueError("radius sweep needs R > 0 and integer K >= 0")
        for name in ("stage", "budget", "resolution"):
            v = getattr(self, name)
            if v is not None and (int(v) != v or v < (0 if name == "stage" else 1)):
                raise ValueError(f"--{name} must be a {'non-negative' if name == 'stage' else 'positive'} integer")
        if self.tol is not None and not 0 < self.tol < 1:
            raise ValueError("--tol must lie in (0, 1)")

    def the_set(self, default: dict) -> IntervalSet | CantorSet:
        return parse_set(self.set_spec if self.set_spec is not None else default)

    def sweep(self, R: float, K: int) -> np.ndarray:
        return radius_sweep(*(self.radii if self.radii is not None else (R, K)))


@dataclass
class SuiteResult:
    suite: str
    criteria: dict[str, bool]
    summary: dict
    rows: list[tuple] = field(default_factory=list)
    header: list[str] = field(default_factory=lambda: list(POINT_HEADER))
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(self.criteria.values())

    def to_json(self) -> dict:
        return {"suite": self.suite, "passed": self.passed, "criteria": self.criteria,
                "summary": self.summary, "seconds": self.seconds}


CANTOR_QUARTER = {"kind": "cantor", "alpha": {"rule": "geometric", "c": 0.25, "q": 0.25}, "max_stage": 20}


def _grid_box(cfg: ExperimentConfig, default: list[tuple[float, float, float]]):
    axes = cfg.grid if cfg.grid is not None else default
    return [(lo, hi) for lo, hi, _ in axes], [h for _, _, h in axes]


def _stage_of(F, cfg: ExperimentConfig, default: int) -> int | None:
    if isinstance(F, IntervalSet):
        return None
    return min(cfg.stage if cfg.stage is not None else default, F.max_stage)


def _ordering_holds(estimates) -> bool:
    return all(np.all(e.little_lip_at_r <= e.big_lip_at_r) and np.all(e.big_lip_at_r <= e.llip_at_r)
               for e in estimates)


# ---------------------------------------------------------------------------
# measure primitive of a quasi-dense set
# ---------------------------------------------------------------------------


def suite_primitive(cfg: ExperimentConfig) -> SuiteResult:
    F = cfg.the_set(CANTOR_QUARTER)
    stage = _stage_of(F, cfg, 14)
    tol = cfg.tol if cfg.tol is not None else 0.05
    box, hs = _grid_box(cfg, [(-0.25, 1.25, 2.0**-14)])
    if len(box) != 1:
        raise ValueError("the primitive suite needs a 1D grid")
    radii = cfg.sweep(0.25, 10)
    prim = cons.MeasurePrimitive(F, cfg.base, stage)
    f = GridFunction.sample(prim.evaluate, box, hs)
    field_ = llip_field(f, radii)
    x = f.axis(0)
    S = as_interval_set(F, stage)
    glip = global_lipschitz(f)

    # witness points: stage-6 endpoints for Cantor sets, every grid point of F otherwise
    if isinstance(F, CantorSet):
        targets = stage_endpoints(F, min(6, stage))
        idx = np.unique(np.clip(np.rint((targets - f.origin[0]) / f.spacing[0]).astype(int), 0, len(x) - 1))
    else:
        idx = np.flatnonzero(S.contains(x))
    final = field_.llip_final
    wit = final[idx]
    dist = S.distance(x)
    far = dist > radii[0]
    near = dist > radii[-1]
    rows = []
    for i in idx.tolist():
        rows.extend(field_.estimate((i,)).rows())
    criteria = {
        "global_lipschitz_le_1": bool(glip <= 1 + 1e-9),
        "witness_llip_ge_1_minus_tol": bool(idx.size > 0 and np.all(wit >= 1 - tol)),
        "far_llip_zero": bool(np.all(final[far] <= 1e-9)),
        "outside_smallest_radius_llip_zero": bool(np.all(final[near] <= 1e-9)),
        "ordering": field_.ordered(),
    }
    summary = {
        "set": F.to_json(), "stage": stage, "base": cfg.base, "grid": {"box": box, "spacing": hs},
        "radii": radii.tolist(), "tol": tol, "global_lip": glip,
        "n_witness": int(idx.size), "witness_llip_min": float(wit.min()) if idx.size else None,
        "n_far": int(far.sum()), "far_llip_max": float(final[far].max()) if far.any() else None,
        "n_outside_smallest_radius": int(near.sum()),
        "outside_smallest_radius_llip_max": float(final[near].max()) if near.any() else None,
    }
    return SuiteResult("thm4.1", criteria, summary, rows)


# ---------------------------------------------------------------------------
# a closed set that is not quasi-dense
# ---------------------------------------------------------------------------


def suite_counterexample(cfg: ExperimentConfig) -> SuiteResult:
    F = cfg.the_set({"kind": "intervals", "data": [[0.0, 0.0], [1.0, 2.0]]})
    if not isinstance(F, IntervalSet):
        raise ValueError("the counterexample suite needs an interval set")
    radii = cfg.sweep(0.5, 2)
    box, hs = _grid_box(cfg, [(-1.0, 3.0, 2.0**-7)])
    samples = sorted(set(F.lo.tolist()) | set(F.hi.tolist()))
    report = dens.is_quasi_dense(F, samples, radii)
    f = GridFunction.sample(cons.MeasurePrimitive(F, cfg.base).evaluate, box, hs)
    rows, est, llip0 = [], None, None
    if report.witness is not None:
        x0, r0 = report.witness
        i = int(round((x0 - f.origin[0]) / f.spacing[0]))
        sweep = radii[radii <= r0]
        est = llip_estimate(f, (i,), sweep)
        llip0 = est.llip_final
        rows = est.rows()
    criteria = {
        "quasi_density_refuted": report.verdict == "refuted",
        "llip_zero_at_witness": llip0 == 0.0,
        "ordering": est is not None and _ordering_holds([est]),
    }
    summary = {"set": F.to_json(), "quasi_density": report.to_json(), "llip_at_witness": llip0,
               "radii": radii.tolist(), "grid": {"box": box, "spacing": hs}}
    return SuiteResult("thm4.2-counterexample", criteria, summary, rows)


# ---------------------------------------------------------------------------
# fat Cantor set: window identity, quasi-density evidence, witness ratios
# ---------------------------------------------------------------------------


def suite_cantor_density(cfg: ExperimentConfig) -> SuiteResult:
    F = cfg.the_set(CANTOR_QUARTER)
    if not isinstance(F, CantorSet):
        raise ValueError("the Cantor density suite needs a Cantor set")
    top = min(cfg.stage if cfg.stage is not None else 10, F.max_stage)
    m = F.measure()[0]
    worst = 0.0
    for n in range(1, top + 1):
        iv = F.stage(n)
        for s in sorted({n, F.max_stage}):
            lo, hi = F.window_measure(iv.lo, iv.hi, s)
            worst = max(worst, float(np.max(np.abs(hi - lo))), float(np.max(np.abs(lo - m / 2.0**n))))
    q_stage = min(6, top)
    samples = stage_endpoints(F, q_stage)
    radii = cfg.sweep(0.25, 6)
    qd = dens.is_quasi_dense(F, samples, radii, stage=F.max_stage)
    rows = []
    ratio_err = 0.0
    for x in (0.0, float(F.stage(1).hi[0])):
        wb = dens.witness_balls(F, x, top)
        for n, c, r, q in wb.table():
            closed = dens.cantor_witness_ratio(F, n)
            ratio_err = max(ratio_err, abs(q - closed))
            rows.append((repr(x), n, c, r, q, closed))
    criteria = {
        "window_identity": worst <= 1e-12,
        "quasi_dense_at_endpoints": qd.passed,
        "witness_ratio_closed_form": ratio_err <= 1e-12,
    }
    summary = {"set": F.to_json(), "stages": top, "window_identity_max_error": worst,
               "quasi_density": {"verdict": qd.verdict, "stage": q_stage, "n_samples": len(samples),
                                 "radii": radii.tolist()},
               "witness_ratio_max_error": ratio_err}
    return SuiteResult("prop3.3-cantor", criteria, summary, rows,
                       header=["x", "n", "center", "radius", "ratio", "closed_form"])


# ---------------------------------------------------------------------------
# connectivity of the complement of a Cantor square
# ---------------------------------------------------------------------------


def suite_cantor_square(cfg: ExperimentConfig) -> SuiteResult:
    F = cfg.the_set(CANTOR_QUARTER)
    if not isinstance(F, CantorSet):
        raise ValueError("the Cantor square suite needs a Cantor set")
    top = min(cfg.stage if cfg.stage is not None else 8, F.max_stage)
    rows = []
    ok = True
    for n in range(1, top + 1):
        m = cfg.resolution if cfg.resolution is not None else 2 ** (n + 3)
        rep = dens.complement_connected(dens.cantor_square(F, n), m)
        ok &= rep.components == 1 and bool(rep.stable)
        rows.append((n, m, rep.components, rep.components_doubled, rep.stable))
    ann = dens.complement_connected(cons.Region.annulus((0.0, 0.0), 0.5, 1.0), 64)
    criteria = {"cantor_square_complement_connected": bool(ok),
                "annulus_two_components": ann.components == 2 and bool(ann.stable)}
    summary = {"set": F.to_json(), "stages": top, "annulus": ann.to_json(),
               "note": "finite raster evidence at the listed stages and resolutions, not a proof"}
    return SuiteResult("sec5-cantor-square", criteria, summary, rows,
                       header=["stage", "resolution", "components", "components_doubled", "stable"])


# ---------------------------------------------------------------------------
# tent sums over a disjoint ball packing of the unit square
# ---------------------------------------------------------------------------


def suite_tent(cfg: ExperimentConfig) -> SuiteResult:
    top = cfg.budget if cfg.budget is not None else 1000
    budgets = sorted({max(1, top // 100), max(1, top // 10), top})
    res = cfg.resolution if cfg.resolution is not None else 512
    tol = cfg.tol if cfg.tol is not None else 0.05
    region = cons.Region.box((0.0, 0.0), (1.0, 1.0))
    packs = {b: cons.pack_regular_closed(region, budget=b, resolution=res) for b in budgets}
    deficits = [packs[b].deficit for b in budgets]
    mid = budgets[len(budgets) // 2] if len(budgets) > 1 else budgets[0]
    fam = packs[mid].family
    tent = cons.TentSum(fam)

    rng = np.random.default_rng(cfg.seed)
    p = rng.uniform(-0.125, 1.125, size=(10_000, 2))
    q = rng.uniform(-0.125, 1.125, size=(10_000, 2))
    gap = np.abs(tent(p) - tent(q)) - np.sqrt(np.sum((p - q) ** 2, axis=-1))
    lip_ok = bool(np.all(gap <= 1e-12))

    box, hs = _grid_box(cfg, [(-0.125, 1.125, 1 / 128), (-0.125, 1.125, 1 / 128)])
    radii = cfg.sweep(8 * max(hs), 1)
    f = GridFunction.sample(tent.evaluate, box, hs)
    field_ = llip_field(f, radii)
    pts = f.points()
    R = float(radii[0])
    deep = np.zeros(f.shape, dtype=bool)
    for c, r in fam:
        if r > R:
            deep |= np.sqrt(np.sum((pts - c) ** 2, axis=-1)) < r - R
    far = fam.distance(pts) > R
    final = field_.llip_final
    rows = []
    for i, j in np.argwhere(deep)[:: max(1, int(deep.sum()) // 200)].tolist():
        rows.extend(field_.estimate((i, j)).rows())
    criteria = {
        "deficit_strictly_decreasing": bool(all(a > b for a, b in zip(deficits, deficits[1:]))),
        "tent_sum_1_lipschitz": lip_ok,
        "inside_llip_ge_1_minus_tol": bool(deep.any() and np.all(final[deep] >= 1 - tol)),
        "outside_llip_le_tol": bool(np.all(final[far] <= tol)),
        "ordering": field_.ordered(),
    }
    summary = {
        "budgets": budgets, "n_balls": [len(packs[b].family) for b in budgets], "deficits": deficits,
        "family_budget": mid, "family": fam.to_json(), "seed": cfg.seed,
        "max_pair_excess": float(gap.max()), "radii": radii.tolist(), "tol": tol,
        "n_inside": int(deep.sum()), "inside_llip_min": float(final[deep].min()) if deep.any() else None,
        "n_outside": int(far.sum()), "outside_llip_max": float(final[far].max()) if far.any() else None,
    }
    return SuiteResult("thm6.1-tent", criteria, summary, rows)


# ---------------------------------------------------------------------------
# radial composition with the Cantor primitive
# ---------------------------------------------------------------------------


def radial_sample_points(cs: CantorSet, f: GridFunction, gap_stage: int, end_stage: int, R: float,
                         n_angles: int = 16):
    """Grid indices with ``|a|`` in a gap of ``C_gap_stage`` beyond ``R`` from it, and with ``|a|`` an endpoint.

    Gap points sit at gap midpoints along ``n_angles`` directions (snapped to
    the grid, then re-checked); endpoint points sit on the four half-axes.
    """
    S = cs.stage(gap_stage)
    mids = 0.5 * (S.hi[:-1] + S.lo[1:])
    gap_idx = set()
    for rho in mids.tolist():
        for t in range(n_angles):
            th = 2 * math.pi * t / n_angles
            a = np.array([rho * math.cos(th), rho * math.sin(th)])
            ij = tuple(np.rint((a - np.array(f.origin)) / np.array(f.spacing)).astype(int).tolist())
            if not all(0 <= i < n for i, n in zip(ij, f.shape)):
                continue
            p = np.array(f.origin) + np.array(ij) * np.array(f.spacing)
            if float(S.distance(math.hypot(*p))) > R and not S.contains(math.hypot(*p)):
                gap_idx.add(ij)
    end_idx = set()
    for t in stage_endpoints(cs, end_stage).tolist():
        for a in ((t, 0.0), (-t, 0.0), (0.0, t), (0.0, -t)):
            try:
                end_idx.add(f.index_of(a))
            except ValueError:
                pass
    return sorted(gap_idx), sorted(end_idx)


def suite_radial(cfg: ExperimentConfig) -> SuiteResult:
    F = cfg.the_set(CANTOR_QUARTER)
    if not isinstance(F, CantorSet):
        raise ValueError("the radial suite needs a Cantor set")
    stage = _stage_of(F, cfg, 14)
    box, hs = _grid_box(cfg, [(-1.25, 1.25, 2.0**-9), (-1.25, 1.25, 2.0**-9)])
    radii = cfg.sweep(16 * max(hs), 2)
    tol = cfg.tol if cfg.tol is not None else 0.05
    R = cons.RadialComposition(cons.MeasurePrimitive(F, 0.0, stage))
    rotation = float(R((0.6, 0.8))) == float(R((1.0, 0.0)))
    f = GridFunction.sample(R.evaluate, box, hs)
    gaps, ends = radial_sample_points(F, f, min(6, stage), min(4, stage), float(radii[0]))
    gap_est = [llip_estimate(f, ij, radii) for ij in gaps]
    end_est = [llip_estimate(f, ij, radii) for ij in ends]
    gap_vals = np.array([e.llip_final for e in gap_est])
    end_vals = np.array([e.llip_final for e in end_est])
    rows = [r for e in gap_est + end_est for r in e.rows()]
    criteria = {
        "rotational_invariance": rotation,
        "gap_llip_le_tol": bool(gap_vals.size > 0 and np.all(gap_vals <= tol)),
        "endpoint_llip_ge_0.9": bool(end_vals.size > 0 and np.all(end_vals >= 0.9)),
        "ordering": _ordering_holds(gap_est + end_est),
    }
    summary = {"set": F.to_json(), "stage": stage, "grid": {"box": box, "spacing": hs},
               "radii": radii.tolist(), "tol": tol,
               "n_gap_points": int(gap_vals.size), "gap_llip_max": float(gap_vals.max()) if gap_vals.size else None,
               "n_endpoint_points": int(end_vals.size),
               "endpoint_llip_min": float(end_vals.min()) if end_vals.size else None}
    return SuiteResult("final-example", criteria, summary, rows)


SUITES: dict[str, Callable[[ExperimentConfig], SuiteResult]] = {
    "thm4.1": suite_primitive,
    "thm4.2-counterexample": suite_counterexample,
    "prop3.3-cantor": suite_cantor_density,
    "sec5-cantor-square": suite_cantor_square,
    "thm6.1-tent": suite_tent,
    "final-example": suite_radial,
}


def run_suite(name: str, cfg: ExperimentConfig) -> SuiteResult:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    t0 = time.perf_counter()
    out = SUITES[name](cfg)
    out.seconds = time.perf_counter() - t0
    return out
