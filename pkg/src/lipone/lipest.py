"""Discrete estimators for the local, big and little Lipschitz derivatives.

For a sampled function ``f`` and a grid point ``x`` every estimator works on
the closed metric ball ``B(x, r)`` restricted to grid points:

* local   ``llip(r)   = max_{u != v in B} |f(u) - f(v)| / |u - v|``
* big     ``biglip(r) = max_{u != x in B} |f(u) - f(x)| / |u - x|``
* little  ``lip(r)    = max_{u in B} |f(u) - f(x)| / r``

The limits are replaced by a radius sweep: ``llip`` and ``biglip`` report the
value at the smallest radius (their ball suprema are monotone in ``r``) and
``lip`` reports the minimum over the sweep.

All pair distances are computed from integer index offsets times the spacing,
so the three estimators see bit-identical ratios for shared pairs and the
ordering ``lip <= biglip <= llip`` holds exactly at every radius.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy import ndimage

from .realsets import CantorSet, IntervalSet, as_interval_set


@dataclass(frozen=True)
class GridFunction:
    """Samples of a real function on a uniform 1D or 2D grid (``values[i, j]`` at ``origin + (i, j) * spacing``)."""

    origin: tuple[float, ...]
    spacing: tuple[float, ...]
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "origin", tuple(float(o) for o in np.atleast_1d(self.origin)))
        object.__setattr__(self, "spacing", tuple(float(h) for h in np.atleast_1d(self.spacing)))
        if values.ndim not in (1, 2):
            raise ValueError("only 1D and 2D grids are supported")
        if len(self.origin) != values.ndim or len(self.spacing) != values.ndim:
            raise ValueError("origin/spacing length must match the grid dimension")
        if not all(h > 0 and math.isfinite(h) for h in self.spacing):
            raise ValueError("spacing must be positive")
        if min(values.shape) < 2:
            raise ValueError("each axis needs at least two samples")
        if not np.all(np.isfinite(values)):
            raise ValueError("all samples must be finite")

    @classmethod
    def sample(cls, func: Callable, box: Sequence[tuple[float, float]], spacing) -> "GridFunction":
        """Sample ``func`` on ``box`` (one ``(lo, hi)`` per axis); ``spacing`` must divide each extent."""
        box = [tuple(map(float, b)) for b in box]
        hs = np.broadcast_to(np.asarray(spacing, dtype=float), (len(box),))
        axes = []
        for (lo, hi), h in zip(box, hs):
            steps = (hi - lo) / h
            n = int(round(steps))
            if n < 1 or abs(steps - n) > 1e-9 * max(1.0, abs(steps)):
                raise ValueError(f"spacing {h!r} does not divide [{lo!r}, {hi!r}] evenly")
            axes.append(lo + np.arange(n + 1) * h)
        if len(axes) == 1:
            vals = func(axes[0])
        else:
            gx, gy = np.meshgrid(*axes, indexing="ij")
            vals = func(np.stack([gx, gy], axis=-1))
        return cls(tuple(b[0] for b in box), tuple(hs), np.asarray(vals, dtype=float))

    @property
    def dim(self) -> int:
        return self.values.ndim

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    @property
    def domain_box(self) -> tuple[tuple[float, float], ...]:
        return tuple((o, o + (n - 1) * h) for o, h, n in zip(self.origin, self.spacing, self.shape))

    def axis(self, k: int = 0) -> np.ndarray:
        return self.origin[k] + np.arange(self.shape[k]) * self.spacing[k]

    def points(self) -> np.ndarray:
        """Coordinates of every sample: shape ``(n,)`` in 1D, ``(n0, n1, 2)`` in 2D."""
        if self.dim == 1:
            return self.axis(0)
        gx, gy = np.meshgrid(self.axis(0), self.axis(1), indexing="ij")
        return np.stack([gx, gy], axis=-1)

    def index_of(self, point) -> tuple[int, ...]:
        """Grid index of a coordinate that lies exactly on the grid."""
        idx = []
        for k, p in enumerate(np.atleast_1d(point)):
            i = int(round((float(p) - self.origin[k]) / self.spacing[k]))
            if not 0 <= i < self.shape[k] or self.origin[k] + i * self.spacing[k] != float(p):
                raise ValueError(f"{point!r} is not a grid point")
            idx.append(i)
        return tuple(idx)

    def scaled(self, c: float) -> "GridFunction":
        return GridFunction(self.origin, self.spacing, c * self.values)

    def header(self) -> dict:
        return {"dim": self.dim, "origin": list(self.origin), "spacing": list(self.spacing),
                "shape": list(self.shape)}

    def save(self, stem: str | Path, extra: dict | None = None) -> tuple[Path, Path]:
        """Write ``<stem>.json`` (header) and ``<stem>.csv`` (samples, C order, one per line)."""
        stem = Path(stem)
        head = self.header()
        if extra:
            head.update(extra)
        jpath, cpath = stem.with_suffix(".json"), stem.with_suffix(".csv")
        jpath.write_text(json.dumps(head, indent=2, sort_keys=True) + "\n")
        with cpath.open("w", newline="") as fh:
            fh.write("value\n")
            fh.writelines(f"{v!r}\n" for v in self.values.ravel().tolist())
        return jpath, cpath

    @classmethod
    def load(cls, stem: str | Path) -> "GridFunction":
        stem = Path(stem)
        head = json.loads(stem.with_suffix(".json").read_text())
        with stem.with_suffix(".csv").open() as fh:
            next(fh)
            vals = np.array([float(line) for line in fh])
        return cls(tuple(head["origin"]), tuple(head["spacing"]), vals.reshape(head["shape"]))


@dataclass(frozen=True)
class LipEstimate:
    """Radius sweep of the three estimators at one grid point."""

    point: tuple[int, ...]
    radii: np.ndarray
    llip_at_r: np.ndarray
    big_lip_at_r: np.ndarray
    little_lip_at_r: np.ndarray

    @property
    def llip_final(self) -> float:
        return float(self.llip_at_r[-1])

    @property
    def big_lip_final(self) -> float:
        return float(self.big_lip_at_r[-1])

    @property
    def little_lip_final(self) -> float:
        return float(self.little_lip_at_r.min())

    def rows(self) -> list[tuple]:
        p = ":".join(map(str, self.point))
        return [(p, float(r), float(a), float(b), float(c)) for r, a, b, c in
                zip(self.radii, self.llip_at_r, self.big_lip_at_r, self.little_lip_at_r)]


def radius_sweep(R: float, K: int) -> np.ndarray:
    """Geometric sweep ``R * 2**-k`` for ``k = 0..K``."""
    return R * 2.0 ** -np.arange(K + 1)


def default_radii(f: GridFunction) -> np.ndarray:
    """``R = diameter / 4`` halved down to the last radius that is still ``>= 4 * spacing``."""
    ext = np.array([hi - lo for lo, hi in f.domain_box])
    R = float(np.sqrt((ext**2).sum())) / 4
    K = int(math.floor(math.log2(R / (4 * max(f.spacing)))))
    return radius_sweep(R, max(K, 0))


def _check_radii(f: GridFunction, radii) -> np.ndarray:
    radii = np.asarray(radii, dtype=float).ravel()
    if radii.size == 0 or np.any(radii <= 0) or not np.all(np.isfinite(radii)):
        raise ValueError("radii must be positive and finite")
    if np.any(np.diff(radii) >= 0):
        raise ValueError("radii must be strictly decreasing")
    if radii[-1] < 2 * max(f.spacing):
        raise ValueError(f"smallest radius {float(radii[-1])!r} is below twice the grid spacing")
    return radii


def _dist(offsets: np.ndarray, spacing: tuple[float, ...]) -> np.ndarray:
    """Distance of integer offsets (last axis = coordinate) - the single formula every estimator uses."""
    if len(spacing) == 1:
        return np.abs(offsets[..., 0]) * spacing[0]
    a = offsets[..., 0] * spacing[0]
    b = offsets[..., 1] * spacing[1]
    return np.sqrt(a * a + b * b)


def _reach(r: float, h: float) -> int:
    """Largest integer ``k`` with ``k * h <= r``."""
    k = int(math.floor(r / h))
    while (k + 1) * h <= r:
        k += 1
    while k > 0 and k * h > r:
        k -= 1
    return k


def _ball_offsets(f: GridFunction, x: tuple[int, ...], r: float) -> tuple[np.ndarray, np.ndarray]:
    """Offsets of grid points in the closed ball ``B(x, r)`` clipped to the grid, sorted by distance."""
    ranges = []
    for k in range(f.dim):
        m = _reach(r, f.spacing[k])
        ranges.append(np.arange(max(-m, -x[k]), min(m, f.shape[k] - 1 - x[k]) + 1))
    if f.dim == 1:
        off = ranges[0][:, None]
    else:
        a, b = np.meshgrid(*ranges, indexing="ij")
        off = np.stack([a.ravel(), b.ravel()], axis=-1)
    d = _dist(off, f.spacing)
    keep = d <= r
    off, d = off[keep], d[keep]
    order = np.argsort(d, kind="stable")
    return off[order], d[order]


def _as_index(f: GridFunction, x) -> tuple[int, ...]:
    idx = tuple(int(i) for i in np.atleast_1d(x))
    if len(idx) != f.dim or not all(0 <= i < n for i, n in zip(idx, f.shape)):
        raise ValueError(f"{x!r} is not a grid index of a {f.shape} grid")
    return idx


def llip_estimate(f: GridFunction, x, radii, chunk: int = 512) -> LipEstimate:
    """Exhaustive pair enumeration in each ball of the sweep (all three estimators)."""
    radii = _check_radii(f, radii)
    x = _as_index(f, x)
    off, d = _ball_offsets(f, x, radii[0])
    counts = np.searchsorted(d, radii, side="right")
    if counts[-1] < 2:
        raise ValueError(f"ball of radius {radii[-1]!r} at {x} holds fewer than two grid points")
    vals = f.values[tuple((np.asarray(x)[None, :] + off).T)]
    n = len(d)
    # best[b] = max over a < b of the pair ratio; balls are prefixes of the distance order
    best = np.full(n, -np.inf)
    for b0 in range(1, n, chunk):
        b1 = min(n, b0 + chunk)
        doff = off[None, :b1, :] - off[b0:b1, None, :]
        ratio = np.abs(vals[None, :b1] - vals[b0:b1, None]) / np.where(
            np.any(doff != 0, axis=-1), _dist(doff, f.spacing), np.inf)
        ratio[np.arange(b1)[None, :] >= np.arange(b0, b1)[:, None]] = -np.inf
        best[b0:b1] = ratio.max(axis=1)
    pair_max = np.maximum.accumulate(best)
    absdiff = np.abs(vals[1:] - vals[0])
    anchored = np.maximum.accumulate(np.concatenate([[-np.inf], absdiff / d[1:]]))
    spread = np.maximum.accumulate(np.concatenate([[0.0], absdiff]))
    last = counts - 1
    return LipEstimate(x, radii, pair_max[last], anchored[last], spread[last] / radii)


def big_lip_estimate(f: GridFunction, x, radii) -> np.ndarray:
    return llip_estimate(f, x, radii).big_lip_at_r


def little_lip_estimate(f: GridFunction, x, radii) -> np.ndarray:
    return llip_estimate(f, x, radii).little_lip_at_r


@dataclass(frozen=True)
class LipField:
    """Per-radius estimator arrays of shape ``(len(radii), *grid.shape)``."""

    radii: np.ndarray
    llip: np.ndarray
    big_lip: np.ndarray
    little_lip: np.ndarray

    @property
    def llip_final(self) -> np.ndarray:
        return self.llip[-1]

    @property
    def big_lip_final(self) -> np.ndarray:
        return self.big_lip[-1]

    @property
    def little_lip_final(self) -> np.ndarray:
        return self.little_lip.min(axis=0)

    def estimate(self, x) -> LipEstimate:
        idx = (slice(None),) + tuple(int(i) for i in np.atleast_1d(x))
        return LipEstimate(tuple(int(i) for i in np.atleast_1d(x)), self.radii,
                           self.llip[idx], self.big_lip[idx], self.little_lip[idx])

    def ordered(self) -> bool:
        """``lip <= biglip <= llip`` at every point and radius, compared exactly."""
        return bool(np.all(self.little_lip <= self.big_lip) and np.all(self.big_lip <= self.llip))


def llip_field(f: GridFunction, radii) -> LipField:
    """Estimators at every grid point, balls clipped to the grid.

    In 1D the local estimator is ``max(windowed consecutive slopes, biglip)``,
    which equals the all-pairs maximum up to rounding (a chord slope never
    exceeds the largest consecutive slope it spans).  In 2D every pair in each
    ball is visited, grouped by offset so no global pair list is formed.
    """
    radii = _check_radii(f, radii)
    if f.dim == 1:
        return _field_1d(f, radii)
    return _field_2d(f, radii)


def _field_1d(f: GridFunction, radii: np.ndarray) -> LipField:
    v = f.values
    h = f.spacing[0]
    n = len(v)
    reach = [_reach(r, h) for r in radii]
    big = np.empty((len(radii), n))
    little = np.empty((len(radii), n))
    llip = np.empty((len(radii), n))
    best = np.full(n, -np.inf)
    spread = np.zeros(n)
    todo = sorted(range(len(radii)), key=lambda i: reach[i])
    pos = 0
    for dstep in range(1, max(reach) + 1):
        if dstep < n:
            diff = np.abs(v[dstep:] - v[:-dstep])
            ratio = diff / (dstep * h)
            np.maximum(best[:-dstep], ratio, out=best[:-dstep])
            np.maximum(best[dstep:], ratio, out=best[dstep:])
            np.maximum(spread[:-dstep], diff, out=spread[:-dstep])
            np.maximum(spread[dstep:], diff, out=spread[dstep:])
        while pos < len(todo) and reach[todo[pos]] == dstep:
            big[todo[pos]] = best
            little[todo[pos]] = spread / radii[todo[pos]]
            pos += 1
    # consecutive pairs (j, j+1) with x-k <= j and j+1 <= x+k, i.e. slopes[x-k .. x+k-1]
    slopes = np.append(np.abs(np.diff(v)) / h, -np.inf)
    for i, k in enumerate(reach):
        window = ndimage.maximum_filter1d(slopes, size=2 * k, mode="constant", cval=-np.inf)
        llip[i] = np.maximum(window, big[i])
    return LipField(radii, llip, big, little)


def _field_2d(f: GridFunction, radii: np.ndarray) -> LipField:
    v = f.values
    shape = v.shape
    nr = len(radii)
    llip = np.empty((nr,) + shape)
    big = np.empty((nr,) + shape)
    little = np.empty((nr,) + shape)
    for i, r in enumerate(radii):
        m = [_reach(r, h) for h in f.spacing]
        a, b = np.meshgrid(np.arange(-m[0], m[0] + 1), np.arange(-m[1], m[1] + 1), indexing="ij")
        ball = _dist(np.stack([a, b], axis=-1), f.spacing) <= r
        q = np.stack([a[ball], b[ball]], axis=-1)
        # anchored pairs (x, x + q)
        bmax = np.full(shape, -np.inf)
        smax = np.zeros(shape)
        for dq, dd in zip(q, _dist(q, f.spacing)):
            if dd == 0:
                continue
            diff = _forward_absdiff(v, dq)
            np.maximum(bmax, diff / dd, out=bmax)
            np.maximum(smax, np.where(np.isfinite(diff), diff, 0.0), out=smax)
        big[i] = bmax
        little[i] = smax / r
        # all pairs (p, p + delta) with both ends in the ball around x
        best = np.full(shape, -np.inf)
        qset = set(map(tuple, q.tolist()))
        for delta in _half_offsets(2 * m[0], 2 * m[1]):
            lens = np.zeros(ball.shape, dtype=bool)
            for qq in q:
                if (qq[0] + delta[0], qq[1] + delta[1]) in qset:
                    lens[qq[0] + m[0], qq[1] + m[1]] = True
            if not lens.any():
                continue
            dd = _dist(np.asarray(delta)[None, :], f.spacing)[0]
            s = _forward_absdiff(v, delta) / dd
            # out[x] = max_{q in lens} s[x + q]
            best = np.maximum(best, ndimage.maximum_filter(s, footprint=lens, mode="constant", cval=-np.inf))
        llip[i] = np.maximum(best, big[i])
    return LipField(radii, llip, big, little)


def _half_offsets(m0: int, m1: int):
    for d0 in range(0, m0 + 1):
        for d1 in range(-m1, m1 + 1):
            if d0 == 0 and d1 <= 0:
                continue
            yield (d0, d1)


def _forward_absdiff(v: np.ndarray, delta) -> np.ndarray:
    """``out[p] = |v[p + delta] - v[p]|``, ``-inf`` where ``p + delta`` leaves the grid."""
    out = np.full(v.shape, -np.inf)
    if any(abs(d) >= n for d, n in zip(delta, v.shape)):
        return out
    src =tuple(slice(max(0, -d), n - max(0, d)) for d, n in zip(delta, v.shape))
    dst = tuple(slice(s.start + d, s.stop + d) for s, d in zip(src, delta))
    out[src] = np.abs(v[dst] - v[src])
    return out


@dataclass
class LipOneReport:
    """Outcome of :func:`check_lip_one_set` on one grid function."""

    tol: float
    band: float
    n_in: int
    n_in_pass: int
    n_out: int
    n_out_pass: int
    n_indeterminate: int
    global_lip: float
    in_failures: list = field(default_factory=list)
    out_failures: list = field(default_factory=list)

    @property
    def frac_in(self) -> float:
        """Fraction of grid points of ``F`` with ``llip >= 1 - tol`` (vacuously 1.0)."""
        return self.n_in_pass / self.n_in if self.n_in else 1.0

    @property
    def frac_out(self) -> float:
        """Fraction of grid points farther than ``band`` from ``F`` with ``llip <= tol`` (vacuously 1.0)."""
        return self.n_out_pass / self.n_out if self.n_out else 1.0

    def to_json(self) -> dict:
        return {"tol": self.tol, "band": self.band, "n_in": self.n_in, "n_in_pass": self.n_in_pass,
                "frac_in": self.frac_in, "n_out": self.n_out, "n_out_pass": self.n_out_pass,
                "frac_out": self.frac_out, "n_indeterminate": self.n_indeterminate,
                "global_lip": self.global_lip,
                "in_failures": self.in_failures[:20], "out_failures": self.out_failures[:20]}


def global_lipschitz(f: GridFunction, n_pairs: int = 10_000, seed: int = 0) -> float:
    """Largest difference quotient of the samples.

    Exact over all pairs in 1D (it is the largest consecutive slope); in 2D the
    maximum over axis and diagonal neighbours plus ``n_pairs`` seeded random pairs.
    """
    v = f.values
    if f.dim == 1:
        return float(np.max(np.abs(np.diff(v))) / f.spacing[0])
    out = -np.inf
    for delta in [(1, 0), (0, 1), (1, 1), (1, -1)]:
        s = _forward_absdiff(v, delta) / _dist(np.asarray(delta)[None, :], f.spacing)[0]
        out = max(out, float(s.max()))
    if n_pairs:
        rng = np.random.default_rng(seed)
        i = rng.integers(0, v.shape, size=(n_pairs, 2))
        j = rng.integers(0, v.shape, size=(n_pairs, 2))
        keep = np.any(i != j, axis=1)
        i, j = i[keep], j[keep]
        d = _dist(i - j, f.spacing)
        out = max(out, float(np.max(np.abs(v[i[:, 0], i[:, 1]] - v[j[:, 0], j[:, 1]]) / d)))
    return out


def check_lip_one_set(f: GridFunction, F, radii, tol: float = 0.05, *, band: float | None = None,
                      lip_field: LipField | None = None, n_pairs: int = 10_000, seed: int = 0) -> LipOneReport:
    """Numerical evidence that ``llip f`` is the indicator of ``F``.

    ``F`` needs ``contains`` and ``distance`` over grid coordinates; a
    :class:`CantorSet` is read at its ``max_stage``.  Points outside ``F`` but
    within ``band`` (default: the largest radius) are indeterminate.
    """
    radii = _check_radii(f, radii)
    if isinstance(F, CantorSet):
        F = as_interval_set(F)
    lf = lip_field if lip_field is not None else llip_field(f, radii)
    band = float(radii[0]) if band is None else float(band)
    pts = f.points()
    inside = np.asarray(F.contains(pts), dtype=bool)
    far = ~inside & (np.asarray(F.distance(pts)) > band)
    final = lf.llip_final
    in_ok = final >= 1 - tol
    out_ok = final <= tol
    return LipOneReport(
        tol=tol, band=band,
        n_in=int(inside.sum()), n_in_pass=int((inside & in_ok).sum()),
        n_out=int(far.sum()), n_out_pass=int((far & out_ok).sum()),
        n_indeterminate=int((~inside & ~far).sum()),
        global_lip=global_lipschitz(f, n_pairs=n_pairs, seed=seed),
        in_failures=[tuple(map(int, p)) for p in np.argwhere(inside & ~in_ok)],
        out_failures=[tuple(map(int, p)) for p in np.argwhere(far & ~out_ok)],
    )


def write_estimates_csv(path: str | Path, estimates: Sequence[LipEstimate]) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["point", "r", "llip", "biglip", "littlelip"])
        for est in estimates:
            for row in est.rows():
                w.writerow([row[0]] + [repr(x) for x in row[1:]])
    return path
