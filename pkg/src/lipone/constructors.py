"""Explicit functions whose local Lipschitz derivative is an indicator.

* :class:`MeasurePrimitive` - ``f(x) = measure([a, x] & F)`` for a closed
  ``F`` on the line (signed, so ``f`` is non-decreasing everywhere).
* :func:`tent_eval` / :class:`TentSum` - ``max(0, r - |x - c|)`` and its sum
  over a family of pairwise disjoint open balls.
* :func:`pack_regular_closed` - greedy disjoint selection of basis balls
  ``B(a, 1/k)`` inside a region, with a grid estimate of what is left uncovered.
* :class:`RadialComposition` - ``f(a) = g(|a|)`` on the plane.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .realsets import CantorSet, IntervalSet


class Bracket(NamedTuple):
    """Point value with a rigorous enclosure ``lower <= true <= upper``."""

    value: np.ndarray | float
    lower: np.ndarray | float
    upper: np.ndarray | float

    @property
    def width(self):
        return self.upper - self.lower


def _norm(diff: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(diff * diff, axis=-1))


def _points(x, dim: int) -> np.ndarray:
    """Coerce evaluation points to shape ``(..., dim)``."""
    x = np.asarray(x, dtype=float)
    if dim == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        x = x[..., None]
    if x.shape[-1] != dim:
        raise ValueError(f"expected points of dimension {dim}, got shape {x.shape}")
    return x


def _scalar(a):
    return float(a) if np.ndim(a) == 0 else a


# ---------------------------------------------------------------------------
# measure primitive
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MeasurePrimitive:
    """``f(x) = measure([a, x] & F)`` for ``x >= a`` and ``-measure([x, a] & F)`` otherwise.

    For a Cantor ``F`` evaluation uses the stage-``stage`` intervals: the
    bracket is rigorous and the value spreads each partially covered stage
    interval's measure uniformly, which keeps the samples monotone and
    1-Lipschitz.
    """

    F: IntervalSet | CantorSet
    base: float = 0.0
    stage: int | None = None

    def bracket(self, x) -> Bracket:
        x = np.asarray(x, dtype=float)
        if isinstance(self.F, IntervalSet):
            v = self.F.cumulative(x) - self.F.cumulative(self.base)
            v = _scalar(v)
            return Bracket(v, v, v)
        est, lo, hi = self.F.cumulative(x, self.stage)
        est_a, lo_a, hi_a = self.F.cumulative(self.base, self.stage)
        # lo - hi_a counts stage intervals inside [a, x]; hi - lo_a those meeting it
        return Bracket(_scalar(est - est_a), _scalar(lo - hi_a), _scalar(hi - lo_a))

    def evaluate(self, x):
        return self.bracket(x).value

    __call__ = evaluate


def measure_primitive_eval(p: MeasurePrimitive, x) -> Bracket:
    return p.bracket(x)


# ---------------------------------------------------------------------------
# tents and tent sums
# ---------------------------------------------------------------------------


def tent_eval(center, radius: float, x):
    """``max(0, radius - |x - center|)``; Euclidean norm in 2D."""
    if not radius > 0:
        raise ValueError("tent radius must be positive")
    c = np.atleast_1d(np.asarray(center, dtype=float))
    pts = _points(x, len(c))
    return _scalar(np.maximum(0.0, radius - _norm(pts - c)))


class BallFamily:
    """Pairwise disjoint open balls ``B(c_i, r_i)``; disjointness is checked on construction."""

    def __init__(self, centers, radii):
        centers = np.asarray(centers, dtype=float)
        radii = np.asarray(radii, dtype=float).ravel()
        if centers.ndim == 1:
            centers = centers[:, None] if len(radii) != 1 or centers.size == 1 else centers[None, :]
        if len(centers) != len(radii):
            raise ValueError("need one radius per centre")
        if np.any(~(radii > 0)):
            raise ValueError("ball radii must be positive")
        self.centers = centers
        self.radii = radii
        self.centers.setflags(write=False)
        self.radii.setflags(write=False)
        self._tree = cKDTree(centers) if len(radii) else None
        clash = self.overlapping_pair()
        if clash is not None:
            i, j = clash
            raise ValueError(f"balls {i} and {j} overlap: |c_i - c_j| < r_i + r_j")

    @property
    def dim(self) -> int:
        return self.centers.shape[1] if len(self) else 0

    def __len__(self) -> int:
        return len(self.radii)

    def __iter__(self):
        return iter(zip(self.centers, self.radii))

    def overlapping_pair(self) -> tuple[int, int] | None:
        if len(self) < 2:
            return None
        pairs = self._tree.query_pairs(2 * float(self.radii.max()), output_type="ndarray")
        if len(pairs) == 0:
            return None
        i, j = pairs[:, 0], pairs[:, 1]
        bad = _norm(self.centers[i] - self.centers[j]) < self.radii[i] + self.radii[j]
        if np.any(bad):
            k = int(np.flatnonzero(bad)[0])
            return int(i[k]), int(j[k])
        return None

    def prefix(self, n: int) -> "BallFamily":
        return BallFamily(self.centers[:n], self.radii[:n])

    def locate(self, x) -> np.ndarray:
        """Index of the open ball containing each point, ``-1`` if none."""
        pts = _points(x, self.dim)
        flat = pts.reshape(-1, self.dim)
        out = np.full(len(flat), -1, dtype=np.intp)
        if len(self) == 0 or len(flat) == 0:
            return out.reshape(pts.shape[:-1])
        hits = self._tree.query_ball_point(flat, float(self.radii.max()), return_sorted=False)
        lens = np.fromiter((len(h) for h in hits), dtype=np.intp, count=len(hits))
        if lens.sum():
            owner = np.repeat(np.arange(len(flat)), lens)
            cand = np.concatenate([np.asarray(h, dtype=np.intp) for h in hits if h])
            inside = _norm(flat[owner] - self.centers[cand]) < self.radii[cand]
            out[owner[inside]] = cand[inside]
        return out.reshape(pts.shape[:-1])

    def contains(self, x) -> np.ndarray:
        """Membership in the closure of the union."""
        return self.distance(x) <= 0.0

    def distance(self, x, chunk: int = 4096) -> np.ndarray:
        """Distance to the closure of the union (``inf`` for an empty family)."""
        pts = _points(x, max(self.dim, 1))
        flat = pts.reshape(-1, pts.shape[-1])
        out = np.full(len(flat), np.inf)
        for s in range(0, len(flat), chunk):
            block = flat[s:s + chunk]
            if len(self):
                d = _norm(block[:, None, :] - self.centers[None, :, :]) - self.radii[None, :]
                out[s:s + chunk] = np.maximum(d.min(axis=1), 0.0)
        return out.reshape(pts.shape[:-1])

    def area(self) -> float:
        if self.dim == 1:
            return float(2 * self.radii.sum())
        return float(math.pi * np.sum(self.radii**2))

    def to_json(self) -> dict:
        return {"balls": [{"c": c.tolist(), "r": float(r)} for c, r in self]}

    @classmethod
    def from_json(cls, obj: dict) -> "BallFamily":
        balls = obj["balls"]
        if not balls:
            return cls(np.empty((0, 2)), np.empty(0))
        return cls(np.array([b["c"] for b in balls], dtype=float), [b["r"] for b in balls])


@dataclass(frozen=True)
class TentSum:
    """``sum_n max(0, r_n - |x - c_n|)`` over a disjoint ball family (at most one term is non-zero)."""

    family: BallFamily

    def evaluate(self, x):
        pts = _points(x, self.family.dim)
        owner = self.family.locate(pts)
        out = np.zeros(owner.shape)
        hit = owner >= 0
        if np.any(hit):
            k = owner[hit]
            out[hit] = np.maximum(0.0, self.family.radii[k] - _norm(pts[hit] - self.family.centers[k]))
        return _scalar(out)

    __call__ = evaluate


def tent_sum_eval(T: TentSum, x):
    return T.evaluate(x)


# ---------------------------------------------------------------------------
# regions and greedy packing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Region:
    """Closed set given by oracles.

    ``depth(p)`` is the distance from ``p`` to the complement of the interior
    (zero outside and on the boundary), so the open ball ``B(c, r)`` lies in
    the interior exactly when ``depth(c) >= r``.  ``member(p)`` is closed
    membership.
    """

    name: str
    bbox: tuple[tuple[float, float], ...]
    depth: Callable[[np.ndarray], np.ndarray]
    member: Callable[[np.ndarray], np.ndarray]

    @property
    def dim(self) -> int:
        return len(self.bbox)

    def contains(self, points) -> np.ndarray:
        return self.member(_points(points, self.dim))

    @classmethod
    def box(cls, lo: Sequence[float], hi: Sequence[float]) -> "Region":
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)

        def depth(p):
            return np.maximum(0.0, np.minimum(p - lo, hi - p).min(axis=-1))

        def member(p):
            return np.all((p >= lo) & (p <= hi), axis=-1)

        return cls(f"box{lo.tolist()}-{hi.tolist()}", tuple(zip(lo.tolist(), hi.tolist())), depth, member)

    @classmethod
    def disk(cls, center: Sequence[float] = (0.0, 0.0), radius: float = 1.0) -> "Region":
        c = np.asarray(center, dtype=float)

        def depth(p):
            return np.maximum(0.0, radius - _norm(p - c))

        def member(p):
            return _norm(p - c) <= radius

        return cls(f"disk{c.tolist()},{radius}", tuple((x - radius, x + radius) for x in c.tolist()), depth, member)

    @classmethod
    def annulus(cls, center: Sequence[float], r_in: float, r_out: float) -> "Region":
        c = np.asarray(center, dtype=float)

        def depth(p):
            d = _norm(p - c)
            return np.maximum(0.0, np.minimum(d - r_in, r_out - d))

        def member(p):
            d = _norm(p - c)
            return (d >= r_in) & (d <= r_out)

        return cls(f"annulus{c.tolist()},{r_in},{r_out}",
                   tuple((x - r_out, x + r_out) for x in c.tolist()), depth, member)

    @classmethod
    def segment(cls, a: Sequence[float], b: Sequence[float]) -> "Region":
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        ab = b - a

        def depth(p):
            return np.zeros(p.shape[:-1])

        def member(p):
            t = np.clip(np.sum((p - a) * ab, axis=-1) / float(ab @ ab), 0.0, 1.0)
            return _norm(p - (a + t[..., None] * ab)) <= 1e-12

        bbox = tuple((min(x, y), max(x, y)) for x, y in zip(a.tolist(), b.tolist()))
        return cls(f"segment{a.tolist()}-{b.tolist()}", bbox, depth, member)

    @classmethod
    def intervals(cls, s: IntervalSet) -> "Region":
        if s.is_empty:
            raise ValueError("empty interval set has no bounding box")

        def depth(p):
            x = p[..., 0]
            j = np.clip(np.searchsorted(s.lo, x, side="right") - 1, 0, None)
            return np.maximum(0.0, np.minimum(x - s.lo[j], s.hi[j] - x))

        def member(p):
            return s.contains(p[..., 0])

        return cls("intervals", ((float(s.lo[0]), float(s.hi[-1])),), depth, member)


@dataclass(frozen=True)
class BallBasis:
    """Countable basis ``{B(a, 1/k)}``: centres on the lattice ``Z^d / (density * k)`` inside ``bbox``.

    Enumerated by decreasing radius, then lexicographically by centre.
    """

    bbox: tuple[tuple[float, float], ...]
    k_max: int = 512
    density: int = 2

    def level(self, k: int) -> tuple[np.ndarray, np.ndarray, float]:
        """Lattice index ranges' origin, the centres (lexicographic, ``ij`` order) and the step."""
        step = 1.0 / (self.density * k)
        axes = []
        for lo, hi in self.bbox:
            j0, j1 = math.ceil(lo / step - 1e-9), math.floor(hi / step + 1e-9)
            axes.append(np.arange(j0, j1 + 1))
        grids = np.meshgrid(*axes, indexing="ij")
        idx = np.stack([g for g in grids], axis=-1)
        return idx, idx * step, step


@dataclass
class PackResult:
    family: BallFamily
    deficit: float
    region_measure: float
    levels_used: int
    diagnostic: str = ""
    history: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"n_balls": len(self.family), "deficit": self.deficit, "region_measure": self.region_measure,
                "levels_used": self.levels_used, "diagnostic": self.diagnostic}


def coverage_deficit(region: Region, family: BallFamily, resolution: int = 512) -> tuple[float, float]:
    """Grid estimate of ``(measure(F minus union of balls), measure(F))`` from pixel centres."""
    axes, cell = [], 1.0
    for lo, hi in region.bbox:
        n = max(1, int(math.ceil((hi - lo) * resolution)))
        h = (hi - lo) / n
        if h == 0:
            return 0.0, 0.0
        axes.append(lo + (np.arange(n) + 0.5) * h)
        cell *= h
    grids = np.meshgrid(*axes, indexing="ij")
    pts = np.stack(grids, axis=-1)
    inside = region.contains(pts)
    covered = np.zeros(inside.shape, dtype=bool)
    los = np.array([a[0] for a in axes])
    hs = np.array([a[1] - a[0] if len(a) > 1 else 1.0 for a in axes])
    for c, r in family:
        lo_i = np.clip(np.floor((c - r - los) / hs).astype(int), 0, None)
        hi_i = np.minimum(np.ceil((c + r - los) / hs).astype(int) + 1, inside.shape)
        sl = tuple(slice(a, b) for a, b in zip(lo_i, hi_i))
        covered[sl] |= _norm(pts[sl] - c) < r
    measure_f = float(inside.sum()) * cell
    return float((inside & ~covered).sum()) * cell, measure_f


def _raster(region: Region, resolution: int):
    """Pixel centres over the region's bounding box, plus the pixel size per axis."""
    axes, hs = [], []
    for lo, hi in region.bbox:
        n = max(1, int(math.ceil((hi - lo) * resolution)))
        h = (hi - lo) / n
        axes.append(lo + (np.arange(n) + 0.5) * h)
        hs.append(h)
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    return pts, np.array([a[0] for a in axes]), np.array(hs)


def pack_regular_closed(region: Region, basis: BallBasis | None = None, budget: int = 100,
                        resolution: int = 512) -> PackResult:
    """Greedy disjoint packing of basis balls inside the interior of ``region``.

    A basis ball is accepted iff it lies in the interior and is disjoint from
    every ball accepted before it; selection stops after ``budget`` balls.

    Acceptance is decided exactly.  A clearance raster (distance to the
    complement and to the accepted balls, kept exact below the current
    radius) only prunes lattice sites that cannot possibly be accepted.
    """
    basis = basis or BallBasis(region.bbox, k_max=2 * resolution)
    # pruning raster: fine enough that its slack stays below the smallest basis radius
    pts, p0, hs = _raster(region, max(resolution, basis.k_max))
    slack = 0.5 * float(np.sqrt(np.sum(hs * hs)))  # every lattice site is this close to a pixel centre
    clear = region.depth(pts)
    safe_hs = np.where(hs > 0, hs, 1.0)
    centers = np.empty((0, region.dim))
    radii = np.empty(0)
    history = []
    level = 0
    for k in range(1, basis.k_max + 1):
        if len(radii) >= budget:
            break
        level = k
        r = 1.0 / k
        hot = clear >= r - slack
        if not hot.any():
            continue
        step = 1.0 / (basis.density * k)
        box = np.array(basis.bbox)
        jlo = np.ceil(box[:, 0] / step - 1e-9).astype(int)
        jhi = np.floor(box[:, 1] / step + 1e-9).astype(int)
        hp = pts[hot]
        lo = np.maximum(np.floor((hp - slack) / step).astype(int), jlo)
        span = int(math.ceil(2 * slack / step)) + 1
        shifts = np.stack(np.meshgrid(*[np.arange(span + 1)] * region.dim, indexing="ij"), -1).reshape(-1, region.dim)
        idx = (lo[:, None, :] + shifts[None, :, :]).reshape(-1, region.dim)
        idx = idx[np.all((idx >= jlo) & (idx <= jhi), axis=1)]
        if len(idx) == 0:
            continue
        idx = np.unique(idx, axis=0)  # lexicographic
        cand = idx * step
        # clearance is 1-Lipschitz, so a site is hopeless if its nearest pixel is too crowded
        near = np.clip(np.rint((cand - p0) / safe_hs).astype(int), 0, np.array(clear.shape) - 1)
        gap = _norm(cand - pts[tuple(near.T)])
        cand = cand[clear[tuple(near.T)] + gap >= r]
        ok = region.depth(cand) >= r
        cand = cand[ok]
        if len(radii) and len(cand):
            keep = np.ones(len(cand), dtype=bool)
            for s in range(0, len(cand), 2048):
                d = _norm(cand[s:s + 2048, None, :] - centers[None, :, :])
                keep[s:s + 2048] = np.all(d >= r + radii[None, :], axis=1)
            cand = cand[keep]
        taken: list[np.ndarray] = []
        for c in cand:
            if taken and np.any(_norm(np.asarray(taken) - c) < 2 * r):
                continue
            taken.append(c)
            # keep the raster exact wherever the new ball can matter later (values below r + slack)
            reach = 2 * r + 2 * slack
            a = np.maximum(np.floor((c - reach - p0) / safe_hs).astype(int), 0)
            b = np.minimum(np.ceil((c + reach - p0) / safe_hs).astype(int) + 1, clear.shape)
            sl = tuple(slice(u, v) for u, v in zip(a, b))
            clear[sl] = np.minimum(clear[sl], _norm(pts[sl] - c) - r)
            if len(radii) + len(taken) >= budget:
                break
        if taken:
            centers = np.vstack([centers, np.asarray(taken)])
            radii = np.concatenate([radii, np.full(len(taken), r)])
            history.append((k, len(radii)))
    family = BallFamily(centers, radii)
    deficit, mF = coverage_deficit(region, family, resolution)
    diagnostic = ""
    if len(family) == 0:
        diagnostic = (f"no basis ball down to radius 1/{basis.k_max} fits inside {region.name}; "
                      "the region appears to have empty interior")
    return PackResult(family, deficit, mF, level, diagnostic, history)


# ---------------------------------------------------------------------------
# radial composition
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RadialComposition:
    """``f(a) = g(|a|)`` on the plane for a one-dimensional profile ``g``."""

    profile: MeasurePrimitive

    def bracket(self, a) -> Bracket:
        pts = _points(a, 2)
        return self.profile.bracket(_norm(pts))

    def evaluate(self, a):
        return self.bracket(a).value

    __call__ = evaluate


def radial_eval(R: RadialComposition, a) -> Bracket:
    return R.bracket(a)
