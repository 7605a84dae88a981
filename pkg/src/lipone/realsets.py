"""Closed subsets of the real line with exact measure arithmetic.

Two representations are provided:

* :class:`IntervalSet` - a finite union of disjoint closed intervals, stored as
  two sorted float arrays.  Point components (``lo == hi``) are allowed.
* :class:`CantorSet` - a symmetric fat Cantor set obtained from ``[0, 1]`` by
  removing, at stage ``n``, a centred open gap of length ``alpha_n`` from every
  stage-``(n-1)`` interval.

Planar wrappers (:class:`ProductSet`, :class:`RadialSet`) expose the
membership / distance queries the estimators need in two dimensions.
"""
from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence, Union

import numpy as np

EPS = float(np.finfo(float).eps)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


class IntervalSet:
    """Finite union of pairwise disjoint closed intervals, sorted by left end.

    Instances are immutable.  Build them with :func:`make_interval_set` (which
    sorts and merges) unless the arrays are already normalized.
    """

    __slots__ = ("lo", "hi")

    def __init__(self, lo: np.ndarray, hi: np.ndarray):
        self.lo = _frozen(lo)
        self.hi = _frozen(hi)

    @classmethod
    def empty(cls) -> "IntervalSet":
        return cls(np.empty(0), np.empty(0))

    def __len__(self) -> int:
        return len(self.lo)

    def __iter__(self) -> Iterator[tuple[float, float]]:
        return iter(zip(self.lo.tolist(), self.hi.tolist()))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, IntervalSet):
            return NotImplemented
        return np.array_equal(self.lo, other.lo) and np.array_equal(self.hi, other.hi)

    def __hash__(self) -> int:
        return hash((self.lo.tobytes(), self.hi.tobytes()))

    def __repr__(self) -> str:
        if len(self) > 6:
            head = ", ".join(f"[{a!r}, {b!r}]" for a, b in list(self)[:3])
            return f"IntervalSet({head}, ... {len(self)} intervals)"
        return "IntervalSet(" + ", ".join(f"[{a!r}, {b!r}]" for a, b in self) + ")"

    @property
    def is_empty(self) -> bool:
        return len(self) == 0

    @property
    def lengths(self) -> np.ndarray:
        return self.hi - self.lo

    def measure(self) -> float:
        return math.fsum(self.lengths.tolist()) if len(self) else 0.0

    def pairs(self) -> list[tuple[float, float]]:
        return list(self)

    def components(self, degenerate: bool | None = None) -> "IntervalSet":
        """Sub-union of point components (``degenerate=True``) or of positive-length ones."""
        if degenerate is None:
            return self
        mask = (self.lo == self.hi) if degenerate else (self.lo < self.hi)
        return IntervalSet(self.lo[mask], self.hi[mask])

    def union(self, other: "IntervalSet") -> "IntervalSet":
        return make_interval_set(
            np.column_stack([np.concatenate([self.lo, other.lo]),
                             np.concatenate([self.hi, other.hi])])
        )

    def intersect(self, other: "IntervalSet") -> "IntervalSet":
        out_lo: list[float] = []
        out_hi: list[float] = []
        a_lo, a_hi = self.lo.tolist(), self.hi.tolist()
        b_lo, b_hi = other.lo.tolist(), other.hi.tolist()
        i = j = 0
        while i < len(a_lo) and j < len(b_lo):
            lo = max(a_lo[i], b_lo[j])
            hi = min(a_hi[i], b_hi[j])
            if lo <= hi:
                out_lo.append(lo)
                out_hi.append(hi)
            if a_hi[i] < b_hi[j]:
                i += 1
            else:
                j += 1
        # closed pieces of two normalized sets cannot touch, no merge needed
        return IntervalSet(np.array(out_lo), np.array(out_hi))

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.is_empty:
            return np.zeros(x.shape, dtype=bool)
        j = np.searchsorted(self.lo, x, side="right") - 1
        jc = np.clip(j, 0, None)
        return (j >= 0) & (x <= self.hi[jc])

    def distance(self, x) -> np.ndarray:
        """Euclidean distance from each ``x`` to the set (``inf`` for the empty set)."""
        x = np.asarray(x, dtype=float)
        if self.is_empty:
            return np.full(x.shape, np.inf)
        n = len(self)
        j = np.searchsorted(self.lo, x, side="right") - 1
        left = np.where(j >= 0, x - self.hi[np.clip(j, 0, None)], np.inf)
        right = np.where(j + 1 < n, self.lo[np.clip(j + 1, None, n - 1)] - x, np.inf)
        d = np.minimum(np.maximum(left, 0.0), right)
        return np.where(left <= 0.0, 0.0, d)

    def cumulative(self, t) -> np.ndarray:
        """``measure((-inf, t] & self)`` for every ``t``."""
        t = np.asarray(t, dtype=float)
        if self.is_empty:
            return np.zeros(t.shape)
        lengths = self.lengths
        before = np.concatenate([[0.0], np.cumsum(lengths)])
        j = np.searchsorted(self.lo, t, side="right") - 1
        jc = np.clip(j, 0, None)
        part = np.clip(t - self.lo[jc], 0.0, lengths[jc])
        return np.where(j >= 0, before[jc] + part, 0.0)

    def window_measure(self, u, v) -> np.ndarray:
        """Exact ``measure([u, v] & self)``; zero when ``u >= v``."""
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        if self.is_empty:
            return np.zeros(np.broadcast(u, v).shape)
        # overlaps are formed directly, so a window inside one piece gives exactly v - u
        before = np.concatenate([[0.0], np.cumsum(self.lengths)])
        i0 = np.searchsorted(self.hi, u, side="left")
        i1 = np.searchsorted(self.lo, v, side="right") - 1
        n = len(self)
        a = np.clip(i0, 0, n - 1)
        b = np.clip(i1, 0, n - 1)
        single = np.minimum(self.hi[a], v) - np.maximum(self.lo[a], u)
        split = (self.hi[a] - np.maximum(self.lo[a], u)) + (before[b] - before[np.minimum(a + 1, b)]) \
            + (np.minimum(self.hi[b], v) - self.lo[b])
        out = np.where(i0 == i1, single, split)
        return np.where((v > u) & (i0 <= i1), np.maximum(out, 0.0), 0.0)

    def to_json(self) -> dict:
        return {"kind": "intervals", "data": [[a, b] for a, b in self]}


def make_interval_set(raw: Iterable[Sequence[float]] | np.ndarray) -> IntervalSet:
    """Normalize a list of ``(lo, hi)`` pairs: sort, merge overlapping or touching pieces."""
    arr = np.asarray(list(raw) if not isinstance(raw, np.ndarray) else raw, dtype=float)
    if arr.size == 0:
        return IntervalSet.empty()
    arr = arr.reshape(-1, 2)
    if not np.all(np.isfinite(arr)):
        raise ValueError("interval endpoints must be finite")
    lo, hi = arr[:, 0], arr[:, 1]
    bad = np.flatnonzero(lo > hi)
    if bad.size:
        k = int(bad[0])
        raise ValueError(f"interval {k} has lo > hi: ({lo[k]!r}, {hi[k]!r})")
    order = np.lexsort((hi, lo))
    lo, hi = lo[order], hi[order]
    reach = np.maximum.accumulate(hi)
    starts = np.ones(len(lo), dtype=bool)
    starts[1:] = lo[1:] > reach[:-1]
    first = np.flatnonzero(starts)
    last = np.append(first[1:] - 1, len(lo) - 1)
    return IntervalSet(lo[first], reach[last])


def intersect(a: IntervalSet, b: IntervalSet) -> IntervalSet:
    return a.intersect(b)


def measure(a: IntervalSet) -> float:
    return a.measure()


# ---------------------------------------------------------------------------
# fat Cantor sets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GeometricAlpha:
    """Gap rule ``alpha_n = c * q**(n-1)`` (``n >= 1``), so ``c`` is the first gap."""

    c: float
    q: float

    def __post_init__(self):
        if not (math.isfinite(self.c) and self.c > 0):
            raise ValueError(f"alpha_n must be positive: c={self.c!r}")
        if not (0 < self.q < 1):
            raise ValueError(f"geometric ratio must lie in (0, 1): q={self.q!r}")

    def term(self, n: int) -> float:
        return self.c * self.q ** (n - 1)

    def tail_weighted_sum(self, n: int) -> float:
        """``sum_{j > n} 2**(j-1) * alpha_j`` in closed form."""
        if 2 * self.q >= 1:
            raise ValueError(f"summability violated: 2*q = {2 * self.q!r} >= 1")
        return self.c * (2 * self.q) ** n / (1 - 2 * self.q)

    def to_json(self) -> dict:
        return {"rule": "geometric", "c": self.c, "q": self.q}


@dataclass(frozen=True)
class PrefixAlpha:
    """Explicit ``alpha_1..alpha_k`` followed by an optional geometric tail.

    Without a tail only finite-stage queries are possible; anything that needs
    the infinite sum (the measure of the limit set) is refused.
    """

    values: tuple[float, ...]
    tail: GeometricAlpha | None = None

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        for n, v in enumerate(self.values, 1):
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"alpha_n must be positive: alpha_{n}={v!r}")

    def term(self, n: int) -> float:
        if n <= len(self.values):
            return self.values[n - 1]
        if self.tail is None:
            raise ValueError(f"alpha_{n} undefined: prefix has {len(self.values)} terms and no tail rule")
        return self.tail.term(n)

    def tail_weighted_sum(self, n: int) -> float:
        if self.tail is None:
            raise ValueError("no tail rule: the infinite gap sum has no computable bound")
        k = len(self.values)
        extra = math.fsum(2.0 ** (j - 1) * self.values[j - 1] for j in range(n + 1, k + 1))
        return extra + self.tail.tail_weighted_sum(max(n, k))

    def to_json(self) -> dict:
        return {"rule": "prefix", "values": list(self.values),
                "tail": None if self.tail is None else self.tail.to_json()}


AlphaRule = Union[GeometricAlpha, PrefixAlpha]


class Membership(str, enum.Enum):
    IN = "in"
    OUT = "out"
    UNDECIDED = "undecided"


@dataclass(frozen=True)
class CantorSet:
    """Symmetric fat Cantor set with gap rule ``alpha``; exact queries up to ``max_stage``."""

    alpha: AlphaRule
    max_stage: int = 20
    lengths: tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.max_stage < 0:
            raise ValueError("max_stage must be non-negative")
        lengths = [1.0]
        for n in range(1, self.max_stage + 1):
            a = self.alpha.term(n)
            if not a < lengths[-1]:
                raise ValueError(
                    f"stage {n} infeasible: alpha_{n}={a!r} does not fit in L_{n - 1}={lengths[-1]!r}")
            lengths.append((lengths[-1] - a) / 2)
        object.__setattr__(self, "lengths", tuple(lengths))
        try:
            total = self._weighted_partial(self.max_stage) + self.alpha.tail_weighted_sum(self.max_stage)
        except ValueError as exc:
            if "summability" in str(exc):
                raise
            total = self._weighted_partial(self.max_stage)
        if not total < 1:
            raise ValueError(f"summability violated: sum 2^(n-1) alpha_n = {total!r} >= 1")

    def _weighted_partial(self, n: int) -> float:
        return math.fsum(2.0 ** (j - 1) * self.alpha.term(j) for j in range(1, n + 1))

    def _check_stage(self, n: int) -> None:
        if not 0 <= n <= self.max_stage:
            raise ValueError(f"stage {n} outside 0..{self.max_stage}")

    def stage_length(self, n: int) -> float:
        self._check_stage(n)
        return self.lengths[n]

    def stage_measure(self, n: int) -> float:
        """``1 - sum_{j<=n} 2^(j-1) alpha_j``, the measure of ``C_n``."""
        self._check_stage(n)
        return 1.0 - self._weighted_partial(n)

    def stage(self, n: int) -> IntervalSet:
        self._check_stage(n)
        lo, hi = _stage_bounds(self, n)
        return IntervalSet(lo, hi)

    def measure(self) -> tuple[float, float]:
        """``(value, error_bound)`` for the measure of the limit set."""
        n = self.max_stage
        partial = self._weighted_partial(n)
        tail = self.alpha.tail_weighted_sum(n)
        value = 1.0 - (partial + tail)
        # fsum is correctly rounded; each term carries O(n) ulps from the power
        err = EPS * ((n + 4) * (partial + tail) + 2.0)
        return value, err

    def window_measure(self, u, v, stage: int | None = None):
        """Bracket ``(lower, upper)`` of ``measure(C & [u, v])`` from stage-``stage`` intervals."""
        stage = self.max_stage if stage is None else stage
        self._check_stage(stage)
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        if np.any(u > v):
            raise ValueError("window must satisfy u <= v")
        lo, hi = _stage_bounds(self, stage)
        mu = self.measure()[0] / 2.0**stage
        full = np.searchsorted(hi, v, side="right") - np.searchsorted(lo, u, side="left")
        touched = np.searchsorted(lo, v, side="left") - np.searchsorted(hi, u, side="right")
        lower = np.maximum(full, 0) * mu
        upper = np.maximum(touched, 0) * mu
        if lower.ndim == 0:
            return float(lower), float(upper)
        return lower, upper

    def cumulative(self, t, stage: int | None = None):
        """``measure(C & (-inf, t])`` as ``(estimate, lower, upper)`` arrays.

        Inside a partially covered stage interval the estimate spreads that
        interval's Cantor measure uniformly over its length; elsewhere all
        three coincide.
        """
        stage = self.max_stage if stage is None else stage
        self._check_stage(stage)
        t = np.asarray(t, dtype=float)
        lo, hi = _stage_bounds(self, stage)
        mu = self.measure()[0] / 2.0**stage
        j = np.searchsorted(lo, t, side="right") - 1
        jc = np.clip(j, 0, None)
        partial = (j >= 0) & (t > lo[jc]) & (t < hi[jc])
        done = np.where(j < 0, 0, np.where(t >= hi[jc], j + 1, j)).astype(float)
        lower = done * mu
        upper = np.where(partial, (j + 1) * mu, lower)
        frac = np.where(partial, (t - lo[jc]) / (hi[jc] - lo[jc]), 0.0)
        est = lower + frac * mu
        return est, lower, upper

    def contains(self, x: float, stage: int | None = None) -> Membership:
        stage = self.max_stage if stage is None else stage
        self._check_stage(stage)
        lo, hi = _stage_bounds(self, stage)
        j = int(np.searchsorted(lo, x, side="right")) - 1
        if j < 0 or x > hi[j]:
            return Membership.OUT
        # endpoints of coarser stages persist as endpoints of finer ones
        if x == lo[j] or x == hi[j]:
            return Membership.IN
        return Membership.UNDECIDED

    def to_json(self) -> dict:
        return {"kind": "cantor", "alpha": self.alpha.to_json(), "max_stage": self.max_stage}


@functools.lru_cache(maxsize=64)
def _stage_bounds(cs: CantorSet, n: int) -> tuple[np.ndarray, np.ndarray]:
    if n == 0:
        return _frozen(np.array([0.0])), _frozen(np.array([1.0]))
    plo, phi = _stage_bounds(cs, n - 1)
    length = cs.lengths[n]
    lo = np.empty(2 * len(plo))
    hi = np.empty(2 * len(plo))
    # children reuse the parent's outer endpoints so nesting is exact in floats
    lo[0::2] = plo
    hi[0::2] = plo + length
    lo[1::2] = phi - length
    hi[1::2] = phi
    return _frozen(lo), _frozen(hi)


def fat_cantor(c: float = 0.25, q: float = 0.25, max_stage: int = 20) -> CantorSet:
    """Geometric fat Cantor set; the defaults give ``alpha_n = 4**-n``, measure 1/2."""
    return CantorSet(GeometricAlpha(c, q), max_stage)


def cantor_stage(cs: CantorSet, n: int) -> IntervalSet:
    return cs.stage(n)


def cantor_measure(cs: CantorSet) -> tuple[float, float]:
    return cs.measure()


def cantor_window_measure(cs: CantorSet, u: float, v: float, stage: int) -> tuple[float, float]:
    return cs.window_measure(u, v, stage)


def contains(cs: CantorSet, x: float, stage: int) -> Membership:
    return cs.contains(x, stage)


def stage_endpoints(cs: CantorSet, n: int) -> np.ndarray:
    """Sorted endpoints of the stage-``n`` intervals (all of them lie in the limit set)."""
    lo, hi = _stage_bounds(cs, n)
    return np.sort(np.concatenate([lo, hi]))


def as_interval_set(s: IntervalSet | CantorSet, stage: int | None = None) -> IntervalSet:
    if isinstance(s, IntervalSet):
        return s
    return s.stage(s.max_stage if stage is None else stage)


# ---------------------------------------------------------------------------
# planar wrappers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProductSet:
    """``A x B`` for closed ``A, B`` on the line; Cantor factors are read at ``stage``."""

    first: IntervalSet | CantorSet
    second: IntervalSet | CantorSet
    stage: int | None = None

    def factors(self) -> tuple[IntervalSet, IntervalSet]:
        return as_interval_set(self.first, self.stage), as_interval_set(self.second, self.stage)

    def contains(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        a, b = self.factors()
        return a.contains(p[..., 0]) & b.contains(p[..., 1])

    def distance(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        a, b = self.factors()
        return np.hypot(a.distance(p[..., 0]), b.distance(p[..., 1]))


@dataclass(frozen=True)
class RadialSet:
    """``{a in R^2 : |a| in S}`` for a closed ``S`` contained in ``[0, inf)``."""

    radii: IntervalSet | CantorSet
    stage: int | None = None

    def profile(self) -> IntervalSet:
        s = as_interval_set(self.radii, self.stage)
        if len(s) and s.lo[0] < 0:
            raise ValueError("radial profile set must lie in [0, inf)")
        return s

    def contains(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        return self.profile().contains(np.hypot(p[..., 0], p[..., 1]))

    def distance(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        return self.profile().distance(np.hypot(p[..., 0], p[..., 1]))


# ---------------------------------------------------------------------------
# JSON set descriptions
# ---------------------------------------------------------------------------


def _parse_alpha(obj: dict) -> AlphaRule:
    rule = obj.get("rule")
    if rule == "geometric":
        return GeometricAlpha(float(obj["c"]), float(obj["q"]))
    if rule == "prefix":
        tail = obj.get("tail")
        return PrefixAlpha(tuple(obj["values"]), None if tail is None else _parse_alpha(tail))
    raise ValueError(f"unknown alpha rule: {rule!r}")


def parse_set(obj: dict) -> IntervalSet | CantorSet:
    """Inverse of ``to_json`` for both set kinds."""
    kind = obj.get("kind")
    if kind == "intervals":
        return make_interval_set([tuple(p) for p in obj.get("data", [])])
    if kind == "cantor":
        return CantorSet(_parse_alpha(obj["alpha"]), int(obj.get("max_stage", 20)))
    raise ValueError(f"unknown set kind: {kind!r}")


def set_to_json(s: IntervalSet | CantorSet) -> dict:
    return s.to_json()
