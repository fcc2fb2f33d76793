"""Closed-interval arithmetic over scalars and fixed-length vectors.

An :class:`Interval` is a closed, finite range ``[lo, hi]`` with
``lo <= hi``; degenerate intervals ``[x, x]`` are legal everywhere. An
:class:`IntervalVector` is a fixed-length tuple of intervals. Binary
vector operations require equal lengths and never broadcast two vectors
silently (scalars and single intervals do broadcast, which is ordinary
scaling).

Everything in this module is pure and immutable, so values can be shared
freely across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Sequence, Union


class IntervalError(ValueError):
    """Raised for invalid interval construction or undefined operations."""


def _check_finite(x: float, what: str) -> float:
    x = float(x)
    if not math.isfinite(x):
        raise IntervalError(f"{what} must be finite, got {x!r}")
    return x


@dataclass(frozen=True)
class Interval:
    """A closed interval [lo, hi] of real numbers."""

    lo: float
    hi: float

    def __post_init__(self) -> None:
        lo = _check_finite(self.lo, "interval lower bound")
        hi = _check_finite(self.hi, "interval upper bound")
        if lo > hi:
            raise IntervalError(f"empty interval: lo={lo} > hi={hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def point(cls, x: float) -> "Interval":
        """Degenerate interval [x, x]."""
        return cls(x, x)

    @classmethod
    def around(cls, center: float, half_width: float) -> "Interval":
        """Interval [center - half_width, center + half_width]."""
        if half_width < 0:
            raise IntervalError(f"half width must be >= 0, got {half_width}")
        return cls(center - half_width, center + half_width)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        return (self.lo + self.hi) / 2.0

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi

    def overlaps(self, other: "Interval") -> bool:
        """True when the two closed intervals share at least one point."""
        return max(self.lo, other.lo) <= min(self.hi, other.hi)

    def __add__(self, other: "Interval") -> "Interval":
        other = as_interval(other)
        return Interval(self.lo + other.lo, self.hi + other.hi)

    def __sub__(self, other: "Interval") -> "Interval":
        other = as_interval(other)
        return Interval(self.lo - other.hi, self.hi - other.lo)

    def __neg__(self) -> "Interval":
        return Interval(-self.hi, -self.lo)

    def __mul__(self, other: "Interval") -> "Interval":
        # All four endpoint products; the extremes bound every pointwise
        # product, including sign changes.
        other = as_interval(other)
        products = (
            self.lo * other.lo,
            self.lo * other.hi,
            self.hi * other.lo,
            self.hi * other.hi,
        )
        return Interval(min(products), max(products))

    def __truediv__(self, other: "Interval") -> "Interval":
        other = as_interval(other)
        if other.contains(0.0):
            raise IntervalError(f"division by interval containing zero: {other}")
        quotients = (
            self.lo / other.lo,
            self.lo / other.hi,
            self.hi / other.lo,
            self.hi / other.hi,
        )
        if not all(math.isfinite(q) for q in quotients):
            raise IntervalError(f"division overflow: divisor {other} too close to zero")
        return Interval(min(quotients), max(quotients))

    def __str__(self) -> str:
        return f"[{self.lo:g}, {self.hi:g}]"


ScalarLike = Union[Interval, float, int]


def as_interval(x: ScalarLike) -> Interval:
    """Coerce a number to a degenerate interval; intervals pass through."""
    if isinstance(x, Interval):
        return x
    if isinstance(x, (int, float)):
        return Interval.point(float(x))
    raise IntervalError(f"cannot interpret {type(x).__name__} as an interval")


def interval_min(a: Interval, b: Interval) -> Interval:
    """Range of min(x, y) for x in a, y in b."""
    return Interval(min(a.lo, b.lo), min(a.hi, b.hi))


def interval_max(a: Interval, b: Interval) -> Interval:
    """Range of max(x, y) for x in a, y in b."""
    return Interval(max(a.lo, b.lo), max(a.hi, b.hi))


def intersect(a: Interval, b: Interval) -> Optional[Interval]:
    """Intersection of two closed intervals, or None when disjoint.

    Touching endpoints ([0,1] and [1,2]) intersect in the degenerate
    interval [1,1]; an empty result is reported as None rather than a
    sentinel interval.
    """
    lo = max(a.lo, b.lo)
    hi = min(a.hi, b.hi)
    if lo > hi:
        return None
    return Interval(lo, hi)


def gap(a: Interval, b: Interval) -> float:
    """Distance between two intervals; 0 exactly when they overlap."""
    return max(0.0, max(a.lo, b.lo) - min(a.hi, b.hi))


def literal_gap(a: Interval, b: Interval) -> float:
    """|max(lo) - min(hi)| variant of the gap.

    Unlike :func:`gap` this is positive for strictly nested or partially
    overlapping intervals too; it is kept selectable for comparison (see
    MonitorConfig.error_formula) but is not the default error metric.
    """
    return abs(max(a.lo, b.lo) - min(a.hi, b.hi))


@dataclass(frozen=True)
class IntervalVector:
    """A fixed-length vector of closed intervals."""

    dims: tuple[Interval, ...]

    def __post_init__(self) -> None:
        dims = tuple(self.dims)
        for d in dims:
            if not isinstance(d, Interval):
                raise IntervalError(
                    f"vector dimensions must be Interval, got {type(d).__name__}"
                )
        object.__setattr__(self, "dims", dims)

    @classmethod
    def from_pairs(cls, pairs: Iterable[Sequence[float]]) -> "IntervalVector":
        return cls(tuple(Interval(p[0], p[1]) for p in pairs))

    @classmethod
    def from_points(
        cls, values: Iterable[float], half_width: float = 0.0
    ) -> "IntervalVector":
        return cls(tuple(Interval.around(float(v), half_width) for v in values))

    def __len__(self) -> int:
        return len(self.dims)

    def __iter__(self) -> Iterator[Interval]:
        return iter(self.dims)

    def __getitem__(self, i: int) -> Interval:
        return self.dims[i]

    def to_pairs(self) -> list[list[float]]:
        return [[d.lo, d.hi] for d in self.dims]

    def contains_point(self, point: Sequence[float]) -> bool:
        if len(point) != len(self.dims):
            return False
        return all(d.contains(float(x)) for d, x in zip(self.dims, point))

    def slice(self, start: int, stop: int) -> "IntervalVector":
        if not (0 <= start <= stop <= len(self.dims)):
            raise IntervalError(
                f"slice [{start}:{stop}] out of bounds for length {len(self.dims)}"
            )
        return IntervalVector(self.dims[start:stop])

    def _zip(self, other: "IntervalVector") -> Iterator[tuple[Interval, Interval]]:
        if len(self.dims) != len(other.dims):
            raise IntervalError(
                f"vector length mismatch: {len(self.dims)} vs {len(other.dims)}"
            )
        return zip(self.dims, other.dims)


VectorLike = Union[IntervalVector, Interval, float, int]


def _elementwise(a: VectorLike, b: VectorLike, op) -> IntervalVector:
    if isinstance(a, IntervalVector) and isinstance(b, IntervalVector):
        return IntervalVector(tuple(op(x, y) for x, y in a._zip(b)))
    if isinstance(a, IntervalVector):
        s = as_interval(b)
        return IntervalVector(tuple(op(x, s) for x in a))
    if isinstance(b, IntervalVector):
        s = as_interval(a)
        return IntervalVector(tuple(op(s, y) for y in b))
    raise IntervalError("elementwise operation needs at least one vector")


def iv_add(a: VectorLike, b: VectorLike):
    """Sum of intervals or interval vectors (scalars broadcast)."""
    if isinstance(a, IntervalVector) or isinstance(b, IntervalVector):
        return _elementwise(a, b, lambda x, y: x + y)
    return as_interval(a) + as_interval(b)


def iv_sub(a: VectorLike, b: VectorLike):
    if isinstance(a, IntervalVector) or isinstance(b, IntervalVector):
        return _elementwise(a, b, lambda x, y: x - y)
    return as_interval(a) - as_interval(b)


def iv_mul(a: VectorLike, b: VectorLike):
    if isinstance(a, IntervalVector) or isinstance(b, IntervalVector):
        return _elementwise(a, b, lambda x, y: x * y)
    return as_interval(a) * as_interval(b)


def iv_div(a: VectorLike, b: VectorLike):
    if isinstance(a, IntervalVector) or isinstance(b, IntervalVector):
        return _elementwise(a, b, lambda x, y: x / y)
    return as_interval(a) / as_interval(b)


def iv_min(a: VectorLike, b: VectorLike):
    """Elementwise min of two vectors (or intervals; scalars broadcast)."""
    if isinstance(a, IntervalVector) or isinstance(b, IntervalVector):
        return _elementwise(a, b, interval_min)
    return interval_min(as_interval(a), as_interval(b))


def iv_max(a: VectorLike, b: VectorLike):
    """Elementwise max of two vectors (or intervals; scalars broadcast)."""
    if isinstance(a, IntervalVector) or isinstance(b, IntervalVector):
        return _elementwise(a, b, interval_max)
    return interval_max(as_interval(a), as_interval(b))


def iv_scale(v: IntervalVector, k: ScalarLike) -> IntervalVector:
    """Scale every dimension of a vector by a scalar or interval factor."""
    k = as_interval(k)
    return IntervalVector(tuple(d * k for d in v))


def iv_min_reduce(v: IntervalVector) -> Interval:
    """Range of min over one value drawn from each dimension."""
    if len(v) == 0:
        raise IntervalError("min reduction over an empty vector")
    return Interval(min(d.lo for d in v), min(d.hi for d in v))


def iv_max_reduce(v: IntervalVector) -> Interval:
    if len(v) == 0:
        raise IntervalError("max reduction over an empty vector")
    return Interval(max(d.lo for d in v), max(d.hi for d in v))


def iv_sum_reduce(v: IntervalVector) -> Interval:
    if len(v) == 0:
        raise IntervalError("sum reduction over an empty vector")
    return Interval(sum(d.lo for d in v), sum(d.hi for d in v))


def vec_gap(a: IntervalVector, b: IntervalVector) -> float:
    """Sum of per-dimension gaps; 0 exactly when every dimension overlaps."""
    if len(a) != len(b):
        raise IntervalError(f"vector length mismatch: {len(a)} vs {len(b)}")
    return sum(gap(x, y) for x, y in zip(a, b))


def vec_literal_gap(a: IntervalVector, b: IntervalVector) -> float:
    """Sum of per-dimension |max(lo) - min(hi)| terms (see literal_gap)."""
    if len(a) != len(b):
        raise IntervalError(f"vector length mismatch: {len(a)} vs {len(b)}")
    return sum(literal_gap(x, y) for x, y in zip(a, b))
