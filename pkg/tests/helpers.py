"""Shared shorthand constructors for tests."""

from __future__ import annotations

from typing import Optional, Sequence

from redmon import Interval, IntervalVector, Itom


def iv(lo: float, hi: float) -> Interval:
    return Interval(lo, hi)


def vec(*pairs: Sequence[float]) -> IntervalVector:
    return IntervalVector(tuple(Interval(lo, hi) for lo, hi in pairs))


def mk_itom(
    signal: str,
    t_s: float,
    values: Sequence[float] | float,
    t_r: Optional[float] = None,
    delta: float = 1.0,
    u: float = 0.0,
) -> Itom:
    """An itom around point values with uniform half-width `u` and a
    validity window of `delta` seconds before t_s."""
    if isinstance(values, (int, float)):
        values = [float(values)]
    return Itom(
        signal=signal,
        value=IntervalVector(tuple(Interval(x - u, x + u) for x in values)),
        time=Interval(t_s - delta, t_s),
        t_s=t_s,
        t_r=t_s if t_r is None else t_r,
    )
