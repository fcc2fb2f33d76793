"""Observations: itoms, per-signal declarations, buffering and traces.

An itom is one timestamped observation of a signal. Both its value and
its validity in time are intervals: the value covers the declared
measurement uncertainty, the time interval ``[t_s - delta, t_s]`` covers
the span the sample may actually stem from (sensor integration time plus
transport). ``t_r`` is when the monitor received the itom; reception may
lag or jitter arbitrarily and is the axis along which buffered itoms
expire.
"""

from __future__ import annotations

import json
import math
import threading
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence, TextIO, Union

from .intervals import Interval, IntervalVector
from .kb import KnowledgeBase


class ObservationError(ValueError):
    pass


class UnknownSignalError(ObservationError):
    pass


class TraceError(ValueError):
    """Malformed trace file."""


@dataclass(frozen=True)
class Itom:
    """One observation: value and time intervals plus raw timestamps."""

    signal: str
    value: IntervalVector
    time: Interval
    t_s: float
    t_r: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.t_s) and math.isfinite(self.t_r)):
            raise ObservationError("itom timestamps must be finite")
        if not self.time.contains(self.t_s):
            raise ObservationError(
                f"sample time {self.t_s} outside time interval {self.time}"
            )


@dataclass(frozen=True)
class SignalSpec:
    """Static facts about a signal, declared in the monitor configuration.

    `uncertainty` is the half-width of the value interval around a raw
    sample; with `relative=True` it is taken as a fraction of the
    sample's magnitude instead. `delta` is the width of the time
    interval preceding t_s. `period` is the nominal sampling period.
    """

    signal: str
    dims: int = 1
    delta: float = 0.0
    uncertainty: float = 0.0
    relative: bool = False
    period: float = 1.0

    def __post_init__(self) -> None:
        if self.dims < 1:
            raise ObservationError(f"dims must be >= 1, got {self.dims}")
        if self.delta < 0:
            raise ObservationError(f"delta must be >= 0, got {self.delta}")
        if self.uncertainty < 0:
            raise ObservationError(f"uncertainty must be >= 0, got {self.uncertainty}")
        if self.period <= 0:
            raise ObservationError(f"period must be > 0, got {self.period}")


def make_itom(
    spec: SignalSpec, t_s: float, raw: Sequence[float], t_r: float
) -> Itom:
    """Wrap a raw sample into an itom per the signal's declaration."""
    values = [float(x) for x in raw]
    if len(values) != spec.dims:
        raise ObservationError(
            f"signal {spec.signal!r} expects {spec.dims} dims, got {len(values)}"
        )
    for x in values:
        if not math.isfinite(x):
            raise ObservationError(f"non-finite sample on {spec.signal!r}: {x!r}")
    dims = []
    for x in values:
        half = spec.uncertainty * abs(x) if spec.relative else spec.uncertainty
        dims.append(Interval(x - half, x + half))
    return Itom(
        signal=spec.signal,
        value=IntervalVector(tuple(dims)),
        time=Interval(t_s - spec.delta, t_s),
        t_s=float(t_s),
        t_r=float(t_r),
    )


class ItomBuffer:
    """Per-signal store of recently received itoms.

    Retains every itom whose reception time lies within the last
    ``n_buf * t_m`` seconds; older ones are dropped by :meth:`evict`,
    which the monitor calls once per step (an itom exactly at the cutoff
    is kept). Ingestion is serialized with a lock so producers may feed
    the buffer from other threads; the monitor reads via :meth:`snapshot`.
    """

    def __init__(self, signals: Iterable[str], n_buf: int, t_m: float):
        if n_buf < 1:
            raise ObservationError(f"n_buf must be >= 1, got {n_buf}")
        if t_m <= 0:
            raise ObservationError(f"t_m must be > 0, got {t_m}")
        self.n_buf = n_buf
        self.t_m = t_m
        self._lock = threading.Lock()
        self._slots: dict[str, list[Itom]] = {s: [] for s in signals}

    @property
    def horizon(self) -> float:
        return self.n_buf * self.t_m

    @property
    def signals(self) -> tuple[str, ...]:
        return tuple(self._slots)

    def add_signal(self, signal: str) -> None:
        with self._lock:
            self._slots.setdefault(signal, [])

    def ingest(self, itom: Itom) -> None:
        with self._lock:
            if itom.signal not in self._slots:
                raise UnknownSignalError(f"unknown signal {itom.signal!r}")
            self._slots[itom.signal].append(itom)

    def evict(self, t_cur: float) -> None:
        """Drop itoms received before ``t_cur - n_buf * t_m``."""
        cutoff = t_cur - self.horizon
        with self._lock:
            for signal, itoms in self._slots.items():
                self._slots[signal] = [i for i in itoms if i.t_r >= cutoff]

    def snapshot(self) -> dict[str, tuple[Itom, ...]]:
        """Immutable view of the buffer, in arrival order per signal."""
        with self._lock:
            return {s: tuple(itoms) for s, itoms in self._slots.items()}


Snapshot = Mapping[str, tuple[Itom, ...]]


def is_provided(
    snapshot: Snapshot, variable: str, kb: KnowledgeBase, t_cur: float
) -> bool:
    """True when some buffered itom of a signal bound to `variable` is
    valid at `t_cur` (its time interval contains t_cur)."""
    for signal in kb.signals_for(variable):
        for itom in snapshot.get(signal, ()):
            if itom.time.contains(t_cur):
                return True
    return False


# -- traces ------------------------------------------------------------------


@dataclass(frozen=True)
class TraceRecord:
    """One line of a trace file: a raw observation before interval wrapping."""

    signal: str
    t_s: float
    t_r: float
    value: tuple[float, ...]

    def to_json(self) -> str:
        return json.dumps(
            {
                "signal": self.signal,
                "t_s": self.t_s,
                "t_r": self.t_r,
                "value": list(self.value),
            }
        )


def _parse_record(obj: object, where: str) -> TraceRecord:
    if not isinstance(obj, dict):
        raise TraceError(f"{where}: expected an object")
    try:
        signal = obj["signal"]
        t_s = obj["t_s"]
        t_r = obj["t_r"]
        value = obj["value"]
    except KeyError as exc:
        raise TraceError(f"{where}: missing key {exc.args[0]!r}") from exc
    if not isinstance(signal, str):
        raise TraceError(f"{where}: signal must be a string")
    if not isinstance(value, list) or not value:
        raise TraceError(f"{where}: value must be a non-empty array")
    try:
        ts = float(t_s)
        tr = float(t_r)
        vals = tuple(float(x) for x in value)
    except (TypeError, ValueError) as exc:
        raise TraceError(f"{where}: non-numeric field") from exc
    if not all(math.isfinite(x) for x in (ts, tr, *vals)):
        raise TraceError(f"{where}: non-finite number")
    return TraceRecord(signal, ts, tr, vals)


def read_trace(source: Union[str, TextIO]) -> list[TraceRecord]:
    """Read a JSONL trace (one itom per line) from a path or open file."""
    if isinstance(source, str):
        with open(source, "r", encoding="utf-8") as fh:
            return read_trace(fh)
    records: list[TraceRecord] = []
    for lineno, line in enumerate(source, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise TraceError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
        records.append(_parse_record(obj, f"line {lineno}"))
    return records


def write_trace(target: Union[str, TextIO], records: Iterable[TraceRecord]) -> None:
    """Write a JSONL trace to a path or open file."""
    if isinstance(target, str):
        with open(target, "w", encoding="utf-8") as fh:
            write_trace(fh, records)
        return
    for rec in records:
        target.write(rec.to_json())
        target.write("\n")


def itom_from_record(
    rec: TraceRecord, specs: Mapping[str, SignalSpec]
) -> Itom:
    spec = specs.get(rec.signal)
    if spec is None:
        raise UnknownSignalError(f"no signal spec for {rec.signal!r}")
    return make_itom(spec, rec.t_s, rec.value, rec.t_r)
