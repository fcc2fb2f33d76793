"""Scenario harness: trace generation, fault injection and replay.

A scenario bundles a knowledge base, the monitored variable, monitor
settings, per-signal declarations and a trace source (either a JSONL
file or generator parameters plus fault specs). :func:`replay` runs the
monitor over the trace step by step and returns the verdicts together
with detection statistics.

Scenario files are YAML; see :func:`load_scenario` for the schema.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Sequence, Union

import yaml

from .dsl import parse_kb
from .monitor import Monitor, MonitorConfig, MonitorVerdict, write_verdicts
from .observation import SignalSpec, TraceRecord, itom_from_record, read_trace


class ScenarioError(ValueError):
    """Malformed scenario configuration."""


# -- value functions ---------------------------------------------------------


@dataclass(frozen=True)
class Constant:
    value: float = 0.0

    def __call__(self, t: float) -> float:
        return self.value


@dataclass(frozen=True)
class Sinusoid:
    amplitude: float = 1.0
    frequency: float = 1.0
    offset: float = 0.0

    def __call__(self, t: float) -> float:
        return self.offset + self.amplitude * math.sin(2.0 * math.pi * self.frequency * t)


@dataclass(frozen=True)
class Ramp:
    offset: float = 0.0
    slope: float = 1.0

    def __call__(self, t: float) -> float:
        return self.offset + self.slope * t


ValueFn = Union[Constant, Sinusoid, Ramp]

_VALUE_KINDS = {"constant": Constant, "sinusoid": Sinusoid, "ramp": Ramp}


def value_fn_from_dict(obj: Mapping) -> ValueFn:
    kind = obj.get("kind")
    cls = _VALUE_KINDS.get(kind)
    if cls is None:
        raise ScenarioError(f"unknown value function kind {kind!r}")
    params = {k: float(v) for k, v in obj.items() if k != "kind"}
    try:
        return cls(**params)
    except TypeError as exc:
        raise ScenarioError(f"bad parameters for {kind}: {exc}") from exc


# -- trace generation ----------------------------------------------------------


@dataclass(frozen=True)
class SignalGen:
    """Sampling plan of one generated signal.

    Emits samples at t_s = start + phase + k * period with the shared
    value function evaluated at t_s (signals of the same variable given
    the same function therefore agree whenever their sample times agree)
    and t_r = t_s + latency.
    """

    signal: str
    value: ValueFn
    period: float = 1.0
    phase: float = 0.0
    latency: float = 0.0
    dims: int = 1


@dataclass(frozen=True)
class TraceGenParams:
    duration: float
    signals: tuple[SignalGen, ...]
    seed: int = 0
    start: float = 0.0


def generate_trace(params: TraceGenParams) -> list[TraceRecord]:
    """Deterministic trace: samples of every signal, ordered by reception."""
    records: list[TraceRecord] = []
    for gen in params.signals:
        if gen.period <= 0:
            raise ScenarioError(f"period of {gen.signal!r} must be > 0")
        t_s = params.start + gen.phase
        end = params.start + params.duration
        while t_s <= end:
            value = gen.value(t_s)
            records.append(
                TraceRecord(
                    signal=gen.signal,
                    t_s=t_s,
                    t_r=t_s + gen.latency,
                    value=(value,) * gen.dims,
                )
            )
            t_s += gen.period
    records.sort(key=lambda r: (r.t_r, r.signal, r.t_s))
    return records


# -- fault injection -----------------------------------------------------------


@dataclass(frozen=True)
class FaultSpec:
    """One fault on one signal over a closed t_s window.

    kinds:
      stuck_at_zero  value forced to 0 in every dimension
      noise          adds an independent U(low, high) sample per dimension
      time_shift     adds `shift` to the reception time t_r only; a shift
                     larger than the monitor's retention horizon makes the
                     itom a lost message
    """

    kind: str
    target: str
    window: tuple[float, float]
    low: float = 0.0
    high: float = 0.0
    shift: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in ("stuck_at_zero", "noise", "time_shift"):
            raise ScenarioError(f"unknown fault kind {self.kind!r}")
        a, b = self.window
        if not (a <= b):
            raise ScenarioError(f"bad fault window [{a}, {b}]")
        if self.kind == "noise" and not (self.low <= self.high):
            raise ScenarioError(f"bad noise range [{self.low}, {self.high}]")
        object.__setattr__(self, "window", (float(a), float(b)))

    def applies_to(self, rec: TraceRecord) -> bool:
        return rec.signal == self.target and self.window[0] <= rec.t_s <= self.window[1]


def inject_faults(
    records: Sequence[TraceRecord], faults: Sequence[FaultSpec]
) -> list[TraceRecord]:
    """Apply faults in order; untouched records are returned unchanged.

    Noise is drawn per fault from random.Random(fault.seed), in record
    order, one sample per value dimension, so injection is reproducible.
    The result is re-sorted by reception time (time shifts reorder it).
    """
    out = list(records)
    for fault in faults:
        rng = random.Random(fault.seed) if fault.kind == "noise" else None
        for i, rec in enumerate(out):
            if not fault.applies_to(rec):
                continue
            if fault.kind == "stuck_at_zero":
                out[i] = replace(rec, value=(0.0,) * len(rec.value))
            elif fault.kind == "noise":
                assert rng is not None
                noisy = tuple(
                    x + rng.uniform(fault.low, fault.high) for x in rec.value
                )
                out[i] = replace(rec, value=noisy)
            else:  # time_shift
                out[i] = replace(rec, t_r=rec.t_r + fault.shift)
    out.sort(key=lambda r: (r.t_r, r.signal, r.t_s))
    return out


# -- scenario ------------------------------------------------------------------


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything needed to replay one monitoring run."""

    kb_text: str
    variable: str
    monitor: MonitorConfig
    signal_specs: tuple[SignalSpec, ...]
    trace_file: Optional[str] = None
    generate: Optional[TraceGenParams] = None
    faults: tuple[FaultSpec, ...] = ()
    start: Optional[float] = None  # first step time; default start + t_m
    steps: Optional[int] = None  # step count; default covers the trace
    verdicts_out: Optional[str] = None
    summary_out: Optional[str] = None

    def __post_init__(self) -> None:
        if (self.trace_file is None) == (self.generate is None):
            raise ScenarioError(
                "scenario needs exactly one trace source: a file or generator params"
            )


def _require(obj: Mapping, key: str, where: str):
    if key not in obj:
        raise ScenarioError(f"{where}: missing key {key!r}")
    return obj[key]


def load_scenario(path: str) -> ScenarioConfig:
    """Load a scenario YAML file.

    Schema (keys in parentheses are optional)::

        kb: rover.kb                  # path, relative to this file
        variable: dmin
        (monitor):
          (n_buf): 1
          (period): 1.0               # monitor period T_m
          (filter): none              # none | median | mean
          (filter_window): 3
          (pair_aggregation): sum     # sum | min
          (error_formula): gap        # gap | literal
          (max_depth): 10
        signals:
          "/sig/name":
            (dims): 1
            (delta): 0.0              # time interval width before t_s
            (uncertainty): 0.0        # value half-width
            (relative): false         # uncertainty as fraction of |value|
            (period): 1.0
        trace:                        # exactly one of file / generate
          (file): trace.jsonl
          (generate):
            duration: 10.0
            (seed): 0
            (start): 0.0
            signals:
              "/sig/name":
                value: {kind: constant, value: 1.0}
                (period): 1.0
                (phase): 0.0
                (latency): 0.0
                (dims): 1
        (faults):
          - kind: stuck_at_zero | noise | time_shift
            target: "/sig/name"
            window: [3.0, 6.0]        # closed, on t_s
            (low): 0.0  (high): 0.0   # noise
            (shift): 0.0              # time_shift
            (seed): 0                 # noise
        (start): 1.0                  # first monitor step time
        (steps): 20                   # number of steps
        (out):
          (verdicts): verdicts.jsonl  # paths relative to this file
          (summary): summary.json
    """
    import os

    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ScenarioError(f"{path}: invalid YAML ({exc})") from exc
    if not isinstance(obj, dict):
        raise ScenarioError(f"{path}: expected a mapping at top level")
    base = os.path.dirname(os.path.abspath(path))

    def resolve(p: str) -> str:
        return p if os.path.isabs(p) else os.path.join(base, p)

    kb_path = resolve(str(_require(obj, "kb", path)))
    try:
        with open(kb_path, "r", encoding="utf-8") as fh:
            kb_text = fh.read()
    except OSError as exc:
        raise ScenarioError(f"{path}: cannot read kb {kb_path!r}: {exc}") from exc

    mon = obj.get("monitor") or {}
    try:
        config = MonitorConfig(
            n_buf=int(mon.get("n_buf", 1)),
            t_m=float(mon.get("period", 1.0)),
            filter=str(mon.get("filter", "none")),
            filter_window=int(mon.get("filter_window", 3)),
            pair_aggregation=str(mon.get("pair_aggregation", "sum")),
            error_formula=str(mon.get("error_formula", "gap")),
            max_depth=int(mon.get("max_depth", 10)),
        )
    except Exception as exc:
        raise ScenarioError(f"{path}: bad monitor config: {exc}") from exc

    sig_obj = _require(obj, "signals", path)
    specs = []
    for name, s in (sig_obj or {}).items():
        s = s or {}
        specs.append(
            SignalSpec(
                signal=str(name),
                dims=int(s.get("dims", 1)),
                delta=float(s.get("delta", 0.0)),
                uncertainty=float(s.get("uncertainty", 0.0)),
                relative=bool(s.get("relative", False)),
                period=float(s.get("period", 1.0)),
            )
        )

    trace = _require(obj, "trace", path) or {}
    trace_file = trace.get("file")
    generate = trace.get("generate")
    gen_params = None
    if generate is not None:
        gens = []
        for name, g in (_require(generate, "signals", path) or {}).items():
            g = g or {}
            gens.append(
                SignalGen(
                    signal=str(name),
                    value=value_fn_from_dict(_require(g, "value", path)),
                    period=float(g.get("period", 1.0)),
                    phase=float(g.get("phase", 0.0)),
                    latency=float(g.get("latency", 0.0)),
                    dims=int(g.get("dims", 1)),
                )
            )
        gen_params = TraceGenParams(
            duration=float(_require(generate, "duration", path)),
            signals=tuple(gens),
            seed=int(generate.get("seed", 0)),
            start=float(generate.get("start", 0.0)),
        )

    faults = []
    for f in obj.get("faults") or ():
        window = _require(f, "window", path)
        faults.append(
            FaultSpec(
                kind=str(_require(f, "kind", path)),
                target=str(_require(f, "target", path)),
                window=(float(window[0]), float(window[1])),
                low=float(f.get("low", 0.0)),
                high=float(f.get("high", 0.0)),
                shift=float(f.get("shift", 0.0)),
                seed=int(f.get("seed", 0)),
            )
        )

    out = obj.get("out") or {}
    return ScenarioConfig(
        kb_text=kb_text,
        variable=str(_require(obj, "variable", path)),
        monitor=config,
        signal_specs=tuple(specs),
        trace_file=resolve(trace_file) if trace_file else None,
        generate=gen_params,
        faults=tuple(faults),
        start=None if obj.get("start") is None else float(obj["start"]),
        steps=None if obj.get("steps") is None else int(obj["steps"]),
        verdicts_out=resolve(out["verdicts"]) if out.get("verdicts") else None,
        summary_out=resolve(out["summary"]) if out.get("summary") else None,
    )


# -- replay --------------------------------------------------------------------


@dataclass(frozen=True)
class ReplayResult:
    verdicts: tuple[MonitorVerdict, ...]
    summary: dict
    monitor: Monitor = field(compare=False)


def scenario_trace(scenario: ScenarioConfig) -> list[TraceRecord]:
    """The trace a scenario will replay: file or generated, faults applied."""
    if scenario.trace_file is not None:
        records = read_trace(scenario.trace_file)
        records.sort(key=lambda r: (r.t_r, r.signal, r.t_s))
    else:
        assert scenario.generate is not None
        records = generate_trace(scenario.generate)
    return inject_faults(records, scenario.faults)


def replay(scenario: ScenarioConfig) -> ReplayResult:
    """Run the monitor over the scenario's trace.

    Steps happen at start, start + t_m, ... (default start: one period
    after the trace begins); before each step every record received up
    to and including that time is ingested. Output files are written
    when the scenario names them.
    """
    kb, programs = parse_kb(scenario.kb_text)
    monitor = Monitor.setup(kb, scenario.variable, scenario.monitor, programs)
    specs = {s.signal: s for s in scenario.signal_specs}
    records = scenario_trace(scenario)

    t_m = scenario.monitor.t_m
    if scenario.start is not None:
        t0 = scenario.start
    else:
        first = min((r.t_r for r in records), default=0.0)
        t0 = first + t_m
    if scenario.steps is not None:
        n_steps = scenario.steps
    else:
        last = max((r.t_r for r in records), default=t0)
        n_steps = max(1, int(math.ceil((last - t0) / t_m)) + 2)

    verdicts: list[MonitorVerdict] = []
    cursor = 0
    for k in range(n_steps):
        t_cur = t0 + k * t_m
        while cursor < len(records) and records[cursor].t_r <= t_cur:
            monitor.ingest(itom_from_record(records[cursor], specs))
            cursor += 1
        verdicts.append(monitor.step(t_cur))

    summary = summarize(verdicts, scenario, monitor)
    if scenario.verdicts_out:
        seed = scenario.generate.seed if scenario.generate else None
        meta = {
            "variable": scenario.variable,
            "n_buf": scenario.monitor.n_buf,
            "period": scenario.monitor.t_m,
            "seed": seed,
            "substitutions": [p.substitution.format() for p in monitor.pipelines],
        }
        write_verdicts(scenario.verdicts_out, verdicts, meta)
    if scenario.summary_out:
        with open(scenario.summary_out, "w", encoding="utf-8") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return ReplayResult(tuple(verdicts), summary, monitor)


def expected_failed_indices(monitor: Monitor, signal: str) -> tuple[int, ...]:
    """Substitution indices whose pipelines read `signal` at a leaf."""
    return tuple(
        i
        for i, p in enumerate(monitor.pipelines)
        if signal in p.leaf_signals()
    )


def summarize(
    verdicts: Sequence[MonitorVerdict],
    scenario: ScenarioConfig,
    monitor: Monitor,
) -> dict:
    """Detection statistics with a one-step grace zone at window edges.

    A step t is attributed to a fault window [a, b] iff a < t <= b + t_m
    (its ingested itoms can carry faulted sample times). The first and
    last attributed steps of each window are a grace zone, excluded
    from both the detection and the false-alarm populations.
    """
    t_m = scenario.monitor.t_m
    in_any_window: set[float] = set()
    per_fault: list[dict] = []
    for fault in scenario.faults:
        a, b = fault.window
        attributed = [v.t for v in verdicts if a < v.t <= b + t_m]
        grace = set(attributed[:1] + attributed[-1:]) if attributed else set()
        interior = [t for t in attributed if t not in grace]
        in_any_window.update(attributed)
        expected = expected_failed_indices(monitor, fault.target)
        inside = [v for v in verdicts if v.t in interior]
        detected = sum(1 for v in inside if v.failed in expected)
        misclassified = sum(
            1 for v in inside if v.failed is not None and v.failed not in expected
        )
        per_fault.append(
            {
                "kind": fault.kind,
                "target": fault.target,
                "window": [a, b],
                "expected_failed": list(expected),
                "steps": len(inside),
                "detection_rate": detected / len(inside) if inside else None,
                "misclassification_rate": (
                    misclassified / len(inside) if inside else None
                ),
            }
        )
    outside = [v for v in verdicts if v.t not in in_any_window]
    false_alarms = sum(1 for v in outside if v.failed is not None)
    return {
        "steps": len(verdicts),
        "faults": per_fault,
        "outside_steps": len(outside),
        "false_alarm_rate": false_alarms / len(outside) if outside else None,
    }
