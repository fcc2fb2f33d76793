"""Periodic plausibility monitor over redundant substitutions.

The monitor watches one variable. At setup it searches the knowledge
base for every substitution of that variable and composes each into an
executable pipeline. Each step then

1. snapshots the itom buffer,
2. collects input combinations per pipeline (one buffered itom per leaf
   signal, keeping only combinations whose time intervals share a
   common point),
3. executes the pipelines, producing output itoms,
4. compares outputs of *different* substitutions that overlap in time
   and ranks substitutions by accumulated disagreement.

A substitution is reported failed only when at least two substitutions
were comparable and the largest accumulated error is positive; absence
of data alone never fails a substitution.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Mapping, Optional, Sequence, TextIO, Union

from .dsl import Pipeline, compose_substitution
from .expr import EvalError, Program
from .intervals import Interval, IntervalVector, intersect, vec_gap, vec_literal_gap
from .kb import KnowledgeBase, search_substitutions
from .observation import Itom, ItomBuffer, Snapshot

log = logging.getLogger(__name__)


class MonitorError(Exception):
    pass


class MonitorSetupError(MonitorError):
    pass


@dataclass(frozen=True)
class MonitorConfig:
    """Tunables of a monitor instance.

    n_buf             buffered monitor periods (retention = n_buf * t_m)
    t_m               monitor period in seconds
    filter            verdict output filter: "none", "median" or "mean";
                      failed indices are categorical, so "mean" is a
                      majority vote over the window ("mode" is accepted
                      as an alias)
    filter_window     window length for the output filter
    pair_aggregation  how errors of multiple comparable output pairs of
                      the same substitution pair combine: "sum" or "min"
    error_formula     "gap" (zero on overlap) or "literal" (|max lo - min hi|)
    max_depth         relation depth bound for the substitution search
    """

    n_buf: int = 1
    t_m: float = 1.0
    filter: str = "none"
    filter_window: int = 3
    pair_aggregation: str = "sum"
    error_formula: str = "gap"
    max_depth: int = 10

    def __post_init__(self) -> None:
        if self.n_buf < 1:
            raise MonitorError(f"n_buf must be >= 1, got {self.n_buf}")
        if self.t_m <= 0:
            raise MonitorError(f"t_m must be > 0, got {self.t_m}")
        if self.filter == "mode":
            object.__setattr__(self, "filter", "mean")
        if self.filter not in ("none", "median", "mean"):
            raise MonitorError(f"unknown filter {self.filter!r}")
        if self.filter_window < 1:
            raise MonitorError(f"filter_window must be >= 1, got {self.filter_window}")
        if self.pair_aggregation not in ("sum", "min"):
            raise MonitorError(f"unknown pair_aggregation {self.pair_aggregation!r}")
        if self.error_formula not in ("gap", "literal"):
            raise MonitorError(f"unknown error_formula {self.error_formula!r}")


Combination = dict[str, Itom]  # leaf signal -> chosen itom


@dataclass(frozen=True)
class MonitorVerdict:
    """Result of one monitor step.

    `failed` is the index of the substitution blamed for a disagreement,
    or None. `errors` has one entry per substitution (pipeline index
    order). `comparable` counts the substitutions that took part in at
    least one comparison. `outputs` holds (substitution index, output
    itom) pairs for every executed combination. When a filter is active,
    `failed` is the filtered report and `raw_failed` the step's own
    argmax; without a filter they are equal.
    """

    t: float
    outputs: tuple[tuple[int, Itom], ...]
    errors: tuple[float, ...]
    failed: Optional[int]
    comparable: int
    raw_failed: Optional[int] = None
    insufficient_redundancy: bool = False
    notes: tuple[str, ...] = ()

    def to_json_obj(self) -> dict:
        return {
            "t": self.t,
            "failed": -1 if self.failed is None else self.failed,
            "errors": list(self.errors),
            "comparable": self.comparable,
            "outputs": [
                {"s": idx, "v": itom.value.to_pairs(), "t": [itom.time.lo, itom.time.hi]}
                for idx, itom in self.outputs
            ],
        }


CompareHook = Callable[[int, int, Itom, Itom], None]


def collect_combinations(
    pipelines: Sequence[Pipeline], snapshot: Snapshot
) -> list[list[Combination]]:
    """Per pipeline: every way to pick one buffered itom per leaf signal
    such that all picked time intervals share a common point.

    Order is deterministic: signals in first-occurrence order within the
    substitution, itoms in arrival order, the last signal varying fastest.
    """
    all_combos: list[list[Combination]] = []
    for pipeline in pipelines:
        signals = pipeline.leaf_signals()
        combos: list[Combination] = []
        stack: list[tuple[int, Combination, Optional[Interval]]] = [(0, {}, None)]
        while stack:
            pos, chosen, window = stack.pop()
            if pos == len(signals):
                combos.append(chosen)
                continue
            signal = signals[pos]
            # reversed keeps the exploration order equal to a nested loop
            for itom in reversed(snapshot.get(signal, ())):
                if window is None:
                    narrowed: Optional[Interval] = itom.time
                else:
                    narrowed = intersect(window, itom.time)
                    if narrowed is None:
                        continue
                stack.append((pos + 1, {**chosen, signal: itom}, narrowed))
        all_combos.append(combos)
    return all_combos


def execute_substitutions(
    pipelines: Sequence[Pipeline],
    combinations: Sequence[Sequence[Combination]],
    t_cur: float,
) -> tuple[list[tuple[int, Itom]], list[str]]:
    """Run every combination through its pipeline.

    Returns (outputs, notes). A combination whose evaluation fails is
    skipped and noted; it does not abort the step. Output itoms carry the
    synthetic signal name "s<i>" of their substitution, the upper end of
    the output time interval as t_s, and t_cur as t_r.
    """
    outputs: list[tuple[int, Itom]] = []
    notes: list[str] = []
    for index, (pipeline, combos) in enumerate(zip(pipelines, combinations)):
        for combo in combos:
            try:
                value, time = pipeline.evaluate(combo)
            except EvalError as exc:
                notes.append(f"s{index}: {exc}")
                continue
            outputs.append(
                (
                    index,
                    Itom(
                        signal=f"s{index}",
                        value=value,
                        time=time,
                        t_s=time.hi,
                        t_r=t_cur,
                    ),
                )
            )
    return outputs, notes


def compare_and_rank(
    outputs: Sequence[tuple[int, Itom]],
    num_substitutions: int,
    t_cur: float = 0.0,
    *,
    pair_aggregation: str = "sum",
    error_formula: str = "gap",
    on_compare: Optional[CompareHook] = None,
    notes: Iterable[str] = (),
) -> MonitorVerdict:
    """Pairwise-compare outputs of different substitutions and rank.

    Only outputs whose time intervals overlap are compared; mismatched
    value lengths make a pair incomparable (noted, not an error). The
    per-substitution error is the row sum of the symmetric pair-error
    matrix. failed = argmax of that vector (lowest index on ties) iff
    the maximum is positive and at least two substitutions were
    comparable.
    """
    gap_fn = vec_gap if error_formula == "gap" else vec_literal_gap
    matrix = [[0.0] * num_substitutions for _ in range(num_substitutions)]
    compared: list[list[bool]] = [
        [False] * num_substitutions for _ in range(num_substitutions)
    ]
    all_notes = list(notes)

    grouped: list[list[Itom]] = [[] for _ in range(num_substitutions)]
    for index, itom in outputs:
        grouped[index].append(itom)

    for i in range(num_substitutions):
        for j in range(i + 1, num_substitutions):
            pair_errors: list[float] = []
            for a in grouped[i]:
                for b in grouped[j]:
                    if not a.time.overlaps(b.time):
                        continue
                    if len(a.value) != len(b.value):
                        all_notes.append(
                            f"s{i}/s{j}: value lengths differ "
                            f"({len(a.value)} vs {len(b.value)}), pair skipped"
                        )
                        continue
                    if on_compare is not None:
                        on_compare(i, j, a, b)
                    pair_errors.append(gap_fn(a.value, b.value))
            if pair_errors:
                compared[i][j] = compared[j][i] = True
                e = sum(pair_errors) if pair_aggregation == "sum" else min(pair_errors)
                matrix[i][j] = matrix[j][i] = e

    errors = tuple(sum(row) for row in matrix)
    comparable = sum(1 for i in range(num_substitutions) if any(compared[i]))
    failed: Optional[int] = None
    if comparable >= 2 and max(errors, default=0.0) > 0.0:
        failed = max(range(num_substitutions), key=lambda i: (errors[i], -i))
    return MonitorVerdict(
        t=t_cur,
        outputs=tuple(outputs),
        errors=errors,
        failed=failed,
        comparable=comparable,
        raw_failed=failed,
        insufficient_redundancy=comparable < 2,
        notes=tuple(all_notes),
    )


class Monitor:
    """A monitor instance bound to one knowledge base and variable."""

    def __init__(
        self,
        kb: KnowledgeBase,
        variable: str,
        config: MonitorConfig,
        pipelines: Sequence[Pipeline],
    ):
        self.kb = kb
        self.variable = variable
        self.config = config
        self.pipelines = list(pipelines)
        self.buffer = ItomBuffer(kb.signals, config.n_buf, config.t_m)
        self._failed_history: list[int] = []
        self._last_t: Optional[float] = None

    @classmethod
    def setup(
        cls,
        kb: KnowledgeBase,
        variable: str,
        config: MonitorConfig,
        programs: Mapping[str, Program],
    ) -> "Monitor":
        """Search substitutions for `variable` and compose their pipelines.

        Raises :class:`MonitorSetupError` when the variable has no valid
        substitution (it cannot be monitored) or a needed relation body
        is missing.
        """
        subs = search_substitutions(kb, variable, config.max_depth)
        if not subs:
            raise MonitorSetupError(
                f"variable {variable!r} has no valid substitution"
            )
        try:
            pipelines = [compose_substitution(s, programs) for s in subs]
        except Exception as exc:
            raise MonitorSetupError(str(exc)) from exc
        log.debug("monitor over %r: %d pipelines", variable, len(pipelines))
        return cls(kb, variable, config, pipelines)

    def adapt(self, kb: KnowledgeBase, programs: Mapping[str, Program]) -> None:
        """Re-run the substitution search against an updated KB.

        Buffer contents are kept; slots for newly bound signals are added.
        """
        subs = search_substitutions(kb, self.variable, self.config.max_depth)
        if not subs:
            raise MonitorSetupError(
                f"variable {self.variable!r} has no valid substitution"
            )
        self.pipelines = [compose_substitution(s, programs) for s in subs]
        self.kb = kb
        for signal in kb.signals:
            self.buffer.add_signal(signal)

    def ingest(self, itom: Itom) -> None:
        self.buffer.ingest(itom)

    def _apply_filter(self, raw: Optional[int]) -> Optional[int]:
        cfg = self.config
        self._failed_history.append(-1 if raw is None else raw)
        if cfg.filter == "none":
            return raw
        window = self._failed_history[-cfg.filter_window :]
        if cfg.filter == "median":
            picked = sorted(window)[(len(window) - 1) // 2]
        else:  # "mean" on categorical data: majority vote, lowest index ties
            counts: dict[int, int] = {}
            for x in window:
                counts[x] = counts.get(x, 0) + 1
            picked = min(counts, key=lambda x: (-counts[x], x))
        return None if picked < 0 else picked

    def step(self, t_cur: float, on_compare: Optional[CompareHook] = None) -> MonitorVerdict:
        """Run one monitor period at time `t_cur` (strictly increasing)."""
        if self._last_t is not None and t_cur <= self._last_t:
            raise MonitorError(
                f"step times must increase: {t_cur} after {self._last_t}"
            )
        self._last_t = t_cur
        # Evict first so the snapshot holds exactly the last n_buf periods.
        self.buffer.evict(t_cur)
        snapshot = self.buffer.snapshot()
        combos = collect_combinations(self.pipelines, snapshot)
        outputs, notes = execute_substitutions(self.pipelines, combos, t_cur)
        verdict = compare_and_rank(
            outputs,
            len(self.pipelines),
            t_cur,
            pair_aggregation=self.config.pair_aggregation,
            error_formula=self.config.error_formula,
            on_compare=on_compare,
            notes=notes,
        )
        filtered = self._apply_filter(verdict.raw_failed)
        if filtered != verdict.failed:
            verdict = replace(verdict, failed=filtered)
        return verdict


# -- verdict logs ------------------------------------------------------------


def write_verdicts(
    target: Union[str, TextIO],
    verdicts: Iterable[MonitorVerdict],
    meta: Optional[dict] = None,
) -> None:
    """Write a verdict log: optional meta header line, then one verdict
    object per line."""
    if isinstance(target, str):
        with open(target, "w", encoding="utf-8") as fh:
            write_verdicts(fh, verdicts, meta)
        return
    if meta is not None:
        target.write(json.dumps({"meta": meta}))
        target.write("\n")
    for v in verdicts:
        target.write(json.dumps(v.to_json_obj()))
        target.write("\n")


@dataclass(frozen=True)
class VerdictRecord:
    """One verdict read back from a log (plain data, no itom objects)."""

    t: float
    failed: Optional[int]
    errors: tuple[float, ...]
    comparable: int
    outputs: tuple[dict, ...]


def read_verdicts(source: Union[str, TextIO]) -> tuple[Optional[dict], list[VerdictRecord]]:
    """Read a verdict log; returns (meta or None, verdicts)."""
    if isinstance(source, str):
        with open(source, "r", encoding="utf-8") as fh:
            return read_verdicts(fh)
    meta: Optional[dict] = None
    records: list[VerdictRecord] = []
    for lineno, line in enumerate(source, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MonitorError(f"verdict log line {lineno}: {exc.msg}") from exc
        if "meta" in obj and "t" not in obj:
            meta = obj["meta"]
            continue
        try:
            failed = obj["failed"]
            records.append(
                VerdictRecord(
                    t=float(obj["t"]),
                    failed=None if failed == -1 else int(failed),
                    errors=tuple(float(e) for e in obj["errors"]),
                    comparable=int(obj["comparable"]),
                    outputs=tuple(obj.get("outputs", ())),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise MonitorError(f"verdict log line {lineno}: bad record") from exc
    return meta, records
