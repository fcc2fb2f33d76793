"""Runtime fault detection through implicit redundancy of sensor signals.

A knowledge base relates the variables of a system; bound signals make
some of them observable. Substitutions (acyclic instantiations of the
relations) provide redundant ways to compute a monitored variable, and
a plausibility check over their interval-valued outputs points at the
substitution whose inputs have failed.
"""

from .intervals import Interval, IntervalError, IntervalVector
from .kb import (
    KbError,
    KnowledgeBase,
    Relation,
    RelationNode,
    SignalBindingError,
    SignalLeaf,
    Substitution,
    UnknownVariableError,
    is_valid_substitution,
    search_substitutions,
    substitution_violations,
)
from .expr import EvalError, ExprParseError, parse_program
from .dsl import (
    ComposeError,
    FunctionFact,
    ImplementationFact,
    ItomsFact,
    KbDocument,
    KbParseError,
    Pipeline,
    TimestampAssignmentWarning,
    build_kb,
    compose_substitution,
    format_document,
    parse_document,
    parse_kb,
)
from .observation import (
    Itom,
    ItomBuffer,
    ObservationError,
    SignalSpec,
    TraceError,
    TraceRecord,
    UnknownSignalError,
    itom_from_record,
    make_itom,
    read_trace,
    write_trace,
)
from .monitor import (
    Monitor,
    MonitorConfig,
    MonitorError,
    MonitorSetupError,
    MonitorVerdict,
    VerdictRecord,
    collect_combinations,
    compare_and_rank,
    execute_substitutions,
    read_verdicts,
    write_verdicts,
)
from .harness import (
    FaultSpec,
    ScenarioConfig,
    ScenarioError,
    SignalGen,
    TraceGenParams,
    generate_trace,
    inject_faults,
    load_scenario,
    replay,
    scenario_trace,
    summarize,
)
from .report import ReportError, render_report

__version__ = "0.1.0"

__all__ = [
    "Interval",
    "IntervalError",
    "IntervalVector",
    "KbError",
    "KnowledgeBase",
    "Relation",
    "RelationNode",
    "SignalBindingError",
    "SignalLeaf",
    "Substitution",
    "UnknownVariableError",
    "is_valid_substitution",
    "search_substitutions",
    "substitution_violations",
    "EvalError",
    "ExprParseError",
    "parse_program",
    "ComposeError",
    "FunctionFact",
    "ImplementationFact",
    "ItomsFact",
    "KbDocument",
    "KbParseError",
    "Pipeline",
    "TimestampAssignmentWarning",
    "build_kb",
    "compose_substitution",
    "format_document",
    "parse_document",
    "parse_kb",
    "Itom",
    "ItomBuffer",
    "ObservationError",
    "SignalSpec",
    "TraceError",
    "TraceRecord",
    "UnknownSignalError",
    "itom_from_record",
    "make_itom",
    "read_trace",
    "write_trace",
    "Monitor",
    "MonitorConfig",
    "MonitorError",
    "MonitorSetupError",
    "MonitorVerdict",
    "VerdictRecord",
    "collect_combinations",
    "compare_and_rank",
    "execute_substitutions",
    "read_verdicts",
    "write_verdicts",
    "FaultSpec",
    "ScenarioConfig",
    "ScenarioError",
    "SignalGen",
    "TraceGenParams",
    "generate_trace",
    "inject_faults",
    "load_scenario",
    "replay",
    "scenario_trace",
    "summarize",
    "ReportError",
    "render_report",
    "__version__",
]
