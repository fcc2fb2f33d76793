"""Text format for knowledge bases.

A ``.kb`` file is a sequence of period-terminated facts; ``%`` starts a
comment running to end of line. Three fact kinds exist::

    function(output, relId, [input1, input2, ...]).
    itomsOf(variable, ["signal/name", ...]).
    implementation(relId, "
        <relation body, see redmon.expr>
    ").

Variables and relation ids are bare identifiers; signal names are
double-quoted strings (backslash escapes ``\\"`` and ``\\\\`` are
understood). Implementation bodies are quoted strings too and may span
lines; inside a body ``#`` comments apply instead of ``%``.

:func:`parse_document` gives the syntactic view (a :class:`KbDocument`
that pretty-prints back to an equivalent file), :func:`parse_kb` the
semantic one (a validated :class:`~redmon.kb.KnowledgeBase` plus parsed
relation bodies).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Mapping, Optional, Union

from . import expr as expr_mod
from .expr import EvalError, ExprParseError, Program, ValueAtTime, eval_program
from .intervals import Interval, IntervalVector, intersect
from .kb import (
    KnowledgeBase,
    Relation,
    SignalLeaf,
    Substitution,
    SubstitutionNode,
)


class KbParseError(Exception):
    """Syntax or validation error in a .kb document, with line and column."""

    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class ComposeError(Exception):
    """A substitution cannot be turned into an executable pipeline."""


class TimestampAssignmentWarning(UserWarning):
    """A relation body assigns the output's .t field, which is ignored."""


# -- document model ----------------------------------------------------------


@dataclass(frozen=True)
class FunctionFact:
    output: str
    relation: str
    inputs: tuple[str, ...]
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class ItomsFact:
    variable: str
    signals: tuple[str, ...]
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class ImplementationFact:
    relation: str
    body: str
    line: int = field(default=0, compare=False)
    body_line: int = field(default=0, compare=False)


Fact = Union[FunctionFact, ItomsFact, ImplementationFact]


@dataclass(frozen=True)
class KbDocument:
    """The facts of a .kb file, in file order."""

    facts: tuple[Fact, ...]

    def functions(self) -> tuple[FunctionFact, ...]:
        return tuple(f for f in self.facts if isinstance(f, FunctionFact))

    def itoms(self) -> tuple[ItomsFact, ...]:
        return tuple(f for f in self.facts if isinstance(f, ItomsFact))

    def implementations(self) -> tuple[ImplementationFact, ...]:
        return tuple(f for f in self.facts if isinstance(f, ImplementationFact))


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def format_document(doc: KbDocument) -> str:
    """Pretty-print a document; parsing the result yields an equal document."""
    lines: list[str] = []
    for fact in doc.facts:
        if isinstance(fact, FunctionFact):
            ins = ", ".join(fact.inputs)
            lines.append(f"function({fact.output}, {fact.relation}, [{ins}]).")
        elif isinstance(fact, ItomsFact):
            sigs = ", ".join(_quote(s) for s in fact.signals)
            lines.append(f"itomsOf({fact.variable}, [{sigs}]).")
        else:
            lines.append(f"implementation({fact.relation}, {_quote(fact.body)}).")
    return "\n".join(lines) + "\n"


# -- tokenizer / parser ------------------------------------------------------


@dataclass(frozen=True)
class _Tok:
    kind: str  # NAME STRING PUNCT END
    text: str
    line: int
    column: int


def _tokenize_facts(text: str) -> list[_Tok]:
    tokens: list[_Tok] = []
    line, col, i, n = 1, 1, 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "%":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch.isspace():
            col += 1
            i += 1
            continue
        if ch.isalpha() or ch == "_":
            start, start_col = i, col
            while i < n and (text[i].isalnum() or text[i] == "_"):
                i += 1
                col += 1
            tokens.append(_Tok("NAME", text[start:i], line, start_col))
            continue
        if ch == '"':
            start_line, start_col = line, col
            i += 1
            col += 1
            parts: list[str] = []
            while True:
                if i >= n:
                    raise KbParseError("unterminated string", start_line, start_col)
                c = text[i]
                if c == "\\":
                    if i + 1 >= n or text[i + 1] not in ('"', "\\"):
                        raise KbParseError("bad escape in string", line, col)
                    parts.append(text[i + 1])
                    i += 2
                    col += 2
                    continue
                if c == '"':
                    i += 1
                    col += 1
                    break
                parts.append(c)
                if c == "\n":
                    line += 1
                    col = 1
                else:
                    col += 1
                i += 1
            tokens.append(_Tok("STRING", "".join(parts), start_line, start_col))
            continue
        if ch in "()[],.":
            tokens.append(_Tok("PUNCT", ch, line, col))
            i += 1
            col += 1
            continue
        raise KbParseError(f"unexpected character {ch!r}", line, col)
    tokens.append(_Tok("END", "", line, col))
    return tokens


class _FactParser:
    def __init__(self, tokens: list[_Tok]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> _Tok:
        return self.tokens[self.pos]

    def advance(self) -> _Tok:
        tok = self.tokens[self.pos]
        if tok.kind != "END":
            self.pos += 1
        return tok

    def expect(self, kind: str, text: Optional[str] = None) -> _Tok:
        tok = self.peek()
        if tok.kind != kind or (text is not None and tok.text != text):
            want = text if text is not None else kind.lower()
            raise KbParseError(
                f"expected {want!r}, found {tok.text or 'end of file'!r}",
                tok.line,
                tok.column,
            )
        return self.advance()

    def name_list(self) -> tuple[str, ...]:
        self.expect("PUNCT", "[")
        names = [self.expect("NAME").text]
        while self.peek().text == ",":
            self.advance()
            names.append(self.expect("NAME").text)
        self.expect("PUNCT", "]")
        return tuple(names)

    def string_list(self) -> tuple[str, ...]:
        self.expect("PUNCT", "[")
        strings = [self.expect("STRING").text]
        while self.peek().text == ",":
            self.advance()
            strings.append(self.expect("STRING").text)
        self.expect("PUNCT", "]")
        return tuple(strings)

    def fact(self) -> Fact:
        head = self.expect("NAME")
        self.expect("PUNCT", "(")
        if head.text == "function":
            output = self.expect("NAME").text
            self.expect("PUNCT", ",")
            rel = self.expect("NAME").text
            self.expect("PUNCT", ",")
            inputs = self.name_list()
            fact: Fact = FunctionFact(output, rel, inputs, head.line)
        elif head.text == "itomsOf":
            variable = self.expect("NAME").text
            self.expect("PUNCT", ",")
            signals = self.string_list()
            fact = ItomsFact(variable, signals, head.line)
        elif head.text == "implementation":
            rel = self.expect("NAME").text
            self.expect("PUNCT", ",")
            body_tok = self.expect("STRING")
            fact = ImplementationFact(rel, body_tok.text, head.line, body_tok.line)
        else:
            raise KbParseError(
                f"unknown fact kind {head.text!r} "
                "(expected function, itomsOf or implementation)",
                head.line,
                head.column,
            )
        self.expect("PUNCT", ")")
        self.expect("PUNCT", ".")
        return fact

    def document(self) -> KbDocument:
        facts: list[Fact] = []
        while self.peek().kind != "END":
            facts.append(self.fact())
        return KbDocument(tuple(facts))


def parse_document(text: str) -> KbDocument:
    """Parse .kb text into its facts without semantic checks."""
    return _FactParser(_tokenize_facts(text)).document()


# -- semantic build ----------------------------------------------------------


def build_kb(doc: KbDocument) -> tuple[KnowledgeBase, dict[str, Program]]:
    """Turn a document into a validated KnowledgeBase plus relation bodies.

    Raises :class:`KbParseError` for semantic problems: duplicate relation
    ids, implementations without a matching function fact, body syntax or
    shape errors, and any structural violation reported by
    ``KnowledgeBase.validate``. Bodies assigning the output's ``.t`` emit
    a :class:`TimestampAssignmentWarning` and are otherwise accepted.
    """
    variables: dict[str, None] = {}
    relations: list[Relation] = []
    bindings: dict[str, tuple[str, ...]] = {}

    for fact in doc.facts:
        if isinstance(fact, FunctionFact):
            variables.setdefault(fact.output)
            for v in fact.inputs:
                variables.setdefault(v)
            relations.append(Relation(fact.relation, fact.output, fact.inputs))
        elif isinstance(fact, ItomsFact):
            variables.setdefault(fact.variable)
            merged = bindings.get(fact.variable, ())
            for s in fact.signals:
                if s not in merged:
                    merged = merged + (s,)
            bindings[fact.variable] = merged

    kb = KnowledgeBase(tuple(variables), tuple(relations), bindings)
    problems = kb.validate()
    if problems:
        first = problems[0]
        line = next(
            (
                f.line
                for f in doc.facts
                if isinstance(f, FunctionFact) and f.relation == first.subject
            ),
            1,
        )
        raise KbParseError("; ".join(str(p) for p in problems), line)

    rel_by_id = {r.id: r for r in kb.relations}
    programs: dict[str, Program] = {}
    for fact in doc.implementations():
        rel = rel_by_id.get(fact.relation)
        if rel is None:
            raise KbParseError(
                f"implementation for undeclared relation {fact.relation!r}", fact.line
            )
        if fact.relation in programs:
            raise KbParseError(
                f"duplicate implementation for relation {fact.relation!r}", fact.line
            )
        try:
            program = expr_mod.parse_program(fact.body, line_offset=fact.body_line - 1)
        except ExprParseError as exc:
            raise KbParseError(
                f"in body of {fact.relation!r}: {exc}", fact.line
            ) from exc
        issues = expr_mod.check_program(program, rel.output, rel.inputs)
        for issue in issues:
            if issue.kind == "ignored-timestamp":
                warnings.warn(
                    f"relation {rel.id!r}, line {issue.line}: {issue.message}",
                    TimestampAssignmentWarning,
                    stacklevel=2,
                )
        errors = [i for i in issues if i.kind == "error"]
        if errors:
            raise KbParseError(
                f"in body of {rel.id!r}: {errors[0].message}", errors[0].line
            )
        programs[fact.relation] = program
    return kb, programs


def parse_kb(text: str) -> tuple[KnowledgeBase, dict[str, Program]]:
    """Parse and validate .kb text in one step."""
    return build_kb(parse_document(text))


# -- pipelines ---------------------------------------------------------------


@dataclass(frozen=True)
class _NodeResult:
    value: IntervalVector
    time: Interval


@dataclass(frozen=True)
class Pipeline:
    """An executable substitution: leaf itoms in, one output itom-value out.

    The output value is computed by evaluating each relation body over
    its children bottom-up; the output time is the intersection of all
    input time intervals, taken pairwise on the way up.
    """

    substitution: Substitution
    programs: Mapping[str, Program]

    @property
    def variable(self) -> str:
        return self.substitution.variable

    def leaf_signals(self) -> tuple[str, ...]:
        return self.substitution.leaf_signals()

    def evaluate(
        self, itoms: Mapping[str, ValueAtTime]
    ) -> tuple[IntervalVector, Interval]:
        """Compute (value, time) from one itom per leaf signal.

        Raises :class:`~redmon.expr.EvalError` when an itom is missing,
        a body fails, or the input time intervals do not intersect.
        """
        result = self._eval_node(self.substitution.root, itoms)
        return result.value, result.time

    def _eval_node(
        self, node: SubstitutionNode, itoms: Mapping[str, ValueAtTime]
    ) -> _NodeResult:
        if isinstance(node, SignalLeaf):
            itom = itoms.get(node.signal)
            if itom is None:
                raise EvalError(f"no itom for leaf signal {node.signal!r}")
            return _NodeResult(itom.value, itom.time)
        children = {
            child_var: self._eval_node(child, itoms)
            for child_var, child in zip(node.relation.inputs, node.children)
        }
        time: Optional[Interval] = None
        for res in children.values():
            time = res.time if time is None else intersect(time, res.time)
            if time is None:
                raise EvalError(
                    f"input time intervals of {node.relation.id!r} do not intersect"
                )
        value = eval_program(
            self.programs[node.relation.id], node.relation.output, children
        )
        return _NodeResult(value, time)


def compose_substitution(
    sub: Substitution, programs: Mapping[str, Program]
) -> Pipeline:
    """Bind relation bodies to a substitution, checking none is missing."""
    missing = sorted(
        rid for rid in sub.relation_ids() if rid not in programs
    )
    if missing:
        raise ComposeError(
            f"no implementation for relation(s) {', '.join(missing)} "
            f"needed by a substitution of {sub.variable!r}"
        )
    used = {rid: programs[rid] for rid in sub.relation_ids()}
    return Pipeline(sub, used)
