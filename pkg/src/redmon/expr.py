"""Expression language for relation bodies.

A body is a small, closed program that computes the output variable of a
relation from its input variables. Inputs are read with accessors:
``name.v`` is the value (an interval vector), ``name.t`` the time
interval. Plain names on the left-hand side are single-assignment local
bindings; the body must assign ``<output>.v`` exactly once. Assignments
to ``<output>.t`` are accepted by the parser but carry no meaning (the
monitor derives output time by intersecting input times); callers are
warned about them at build time.

Grammar::

    program := stmt*                      statements split on newlines or ';'
    stmt    := target '=' expr
    target  := NAME | NAME '.' ('v'|'t')
    expr    := term (('+'|'-') term)*
    term    := factor (('*'|'/') factor)*
    factor  := '-' factor | postfix
    postfix := atom ('[' expr (':' expr)? ']')*
    atom    := NUMBER | NAME ('.' ('v'|'t'))?
             | ('min'|'max'|'sum'|'len') '(' expr (',' expr)? ')'
             | '(' expr ')'

``#`` starts a comment running to end of line. Numbers are decimal with
an optional fraction and exponent.

Evaluation is interval-lifted: numeric literals and arithmetic between
them stay exact scalars (so slice indices like ``h*w`` are crisp), while
any arithmetic touching an input value happens on intervals. With a
single argument ``min``/``max``/``sum`` reduce a vector to an interval;
with two arguments ``min``/``max`` are elementwise.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Protocol, Union

from .intervals import (
    Interval,
    IntervalError,
    IntervalVector,
    as_interval,
    iv_add,
    iv_div,
    iv_max,
    iv_max_reduce,
    iv_min,
    iv_min_reduce,
    iv_mul,
    iv_sub,
    iv_sum_reduce,
)


class ExprParseError(Exception):
    """Syntax error in a relation body, with 1-based line and column."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class EvalError(Exception):
    """Runtime error while evaluating a relation body."""


# -- AST -------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Ref:
    name: str
    accessor: Optional[str]  # "v", "t" or None for a local binding


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class Call:
    fn: str
    args: tuple["Node", ...]


@dataclass(frozen=True)
class Index:
    base: "Node"
    index: "Node"


@dataclass(frozen=True)
class Slice:
    base: "Node"
    start: "Node"
    stop: "Node"


Node = Union[Num, Ref, BinOp, Neg, Call, Index, Slice]


@dataclass(frozen=True)
class Assign:
    target: str
    accessor: Optional[str]  # None = local binding, "v"/"t" = output field
    value: Node
    line: int


@dataclass(frozen=True)
class Program:
    statements: tuple[Assign, ...]
    source: str


_FUNCTIONS = ("min", "max", "sum", "len")


# -- tokenizer -------------------------------------------------------------


@dataclass(frozen=True)
class _Token:
    kind: str  # NAME NUMBER OP NEWLINE END
    text: str
    line: int
    column: int


def _tokenize(source: str, line_offset: int = 0) -> list[_Token]:
    tokens: list[_Token] = []
    line = 1
    col = 1
    i = 0
    n = len(source)
    while i < n:
        ch = source[i]
        if ch == "#":
            while i < n and source[i] != "\n":
                i += 1
            continue
        if ch == "\n" or ch == ";":
            tokens.append(_Token("NEWLINE", ch, line + line_offset, col))
            if ch == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1
            continue
        if ch.isspace():
            col += 1
            i += 1
            continue
        if ch.isalpha() or ch == "_":
            start = i
            start_col = col
            while i < n and (source[i].isalnum() or source[i] == "_"):
                i += 1
                col += 1
            tokens.append(_Token("NAME", source[start:i], line + line_offset, start_col))
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and source[i + 1].isdigit()):
            start = i
            start_col = col
            while i < n and (source[i].isdigit() or source[i] == "."):
                i += 1
                col += 1
            if i < n and source[i] in "eE":
                j = i + 1
                if j < n and source[j] in "+-":
                    j += 1
                if j < n and source[j].isdigit():
                    while j < n and source[j].isdigit():
                        j += 1
                    col += j - i
                    i = j
            text = source[start:i]
            try:
                float(text)
            except ValueError:
                raise ExprParseError(
                    f"bad number literal {text!r}", line + line_offset, start_col
                )
            tokens.append(_Token("NUMBER", text, line + line_offset, start_col))
            continue
        if ch in "+-*/=()[]:.,":
            tokens.append(_Token("OP", ch, line + line_offset, col))
            i += 1
            col += 1
            continue
        raise ExprParseError(f"unexpected character {ch!r}", line + line_offset, col)
    tokens.append(_Token("END", "", line + line_offset, col))
    return tokens


# -- parser ----------------------------------------------------------------


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        if tok.kind != "END":
            self.pos += 1
        return tok

    def match(self, kind: str, text: Optional[str] = None) -> Optional[_Token]:
        tok = self.peek()
        if tok.kind == kind and (text is None or tok.text == text):
            return self.advance()
        return None

    def expect(self, kind: str, text: Optional[str] = None) -> _Token:
        tok = self.peek()
        if tok.kind != kind or (text is not None and tok.text != text):
            want = text if text is not None else kind
            raise ExprParseError(
                f"expected {want!r}, found {tok.text or 'end of body'!r}",
                tok.line,
                tok.column,
            )
        return self.advance()

    # program := (NEWLINE | stmt NEWLINE)* stmt?
    def program(self, source: str) -> Program:
        statements: list[Assign] = []
        while True:
            while self.match("NEWLINE"):
                pass
            if self.peek().kind == "END":
                break
            statements.append(self.statement())
            if self.peek().kind == "END":
                break
            self.expect("NEWLINE")
        return Program(tuple(statements), source)

    def statement(self) -> Assign:
        name_tok = self.expect("NAME")
        accessor = None
        if self.match("OP", "."):
            acc_tok = self.expect("NAME")
            if acc_tok.text not in ("v", "t"):
                raise ExprParseError(
                    f"unknown accessor .{acc_tok.text}", acc_tok.line, acc_tok.column
                )
            accessor = acc_tok.text
        self.expect("OP", "=")
        value = self.expression()
        return Assign(name_tok.text, accessor, value, name_tok.line)

    def expression(self) -> Node:
        node = self.term()
        while True:
            tok = self.peek()
            if tok.kind == "OP" and tok.text in "+-":
                self.advance()
                node = BinOp(tok.text, node, self.term())
            else:
                return node

    def term(self) -> Node:
        node = self.factor()
        while True:
            tok = self.peek()
            if tok.kind == "OP" and tok.text in "*/":
                self.advance()
                node = BinOp(tok.text, node, self.factor())
            else:
                return node

    def factor(self) -> Node:
        if self.match("OP", "-"):
            return Neg(self.factor())
        return self.postfix()

    def postfix(self) -> Node:
        node = self.atom()
        while self.match("OP", "["):
            first = self.expression()
            if self.match("OP", ":"):
                second = self.expression()
                self.expect("OP", "]")
                node = Slice(node, first, second)
            else:
                self.expect("OP", "]")
                node = Index(node, first)
        return node

    def atom(self) -> Node:
        tok = self.peek()
        if tok.kind == "NUMBER":
            self.advance()
            return Num(float(tok.text))
        if tok.kind == "NAME":
            self.advance()
            if tok.text in _FUNCTIONS and self.peek().text == "(":
                self.expect("OP", "(")
                args = [self.expression()]
                if self.match("OP", ","):
                    args.append(self.expression())
                self.expect("OP", ")")
                return Call(tok.text, tuple(args))
            accessor = None
            if self.match("OP", "."):
                acc_tok = self.expect("NAME")
                if acc_tok.text not in ("v", "t"):
                    raise ExprParseError(
                        f"unknown accessor .{acc_tok.text}",
                        acc_tok.line,
                        acc_tok.column,
                    )
                accessor = acc_tok.text
            return Ref(tok.text, accessor)
        if tok.kind == "OP" and tok.text == "(":
            self.advance()
            node = self.expression()
            self.expect("OP", ")")
            return node
        raise ExprParseError(
            f"expected an expression, found {tok.text or 'end of body'!r}",
            tok.line,
            tok.column,
        )


def parse_program(source: str, line_offset: int = 0) -> Program:
    """Parse a relation body. `line_offset` shifts reported line numbers
    so errors inside embedded bodies point at the enclosing file."""
    return _Parser(_tokenize(source, line_offset)).program(source)


# -- static checks ---------------------------------------------------------


@dataclass(frozen=True)
class BodyIssue:
    kind: str  # "error" or "ignored-timestamp"
    message: str
    line: int


def check_program(program: Program, output: str, inputs: tuple[str, ...]) -> list[BodyIssue]:
    """Static validation of a body against its relation signature.

    Errors: missing or repeated `<output>.v` assignment, assignment to an
    input, rebinding a local, reference to an undefined name, bare use of
    an input without an accessor. Assignments to `<output>.t` are not
    errors but are reported so callers can warn that they are ignored.
    """
    issues: list[BodyIssue] = []
    locals_seen: set[str] = set()
    out_assigned = False

    def node_refs(node: Node):
        if isinstance(node, Ref):
            yield node
        elif isinstance(node, BinOp):
            yield from node_refs(node.left)
            yield from node_refs(node.right)
        elif isinstance(node, Neg):
            yield from node_refs(node.operand)
        elif isinstance(node, Call):
            for a in node.args:
                yield from node_refs(a)
        elif isinstance(node, Index):
            yield from node_refs(node.base)
            yield from node_refs(node.index)
        elif isinstance(node, Slice):
            yield from node_refs(node.base)
            yield from node_refs(node.start)
            yield from node_refs(node.stop)

    for stmt in program.statements:
        for ref in node_refs(stmt.value):
            if ref.accessor is None:
                if ref.name in inputs or ref.name == output:
                    issues.append(
                        BodyIssue(
                            "error",
                            f"variable {ref.name!r} must be read with .v or .t",
                            stmt.line,
                        )
                    )
                elif ref.name not in locals_seen:
                    issues.append(
                        BodyIssue("error", f"undefined name {ref.name!r}", stmt.line)
                    )
            elif ref.name not in inputs:
                issues.append(
                    BodyIssue(
                        "error",
                        f"{ref.name}.{ref.accessor} does not name an input",
                        stmt.line,
                    )
                )
        if stmt.accessor is None:
            if stmt.target in inputs or stmt.target == output:
                issues.append(
                    BodyIssue(
                        "error",
                        f"cannot rebind relation variable {stmt.target!r}",
                        stmt.line,
                    )
                )
            elif stmt.target in locals_seen:
                issues.append(
                    BodyIssue(
                        "error",
                        f"local {stmt.target!r} assigned twice",
                        stmt.line,
                    )
                )
            locals_seen.add(stmt.target)
        elif stmt.target == output and stmt.accessor == "v":
            if out_assigned:
                issues.append(
                    BodyIssue("error", f"{output}.v assigned twice", stmt.line)
                )
            out_assigned = True
        elif stmt.target == output and stmt.accessor == "t":
            issues.append(
                BodyIssue(
                    "ignored-timestamp",
                    f"assignment to {output}.t is ignored "
                    "(output time is the intersection of input times)",
                    stmt.line,
                )
            )
        else:
            issues.append(
                BodyIssue(
                    "error",
                    f"cannot assign to {stmt.target}.{stmt.accessor}",
                    stmt.line,
                )
            )
    if not out_assigned:
        issues.append(BodyIssue("error", f"body never assigns {output}.v", 1))
    return issues


# -- evaluation --------------------------------------------------------------


class ValueAtTime(Protocol):
    """Anything carrying a value vector and a time interval (e.g. an Itom)."""

    @property
    def value(self) -> IntervalVector: ...

    @property
    def time(self) -> Interval: ...


Result = Union[float, Interval, IntervalVector]


def _binary(op: str, a: Result, b: Result) -> Result:
    if isinstance(a, float) and isinstance(b, float):
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if b == 0.0:
            raise EvalError("division by zero")
        return a / b
    try:
        if isinstance(a, IntervalVector) or isinstance(b, IntervalVector):
            fn = {"+": iv_add, "-": iv_sub, "*": iv_mul, "/": iv_div}[op]
            return fn(a, b)
        x, y = as_interval(a), as_interval(b)
        if op == "+":
            return x + y
        if op == "-":
            return x - y
        if op == "*":
            return x * y
        return x / y
    except IntervalError as exc:
        raise EvalError(str(exc)) from exc


def _as_index(x: Result, what: str) -> int:
    if not isinstance(x, float) or not x.is_integer():
        raise EvalError(f"{what} must be an integer scalar, got {x!r}")
    i = int(x)
    if i < 0:
        raise EvalError(f"{what} must be >= 0, got {i}")
    return i


def _call(fn: str, args: tuple[Result, ...]) -> Result:
    if fn == "len":
        if len(args) != 1 or not isinstance(args[0], IntervalVector):
            raise EvalError("len() takes one vector argument")
        return float(len(args[0]))
    if len(args) == 1:
        (x,) = args
        if isinstance(x, IntervalVector):
            try:
                reduce = {
                    "min": iv_min_reduce,
                    "max": iv_max_reduce,
                    "sum": iv_sum_reduce,
                }[fn]
                return reduce(x)
            except IntervalError as exc:
                raise EvalError(str(exc)) from exc
        return x  # reducing a scalar or interval is the identity
    if fn == "sum":
        raise EvalError("sum() takes exactly one argument")
    a, b = args
    if isinstance(a, float) and isinstance(b, float):
        return min(a, b) if fn == "min" else max(a, b)
    try:
        return iv_min(a, b) if fn == "min" else iv_max(a, b)
    except IntervalError as exc:
        raise EvalError(str(exc)) from exc


def _eval_node(node: Node, inputs: Mapping[str, ValueAtTime], env: dict[str, Result]) -> Result:
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Ref):
        if node.accessor is None:
            if node.name not in env:
                raise EvalError(f"undefined name {node.name!r}")
            return env[node.name]
        if node.name not in inputs:
            raise EvalError(f"no input named {node.name!r}")
        itom = inputs[node.name]
        return itom.value if node.accessor == "v" else itom.time
    if isinstance(node, BinOp):
        return _binary(
            node.op,
            _eval_node(node.left, inputs, env),
            _eval_node(node.right, inputs, env),
        )
    if isinstance(node, Neg):
        x = _eval_node(node.operand, inputs, env)
        return _binary("-", 0.0, x)
    if isinstance(node, Call):
        args = tuple(_eval_node(a, inputs, env) for a in node.args)
        return _call(node.fn, args)
    if isinstance(node, Index):
        base = _eval_node(node.base, inputs, env)
        if not isinstance(base, IntervalVector):
            raise EvalError("indexing needs a vector")
        i = _as_index(_eval_node(node.index, inputs, env), "index")
        if i >= len(base):
            raise EvalError(f"index {i} out of bounds for length {len(base)}")
        return base[i]
    if isinstance(node, Slice):
        base = _eval_node(node.base, inputs, env)
        if not isinstance(base, IntervalVector):
            raise EvalError("slicing needs a vector")
        start = _as_index(_eval_node(node.start, inputs, env), "slice start")
        stop = _as_index(_eval_node(node.stop, inputs, env), "slice stop")
        try:
            return base.slice(start, stop)
        except IntervalError as exc:
            raise EvalError(str(exc)) from exc
    raise EvalError(f"cannot evaluate {node!r}")


def _as_vector(x: Result) -> IntervalVector:
    if isinstance(x, IntervalVector):
        return x
    if isinstance(x, Interval):
        return IntervalVector((x,))
    return IntervalVector((Interval.point(x),))


def eval_program(
    program: Program,
    output: str,
    inputs: Mapping[str, ValueAtTime],
) -> IntervalVector:
    """Run a body over interval-valued inputs and return the output vector.

    Missing inputs, arithmetic on mismatched vector lengths, division by
    an interval containing zero, out-of-bounds indexing and reductions
    over empty slices all raise :class:`EvalError`.
    """
    env: dict[str, Result] = {}
    result: Optional[IntervalVector] = None
    for stmt in program.statements:
        if stmt.accessor == "t":
            continue  # parsed but meaningless, see module docstring
        value = _eval_node(stmt.value, inputs, env)
        if stmt.accessor is None:
            env[stmt.target] = value
        elif stmt.target == output:
            result = _as_vector(value)
        else:
            raise EvalError(f"cannot assign to {stmt.target}.{stmt.accessor}")
    if result is None:
        raise EvalError(f"body never assigned {output}.v")
    return result
