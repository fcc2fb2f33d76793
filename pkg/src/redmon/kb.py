"""Knowledge base of variables, relations and signal bindings.

The knowledge base is a bipartite directed graph: relation nodes read
from their input variables and write to their single output variable.
Cycles between relations are allowed (a variable may be computable from
a value that is itself derived from it); the *instances* extracted from
the graph, called substitutions, are always acyclic trees.

A substitution describes one concrete way to compute a variable: its
leaves are signals (concrete data sources bound to variables), its inner
nodes are relations. Several substitutions for the same variable form
the redundancy that the monitor compares at runtime.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Optional, Union


class KbError(Exception):
    """Base class for knowledge-base errors."""


class UnknownVariableError(KbError):
    pass


class SignalBindingError(KbError):
    pass


@dataclass(frozen=True)
class Relation:
    """A directed relation computing `output` from `inputs`."""

    id: str
    output: str
    inputs: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "inputs", tuple(self.inputs))
        if not self.inputs:
            raise KbError(f"relation {self.id!r} needs at least one input")


@dataclass(frozen=True)
class Violation:
    """One structural problem found by validate()."""

    kind: str
    subject: str
    message: str

    def __str__(self) -> str:
        return f"{self.kind}({self.subject}): {self.message}"


@dataclass(frozen=True)
class KnowledgeBase:
    """Immutable bipartite graph of variables, relations and bindings.

    `variables` and `relations` keep declaration order, which makes
    search results deterministic. `bindings` maps a variable to the
    ordered signals bound to it; every signal is bound to exactly one
    variable. Updates (bind/unbind) return new instances.
    """

    variables: tuple[str, ...] = ()
    relations: tuple[Relation, ...] = ()
    bindings: Mapping[str, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "relations", tuple(self.relations))
        object.__setattr__(
            self,
            "bindings",
            {v: tuple(sigs) for v, sigs in dict(self.bindings).items() if sigs},
        )

    # -- lookups ---------------------------------------------------------

    @property
    def variable_set(self) -> frozenset[str]:
        return frozenset(self.variables)

    @property
    def signals(self) -> tuple[str, ...]:
        out: list[str] = []
        for v in self.variables:
            out.extend(self.bindings.get(v, ()))
        return tuple(out)

    def relations_for(self, variable: str) -> tuple[Relation, ...]:
        """Relations producing `variable`, in declaration order."""
        return tuple(r for r in self.relations if r.output == variable)

    def signals_for(self, variable: str) -> tuple[str, ...]:
        return self.bindings.get(variable, ())

    def variable_of_signal(self, signal: str) -> Optional[str]:
        for v, sigs in self.bindings.items():
            if signal in sigs:
                return v
        return None

    def is_provided(self, variable: str) -> bool:
        """A variable is provided when at least one signal is bound to it."""
        return bool(self.bindings.get(variable))

    # -- updates ---------------------------------------------------------

    def bind_signal(self, variable: str, signal: str) -> "KnowledgeBase":
        """Bind a signal to a variable; idempotent for existing bindings."""
        if variable not in self.variable_set:
            raise UnknownVariableError(f"unknown variable {variable!r}")
        owner = self.variable_of_signal(signal)
        if owner is not None:
            if owner == variable:
                return self
            raise SignalBindingError(
                f"signal {signal!r} is already bound to variable {owner!r}"
            )
        bindings = dict(self.bindings)
        bindings[variable] = bindings.get(variable, ()) + (signal,)
        return KnowledgeBase(self.variables, self.relations, bindings)

    def unbind_signal(self, signal: str) -> "KnowledgeBase":
        owner = self.variable_of_signal(signal)
        if owner is None:
            raise SignalBindingError(f"signal {signal!r} is not bound")
        bindings = dict(self.bindings)
        bindings[owner] = tuple(s for s in bindings[owner] if s != signal)
        return KnowledgeBase(self.variables, self.relations, bindings)

    def validate(self) -> list[Violation]:
        """Collect structural violations; an empty list means the KB is sound."""
        problems: list[Violation] = []
        known = self.variable_set
        seen_rel_ids: set[str] = set()
        for r in self.relations:
            if r.id in seen_rel_ids:
                problems.append(
                    Violation("duplicate-relation", r.id, "relation id declared twice")
                )
            seen_rel_ids.add(r.id)
            if r.output in r.inputs:
                problems.append(
                    Violation(
                        "bidirectional-edge",
                        r.id,
                        f"output {r.output!r} also appears in inputs",
                    )
                )
            if r.output not in known:
                problems.append(
                    Violation("unknown-variable", r.id, f"output {r.output!r} undeclared")
                )
            for v in r.inputs:
                if v not in known:
                    problems.append(
                        Violation("unknown-variable", r.id, f"input {v!r} undeclared")
                    )
        seen_signals: dict[str, str] = {}
        for v, sigs in self.bindings.items():
            if v not in known:
                problems.append(
                    Violation("unknown-variable", v, "binding for undeclared variable")
                )
            for s in sigs:
                if s in seen_signals and seen_signals[s] != v:
                    problems.append(
                        Violation(
                            "signal-rebound",
                            s,
                            f"bound to both {seen_signals[s]!r} and {v!r}",
                        )
                    )
                seen_signals.setdefault(s, v)
        return problems


# -- substitutions -------------------------------------------------------


@dataclass(frozen=True)
class SignalLeaf:
    """A leaf: read `variable` directly from `signal`."""

    variable: str
    signal: str


@dataclass(frozen=True)
class RelationNode:
    """An inner node: compute the relation's output from child nodes."""

    relation: Relation
    children: tuple["SubstitutionNode", ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "children", tuple(self.children))


SubstitutionNode = Union[SignalLeaf, RelationNode]


def node_variable(node: SubstitutionNode) -> str:
    return node.variable if isinstance(node, SignalLeaf) else node.relation.output


@dataclass(frozen=True)
class Substitution:
    """An acyclic instance of the KB computing `variable`.

    The empty substitution (root is a leaf) reads the variable straight
    from one of its own signals.
    """

    variable: str
    root: SubstitutionNode

    @property
    def is_empty(self) -> bool:
        return isinstance(self.root, SignalLeaf)

    def leaves(self) -> tuple[SignalLeaf, ...]:
        out: list[SignalLeaf] = []

        def walk(node: SubstitutionNode) -> None:
            if isinstance(node, SignalLeaf):
                out.append(node)
            else:
                for c in node.children:
                    walk(c)

        walk(self.root)
        return tuple(out)

    def leaf_signals(self) -> tuple[str, ...]:
        """Distinct leaf signals in depth-first order of first occurrence."""
        seen: dict[str, None] = {}
        for leaf in self.leaves():
            seen.setdefault(leaf.signal)
        return tuple(seen)

    def relation_ids(self) -> frozenset[str]:
        ids: set[str] = set()

        def walk(node: SubstitutionNode) -> None:
            if isinstance(node, RelationNode):
                ids.add(node.relation.id)
                for c in node.children:
                    walk(c)

        walk(self.root)
        return frozenset(ids)

    def depth(self) -> int:
        """Longest chain of relations from the root to any leaf."""

        def walk(node: SubstitutionNode) -> int:
            if isinstance(node, SignalLeaf):
                return 0
            return 1 + max(walk(c) for c in node.children)

        return walk(self.root)

    def format(self) -> str:
        """Render in fact style, e.g.
        substitution(dmin, [function(dmin, r1, [d_2d]), "/scan/ranges"])."""

        def walk(node: SubstitutionNode) -> str:
            if isinstance(node, SignalLeaf):
                return f'"{node.signal}"'
            r = node.relation
            head = f"function({r.output}, {r.id}, [{', '.join(r.inputs)}])"
            parts = [head] + [walk(c) for c in node.children]
            return f"[{', '.join(parts)}]"

        return f"substitution({self.variable}, {walk(self.root)})"


def substitution_violations(kb: KnowledgeBase, sub: Substitution) -> list[str]:
    """Why `sub` is not a valid instance of `kb`; empty list when valid.

    Checks the tree against the graph (declared relations with matching
    input lists, leaf signals currently bound to their variables), the
    acyclicity of every root-to-leaf path, and coherence of shared
    variables: a variable occurring in several branches must be resolved
    the same way (same relation or same signal) throughout.
    """
    problems: list[str] = []
    resolution: dict[str, tuple[str, str]] = {}
    rel_by_id = {r.id: r for r in kb.relations}

    if node_variable(sub.root) != sub.variable:
        problems.append(
            f"root computes {node_variable(sub.root)!r}, not {sub.variable!r}"
        )

    def walk(node: SubstitutionNode, path: frozenset[str]) -> None:
        var = node_variable(node)
        if var in path:
            problems.append(f"variable {var!r} repeats on a root-to-leaf path")
            return
        if var not in kb.variable_set:
            problems.append(f"unknown variable {var!r}")
        if isinstance(node, SignalLeaf):
            if node.signal not in kb.signals_for(var):
                problems.append(f"signal {node.signal!r} not bound to {var!r}")
            key = ("signal", node.signal)
        else:
            declared = rel_by_id.get(node.relation.id)
            if declared is None:
                problems.append(f"unknown relation {node.relation.id!r}")
            elif declared != node.relation:
                problems.append(f"relation {node.relation.id!r} differs from KB")
            child_vars = tuple(node_variable(c) for c in node.children)
            if child_vars != node.relation.inputs:
                problems.append(
                    f"children of {node.relation.id!r} are {child_vars}, "
                    f"expected {node.relation.inputs}"
                )
            key = ("relation", node.relation.id)
            for c in node.children:
                walk(c, path | {var})
        previous = resolution.setdefault(var, key)
        if previous != key:
            problems.append(
                f"variable {var!r} resolved inconsistently: {previous} vs {key}"
            )

    walk(sub.root, frozenset())
    return problems


def is_valid_substitution(kb: KnowledgeBase, sub: Substitution) -> bool:
    return not substitution_violations(kb, sub)


def search_substitutions(
    kb: KnowledgeBase, needed: str, max_depth: int = 10
) -> list[Substitution]:
    """Enumerate every valid substitution computing `needed`.

    Depth-first over per-variable resolutions: each variable reached is
    resolved either to one of its bound signals or to one relation
    producing it (whose inputs are then resolved in turn, up to
    `max_depth` relation levels). A variable already on the current
    root-to-leaf path is never reused, which keeps instances acyclic
    even when the KB itself has cycles. A variable shared between
    branches keeps its first resolution, so each variable is computed
    exactly one way within a substitution.

    Results follow declaration order: direct signals of `needed` first,
    then relations in declaration order with child options expanded
    left to right.
    """
    if needed not in kb.variable_set:
        raise UnknownVariableError(f"unknown variable {needed!r}")
    if max_depth < 0:
        raise KbError(f"max_depth must be >= 0, got {max_depth}")

    producers = {v: kb.relations_for(v) for v in kb.variables}
    resolution: dict[str, tuple[str, object]] = {}
    results: list[Substitution] = []

    def subtree_info(var: str) -> tuple[set[str], int]:
        """Variables and relation depth of the resolved subtree at `var`."""
        kind, payload = resolution[var]
        if kind == "signal":
            return {var}, 0
        rel: Relation = payload  # type: ignore[assignment]
        vs = {var}
        depth = 0
        for u in rel.inputs:
            uv, ud = subtree_info(u)
            vs |= uv
            depth = max(depth, ud)
        return vs, depth + 1

    def provide(var: str, path: frozenset[str], depth: int) -> Iterator[None]:
        if var in resolution:
            # Shared variable: reuse its resolution if that neither closes
            # a cycle through the current path nor exceeds the depth bound.
            vs, d = subtree_info(var)
            if vs & path:
                return
            if depth + d > max_depth:
                return
            yield None
            return
        for sig in kb.signals_for(var):
            resolution[var] = ("signal", sig)
            yield None
            del resolution[var]
        if depth < max_depth:
            for rel in producers.get(var, ()):
                if var in rel.inputs or set(rel.inputs) & path:
                    continue
                resolution[var] = ("relation", rel)
                yield from provide_all(rel.inputs, path | {var}, depth + 1)
                del resolution[var]

    def provide_all(
        variables: tuple[str, ...], path: frozenset[str], depth: int
    ) -> Iterator[None]:
        if not variables:
            yield None
            return
        head, rest = variables[0], variables[1:]
        for _ in provide(head, path, depth):
            yield from provide_all(rest, path, depth)

    def render(var: str) -> SubstitutionNode:
        kind, payload = resolution[var]
        if kind == "signal":
            return SignalLeaf(var, payload)  # type: ignore[arg-type]
        rel: Relation = payload  # type: ignore[assignment]
        return RelationNode(rel, tuple(render(u) for u in rel.inputs))

    for _ in provide(needed, frozenset(), 0):
        results.append(Substitution(needed, render(needed)))
    return results
