"""The .kb text format: parsing, printing, semantic build, and pipelines."""

from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from redmon import (
    ComposeError,
    FunctionFact,
    ImplementationFact,
    ItomsFact,
    KbDocument,
    KbParseError,
    TimestampAssignmentWarning,
    compose_substitution,
    format_document,
    parse_document,
    parse_kb,
    search_substitutions,
)
from redmon.expr import EvalError, eval_program, parse_program
from redmon.kb import SignalLeaf

from helpers import iv, mk_itom, vec
from oracles import pointwise_substitution, sample_point

CHAIN_TEXT = """
function(a, f, [b]).
function(b, g, [c]).
itomsOf(c, ["sig/c"]).
implementation(f, "a.v = min(b.v)").
implementation(g, "b.v = c.v[0:2]").
"""

TWO_LEAF_TEXT = """
function(s, add2, [p, q]).
itomsOf(p, ["sig/p"]).
itomsOf(q, ["sig/q"]).
implementation(add2, "s.v = p.v + q.v").
"""


def only_sub(kb, variable):
    subs = search_substitutions(kb, variable)
    assert len(subs) == 1
    return subs[0]


class TestParseDocument:
    def test_rover_fact_counts(self, rover_text):
        doc = parse_document(rover_text)
        assert len(doc.functions()) == 4
        assert len(doc.itoms()) == 4
        assert len(doc.implementations()) == 2

    def test_comments_and_whitespace_only(self):
        assert parse_document("% nothing here\n   \n") == KbDocument(())
        assert parse_document("") == KbDocument(())

    def test_string_escapes(self):
        doc = parse_document(r'itomsOf(a, ["quote \" and backslash \\"]).')
        assert doc.itoms()[0].signals == ('quote " and backslash \\',)

    def test_body_is_kept_verbatim(self):
        # parse_document stores bodies as text; only build_kb parses them
        doc = parse_document('implementation(r, "not ; a = body").')
        assert doc.implementations()[0].body == "not ; a = body"

    def test_missing_period(self):
        with pytest.raises(KbParseError, match="expected '.'") as err:
            parse_document("function(a, r, [b])")
        assert err.value.line == 1

    def test_unknown_fact_kind(self):
        with pytest.raises(KbParseError, match="unknown fact kind 'foo'"):
            parse_document("foo(a).")

    def test_unterminated_string(self):
        with pytest.raises(KbParseError, match="unterminated string"):
            parse_document('itomsOf(a, ["x')

    def test_bad_escape(self):
        with pytest.raises(KbParseError, match="bad escape"):
            parse_document('itomsOf(a, ["\\x"]).')

    def test_unexpected_character(self):
        with pytest.raises(KbParseError, match="unexpected character ';'"):
            parse_document("function(a; r).")

    def test_error_carries_position(self):
        with pytest.raises(KbParseError) as err:
            parse_document("function(a, r, [b]).\nfoo(x).")
        assert err.value.line == 2
        assert err.value.column == 1


_name = st.from_regex(r"[a-z_][a-z0-9_]{0,5}", fullmatch=True)
_text = st.text(alphabet=list('abc"\\%.[](), \n\t#xyz0123'), max_size=20)
_fact = st.one_of(
    st.builds(FunctionFact, _name, _name, st.lists(_name, min_size=1, max_size=3).map(tuple)),
    st.builds(ItomsFact, _name, st.lists(_text, min_size=1, max_size=3).map(tuple)),
    st.builds(ImplementationFact, _name, _text),
)
_doc = st.builds(KbDocument, st.lists(_fact, max_size=6).map(tuple))


class TestFormatRoundTrip:
    def test_rover_round_trip(self, rover_text):
        doc = parse_document(rover_text)
        assert parse_document(format_document(doc)) == doc

    def test_format_is_idempotent(self, rover_text):
        once = format_document(parse_document(rover_text))
        assert format_document(parse_document(once)) == once

    @settings(max_examples=150)
    @given(_doc)
    def test_any_document_round_trips(self, doc):
        assert parse_document(format_document(doc)) == doc


class TestBuildKb:
    def test_rover_semantics(self, rover):
        kb, programs = rover
        assert len(kb.variables) == 5
        assert len(kb.relations) == 4
        assert sum(len(s) for s in kb.bindings.values()) == 6
        assert sorted(programs) == ["r1", "r2"]

    def test_empty_text_gives_empty_kb(self):
        kb, programs = parse_kb("")
        assert kb.variables == ()
        assert kb.relations == ()
        assert programs == {}

    def test_repeated_itoms_facts_merge_without_duplicates(self):
        kb, _ = parse_kb('itomsOf(a, ["x", "y"]).\nitomsOf(a, ["y", "z"]).')
        assert kb.bindings["a"] == ("x", "y", "z")

    def test_implementation_for_undeclared_relation(self):
        with pytest.raises(KbParseError, match="undeclared relation 'g'"):
            parse_kb('implementation(g, "a.v = 1").')

    def test_duplicate_implementation(self):
        text = (
            "function(a, f, [b]).\n"
            'itomsOf(b, ["s"]).\n'
            'implementation(f, "a.v = b.v").\n'
            'implementation(f, "a.v = min(b.v)").'
        )
        with pytest.raises(KbParseError, match="duplicate implementation"):
            parse_kb(text)

    def test_structural_violation_is_a_parse_error(self):
        with pytest.raises(KbParseError, match="r"):
            parse_kb('function(a, r, [a, b]).\nitomsOf(b, ["s"]).')

    def test_body_syntax_error_names_the_relation(self):
        text = 'function(a, f, [b]).\nitomsOf(b, ["s"]).\nimplementation(f, "a.v = = 1").'
        with pytest.raises(KbParseError, match="in body of 'f'"):
            parse_kb(text)

    def test_body_assigning_an_input_is_rejected(self):
        text = (
            "function(a, f, [b]).\n"
            'itomsOf(b, ["s"]).\n'
            'implementation(f, "b.v = 1\na.v = b.v").'
        )
        with pytest.raises(KbParseError, match="in body of 'f'"):
            parse_kb(text)

    def test_output_timestamp_assignment_warns_with_file_lines(self, rover_text):
        with pytest.warns(TimestampAssignmentWarning) as rec:
            parse_kb(rover_text)
        messages = sorted(str(w.message) for w in rec)
        assert len(messages) == 2
        assert "relation 'r1', line 24" in messages[0]
        assert "relation 'r2', line 33" in messages[1]
        assert "ignored" in messages[0]


class _vt:
    """Bare value-and-time carrier for feeding eval_program directly."""

    def __init__(self, value, time=iv(0.0, 1.0)):
        self.value = value
        self.time = time


class TestBodyEvaluation:
    def test_minimum_over_a_vector(self, rover):
        _, programs = rover
        out = eval_program(
            programs["r1"], "dmin", {"d_2d": _vt(vec((1, 2), (0.5, 1.5), (3, 4)))}
        )
        assert list(out) == [iv(0.5, 1.5)]

    def test_row_slice_of_a_depth_image(self, rover):
        _, programs = rover
        flat = _vt(vec(*[(float(i), float(i)) for i in range(320 * 116)]))
        out = eval_program(programs["r2"], "d_2d", {"d_3d": flat})
        assert len(out) == 320
        assert out[0] == iv(36800.0, 36800.0)
        assert out[-1] == iv(37119.0, 37119.0)

    def test_mean_body_with_len(self):
        program = parse_program("y.v = sum(x.v) / len(x.v)")
        out = eval_program(program, "y", {"x": _vt(vec((1, 2), (3, 4)))})
        assert list(out) == [iv(2.0, 3.0)]

    def test_identity_body(self, triplex):
        _, programs = triplex
        out = eval_program(programs["ra"], "x", {"xa": _vt(vec((0.9, 1.1)))})
        assert list(out) == [iv(0.9, 1.1)]


class TestPipelines:
    def test_direct_signal_pipeline_passes_the_itom_through(self, rover):
        kb, programs = rover
        sub = search_substitutions(kb, "dmin")[0]
        assert isinstance(sub.root, SignalLeaf)
        pipe = compose_substitution(sub, programs)
        assert pipe.variable == "dmin"
        assert pipe.leaf_signals() == ("/emergency_stop/dmin/data",)
        itom = mk_itom("/emergency_stop/dmin/data", 5.0, 1.25, delta=0.1)
        value, time = pipe.evaluate({"/emergency_stop/dmin/data": itom})
        assert list(value) == [iv(1.25, 1.25)]
        assert time == iv(4.9, 5.0)

    def test_chain_evaluates_bottom_up(self):
        kb, programs = parse_kb(CHAIN_TEXT)
        pipe = compose_substitution(only_sub(kb, "a"), programs)
        itom = mk_itom("sig/c", 2.0, [1.5, 1.0, 3.0], delta=2.0)
        value, time = pipe.evaluate({"sig/c": itom})
        assert list(value) == [iv(1.0, 1.0)]  # slice to first two, then min
        assert time == iv(0.0, 2.0)

    def test_output_time_is_the_intersection_of_input_times(self):
        kb, programs = parse_kb(TWO_LEAF_TEXT)
        pipe = compose_substitution(only_sub(kb, "s"), programs)
        value, time = pipe.evaluate({
            "sig/p": mk_itom("sig/p", 2.0, 1.0, delta=2.0),
            "sig/q": mk_itom("sig/q", 3.0, 2.0, delta=2.0),
        })
        assert list(value) == [iv(3.0, 3.0)]
        assert time == iv(1.0, 2.0)

    def test_disjoint_input_times_fail(self):
        kb, programs = parse_kb(TWO_LEAF_TEXT)
        pipe = compose_substitution(only_sub(kb, "s"), programs)
        with pytest.raises(EvalError, match="do not intersect"):
            pipe.evaluate({
                "sig/p": mk_itom("sig/p", 1.0, 1.0, delta=1.0),
                "sig/q": mk_itom("sig/q", 5.0, 2.0, delta=1.0),
            })

    def test_missing_leaf_itom_fails(self):
        kb, programs = parse_kb(TWO_LEAF_TEXT)
        pipe = compose_substitution(only_sub(kb, "s"), programs)
        with pytest.raises(EvalError, match="no itom for leaf signal 'sig/q'"):
            pipe.evaluate({"sig/p": mk_itom("sig/p", 1.0, 1.0)})

    def test_mismatched_vector_lengths_fail(self):
        kb, programs = parse_kb(TWO_LEAF_TEXT)
        pipe = compose_substitution(only_sub(kb, "s"), programs)
        with pytest.raises(EvalError):
            pipe.evaluate({
                "sig/p": mk_itom("sig/p", 1.0, [1.0, 2.0]),
                "sig/q": mk_itom("sig/q", 1.0, [1.0, 2.0, 3.0]),
            })

    def test_missing_implementation_is_a_compose_error(self):
        text = CHAIN_TEXT.replace('implementation(g, "b.v = c.v[0:2]").', "")
        kb, programs = parse_kb(text)
        with pytest.raises(ComposeError, match="g"):
            compose_substitution(only_sub(kb, "a"), programs)

    def test_interval_output_contains_pointwise_results(self):
        kb, programs = parse_kb(CHAIN_TEXT)
        sub = only_sub(kb, "a")
        pipe = compose_substitution(sub, programs)
        leaf = mk_itom("sig/c", 1.0, [1.5, 1.0, 3.0], u=0.25)
        value, _ = pipe.evaluate({"sig/c": leaf})
        rng = random.Random(42)
        for _ in range(50):
            point = pointwise_substitution(
                sub, programs, {"sig/c": sample_point(leaf.value, rng)}
            )
            assert value.contains_point(point)
