import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from redmon.intervals import (
    Interval,
    IntervalError,
    IntervalVector,
    gap,
    intersect,
    interval_max,
    interval_min,
    iv_add,
    iv_div,
    iv_max,
    iv_max_reduce,
    iv_min,
    iv_min_reduce,
    iv_mul,
    iv_scale,
    iv_sub,
    iv_sum_reduce,
    literal_gap,
    vec_gap,
    vec_literal_gap,
)

finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False)


@st.composite
def intervals(draw):
    a = draw(finite)
    b = draw(finite)
    return Interval(min(a, b), max(a, b))


@st.composite
def interval_with_point(draw):
    itv = draw(intervals())
    x = draw(st.floats(min_value=itv.lo, max_value=itv.hi, allow_nan=False))
    return itv, x


class TestConstruction:
    def test_ordering_enforced(self):
        with pytest.raises(IntervalError):
            Interval(2.0, 1.0)

    @pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
    def test_non_finite_rejected(self, bad):
        with pytest.raises(IntervalError):
            Interval(bad, 1.0)

    def test_degenerate_is_legal(self):
        p = Interval.point(5.0)
        assert p.lo == p.hi == 5.0
        assert p.width == 0.0
        assert p.contains(5.0)

    def test_around(self):
        assert Interval.around(1.0, 0.25) == Interval(0.75, 1.25)
        with pytest.raises(IntervalError):
            Interval.around(1.0, -0.1)

    def test_vector_rejects_non_intervals(self):
        with pytest.raises(IntervalError):
            IntervalVector(((0.0, 1.0),))  # type: ignore[arg-type]


class TestArithmeticExamples:
    def test_add(self):
        assert iv_add(Interval(0, 1), Interval(2, 3)) == Interval(2, 4)

    def test_mul_with_constant(self):
        assert iv_mul(Interval(-1, 2), Interval(3, 3)) == Interval(-3, 6)

    def test_sub_self_widens(self):
        # x - y over x, y in [1,2] spans [-1, 1]; intervals carry no
        # identity, so a - a is not 0.
        assert iv_sub(Interval(1, 2), Interval(1, 2)) == Interval(-1, 1)

    def test_div_by_zero_containing_interval(self):
        with pytest.raises(IntervalError):
            iv_div(Interval(1, 2), Interval(-1, 1))

    def test_scalar_broadcast_over_vector(self):
        v = IntervalVector.from_pairs([(0, 1), (2, 3)])
        assert iv_add(v, 1.0) == IntervalVector.from_pairs([(1, 2), (3, 4)])
        assert iv_scale(v, 2.0) == IntervalVector.from_pairs([(0, 2), (4, 6)])

    def test_vector_length_mismatch(self):
        a = IntervalVector.from_pairs([(0, 1)])
        b = IntervalVector.from_pairs([(0, 1), (2, 3)])
        for op in (iv_add, iv_sub, iv_mul, iv_div, iv_min, iv_max):
            with pytest.raises(IntervalError):
                op(a, b)
        with pytest.raises(IntervalError):
            vec_gap(a, b)


class TestReductions:
    def test_min_reduce_first_dominates(self):
        v = IntervalVector.from_pairs([(1, 2), (3, 4)])
        assert iv_min_reduce(v) == Interval(1, 2)

    def test_min_reduce_singleton(self):
        assert iv_min_reduce(IntervalVector.from_pairs([(5, 5)])) == Interval(5, 5)

    def test_min_reduce_mixed(self):
        v = IntervalVector.from_pairs([(0, 9), (4, 5)])
        assert iv_min_reduce(v) == Interval(0, 5)

    def test_reduce_empty_vector_errors(self):
        empty = IntervalVector(())
        for reduce in (iv_min_reduce, iv_max_reduce, iv_sum_reduce):
            with pytest.raises(IntervalError):
                reduce(empty)

    @given(st.lists(interval_with_point(), min_size=1, max_size=6))
    def test_min_reduce_contains_pointwise_min(self, pairs):
        v = IntervalVector(tuple(itv for itv, _ in pairs))
        m = min(x for _, x in pairs)
        assert iv_min_reduce(v).contains(m)

    @given(st.lists(interval_with_point(), min_size=1, max_size=6))
    def test_max_and_sum_reduce_contain_pointwise(self, pairs):
        v = IntervalVector(tuple(itv for itv, _ in pairs))
        assert iv_max_reduce(v).contains(max(x for _, x in pairs))
        total = math.fsum(x for _, x in pairs)
        s = iv_sum_reduce(v)
        assert s.lo - 1e-9 * (1 + abs(total)) <= total <= s.hi + 1e-9 * (1 + abs(total))


class TestIntersection:
    def test_plain_overlap(self):
        assert intersect(Interval(0, 2), Interval(1, 3)) == Interval(1, 2)

    def test_disjoint_is_none(self):
        assert intersect(Interval(0, 1), Interval(2, 3)) is None

    def test_touching_endpoints_overlap(self):
        assert intersect(Interval(0, 1), Interval(1, 2)) == Interval(1, 1)

    @given(intervals(), intervals())
    def test_commutative(self, a, b):
        assert intersect(a, b) == intersect(b, a)

    @given(intervals(), intervals(), intervals())
    def test_associative_where_defined(self, a, b, c):
        ab = intersect(a, b)
        bc = intersect(b, c)
        left = intersect(ab, c) if ab is not None else None
        right = intersect(a, bc) if bc is not None else None
        if left is not None and right is not None:
            assert left == right

    @given(intervals())
    def test_idempotent(self, a):
        assert intersect(a, a) == a


class TestGap:
    def test_overlap_means_zero(self):
        assert gap(Interval(0, 1), Interval(0.5, 2)) == 0.0

    def test_disjoint_distance(self):
        assert gap(Interval(0, 1), Interval(2, 3)) == 1.0

    def test_identical_degenerate(self):
        assert gap(Interval(5, 5), Interval(5, 5)) == 0.0

    @given(intervals(), intervals())
    def test_zero_iff_overlap(self, a, b):
        assert (gap(a, b) == 0.0) == (intersect(a, b) is not None)

    @given(intervals(), intervals())
    def test_symmetric_and_nonnegative(self, a, b):
        assert gap(a, b) == gap(b, a) >= 0.0

    def test_literal_variant_penalizes_overlap(self):
        # Nested intervals: gap says equal, the literal formula reports
        # the overlap width as error.
        assert gap(Interval(0, 10), Interval(4, 5)) == 0.0
        assert literal_gap(Interval(0, 10), Interval(4, 5)) == 1.0
        assert literal_gap(Interval(0, 1), Interval(2, 3)) == 1.0

    def test_vec_gap_sums_dimensions(self):
        a = IntervalVector.from_pairs([(0, 1), (0, 1)])
        b = IntervalVector.from_pairs([(2, 3), (0, 1)])
        assert vec_gap(a, a) == 0.0
        assert vec_gap(a, b) == 1.0
        assert vec_literal_gap(a, b) == 2.0  # 1 (disjoint) + 1 (overlap width)


class TestInclusionProperty:
    @given(interval_with_point(), interval_with_point())
    def test_binary_ops_contain_pointwise_results(self, ap, bp):
        a, x = ap
        b, y = bp
        tol = 1e-9
        for op, f in (
            (iv_add, lambda p, q: p + q),
            (iv_sub, lambda p, q: p - q),
            (iv_mul, lambda p, q: p * q),
        ):
            r = op(a, b)
            v = f(x, y)
            assert r.lo - tol * (1 + abs(v)) <= v <= r.hi + tol * (1 + abs(v))
        if not b.contains(0.0) and min(abs(b.lo), abs(b.hi)) > 1e-9:
            r = iv_div(a, b)
            v = x / y
            assert r.lo - tol * (1 + abs(v)) <= v <= r.hi + tol * (1 + abs(v))

    @given(interval_with_point(), interval_with_point())
    def test_elementwise_min_max_contain_pointwise(self, ap, bp):
        a, x = ap
        b, y = bp
        assert interval_min(a, b).contains(min(x, y))
        assert interval_max(a, b).contains(max(x, y))

    @given(interval_with_point())
    def test_negation(self, ap):
        a, x = ap
        assert (-a).contains(-x)


class TestVectorHelpers:
    def test_contains_point(self):
        v = IntervalVector.from_pairs([(0, 1), (10, 11)])
        assert v.contains_point([0.5, 10.5])
        assert not v.contains_point([0.5, 12.0])
        assert not v.contains_point([0.5])

    def test_slice_bounds(self):
        v = IntervalVector.from_points([0, 1, 2, 3])
        assert v.slice(1, 3) == IntervalVector.from_points([1, 2])
        assert len(v.slice(2, 2)) == 0
        with pytest.raises(IntervalError):
            v.slice(2, 5)

    def test_from_points_half_width(self):
        v = IntervalVector.from_points([1.0, -1.0], half_width=0.5)
        assert v.to_pairs() == [[0.5, 1.5], [-1.5, -0.5]]
