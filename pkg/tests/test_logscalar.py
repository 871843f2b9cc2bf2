import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from doerfler_lab.logscalar import ONE, ZERO, LogScalar, absdiff, log2_sum

finite = st.floats(min_value=1e-300, max_value=1e300)


def test_basic_arithmetic():
    a, b = LogScalar.from_value(3.0), LogScalar.from_value(5.0)
    assert (a + b).value == pytest.approx(8.0, rel=1e-15)
    assert (b - a).value == pytest.approx(2.0, rel=1e-15)
    assert (a * b).value == pytest.approx(15.0, rel=1e-15)
    assert (b / a).value == pytest.approx(5 / 3, rel=1e-15)
    assert a.times_pow2(3).value == pytest.approx(24.0, rel=1e-15)
    assert b.ratio(a) == pytest.approx(5 / 3, rel=1e-15)


def test_zero_behaviour():
    assert ZERO.is_zero and not ZERO
    assert ZERO + ONE == ONE
    assert ONE - ONE == ZERO
    assert (ZERO * 5.0).is_zero
    assert LogScalar.from_value(0.0) == ZERO


def test_negative_difference_rejected():
    with pytest.raises(ValueError):
        LogScalar.from_value(1.0) - LogScalar.from_value(2.0)
    with pytest.raises(ValueError):
        LogScalar.from_value(-1.0)


def test_tiny_negative_roundoff_is_zero():
    a = LogScalar(0.0)
    b = LogScalar(1e-14)
    assert a - b == ZERO


def test_far_below_float_range():
    tiny = LogScalar.pow2(-5000)
    s = tiny + tiny
    assert s.log2 == pytest.approx(-4999.0, abs=1e-12)
    assert tiny.value == 0.0  # only the conversion underflows
    assert LogScalar.sum([tiny] * 1024).log2 == pytest.approx(-4990.0, abs=1e-12)


def test_log2_sum_matches_fsum():
    exps = [-1.5, -3.0, 0.25, -40.0]
    assert log2_sum(exps).value == pytest.approx(math.fsum(2.0 ** e for e in exps), rel=1e-15)
    assert log2_sum([]) == ZERO


def test_json_round_trip():
    for x in (ZERO, ONE, LogScalar(-1234.5678)):
        assert LogScalar.from_json(x.to_json()) == x
    assert ZERO.to_json() == {"zero": True}


@given(finite, finite)
def test_sum_and_absdiff_agree_with_floats(x, y):
    a, b = LogScalar.from_value(x), LogScalar.from_value(y)
    assert (a + b).value == pytest.approx(x + y, rel=1e-13)
    assert absdiff(a, b).value == pytest.approx(abs(x - y), rel=1e-9, abs=1e-12 * max(x, y))


@given(finite, finite)
def test_ordering_matches_floats(x, y):
    assert (LogScalar.from_value(x) < LogScalar.from_value(y)) == (math.log2(x) < math.log2(y))
