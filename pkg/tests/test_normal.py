import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from modsig.normal import upper_tail, upper_tails

mpmath.mp.dps = 50


def oracle(z):
    return float(mpmath.ncdf(-mpmath.mpf(z)))


def test_centre_is_exact():
    assert upper_tail(0.0) == 0.5


@pytest.mark.parametrize("z, lo, hi", [(2.36, 9.0e-3, 9.3e-3), (3.14, 8.3e-4, 8.6e-4), (-0.46, 0.67, 0.68)])
def test_reference_points(z, lo, hi):
    assert lo <= upper_tail(z) <= hi


def test_relative_accuracy_grid():
    zs = np.concatenate([np.linspace(-8, 8, 801), np.linspace(8, 38, 301), [1.4999999, 1.5, 1.5000001]])
    worst = max(abs(upper_tail(z) / oracle(z) - 1) for z in zs)
    assert worst < 1e-14


@settings(max_examples=300, deadline=None)
@given(st.floats(-37, 37))
def test_relative_accuracy_random(z):
    assert upper_tail(z) == pytest.approx(oracle(z), rel=1e-14)


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 30))
def test_symmetry(z):
    assert upper_tail(z) + upper_tail(-z) == pytest.approx(1.0, abs=2e-16)


def test_monotone():
    zs = np.linspace(-10, 30, 4001)
    p = upper_tails(zs)
    assert np.all(np.diff(p) <= 0)


def test_extremes():
    assert upper_tail(40.0) == 0.0
    assert upper_tail(-40.0) == 1.0
    assert 0 < upper_tail(38.0) < 1e-300
    with pytest.raises(ValueError):
        upper_tail(math.nan)
    with pytest.raises(ValueError):
        upper_tail(math.inf)
