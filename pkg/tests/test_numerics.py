import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coho_euler.errors import InputError
from coho_euler.numerics import (
    Derivative4Interval,
    Derivative4Periodic,
    cumulative_integral,
    simpson_weights_closed,
    simpson_weights_periodic,
)

cubic_coeffs = st.lists(
    st.floats(min_value=-3.0, max_value=3.0, allow_nan=False), min_size=4, max_size=4
)


@pytest.mark.parametrize("n", [5, 6, 7, 8, 33, 64, 127, 130])
def test_closed_simpson_weights_exact_for_cubics(n):
    dr = 1.0 / (n - 1)
    w = simpson_weights_closed(n, dr)
    x = np.linspace(0.0, 1.0, n)
    for k in range(4):
        assert abs(np.sum(w * x**k) - 1.0 / (k + 1)) < 1e-13


def test_periodic_simpson_integrates_constants_and_kills_modes():
    n, L = 64, 2.0
    w = simpson_weights_periodic(n, L / n)
    x = L * np.arange(n) / n
    assert abs(np.sum(w) - L) < 1e-13
    for k in (1, 2, 5):
        assert abs(np.sum(w * np.sin(2 * np.pi * k * x / L))) < 1e-13
        assert abs(np.sum(w * np.cos(2 * np.pi * k * x / L))) < 1e-13


@settings(max_examples=40, deadline=None)
@given(coeffs=cubic_coeffs, n=st.sampled_from([8, 9, 16, 33]))
def test_cumulative_integral_exact_for_cubics(coeffs, n):
    # every local rule interpolates with cubics, so cubics integrate exactly
    dr = 1.0 / (n - 1)
    x = np.linspace(0.0, 1.0, n)
    poly = np.polynomial.Polynomial(coeffs)
    anti = poly.integ()
    got = cumulative_integral(poly(x), dr)
    want = anti(x) - anti(x[0])
    assert np.max(np.abs(got - want)) < 1e-12 * max(1.0, np.max(np.abs(want)))


def test_cumulative_integral_needs_four_nodes():
    with pytest.raises(InputError):
        cumulative_integral(np.ones(3), 0.1)


@settings(max_examples=40, deadline=None)
@given(coeffs=st.lists(st.floats(min_value=-2.0, max_value=2.0, allow_nan=False), min_size=5, max_size=5))
def test_interval_derivative_exact_for_quartics(coeffs):
    # 5-point stencils (centred and one-sided) differentiate quartics exactly
    n = 17
    dr = 1.0 / (n - 1)
    x = np.linspace(0.0, 1.0, n)
    poly = np.polynomial.Polynomial(coeffs)
    got = Derivative4Interval(n, dr)(poly(x))
    want = poly.deriv()(x)
    scale = max(1.0, float(np.max(np.abs(want))))
    assert np.max(np.abs(got - want)) < 1e-11 * scale


def test_periodic_derivative_fourth_order():
    errs = []
    for n in (32, 64, 128):
        x = np.arange(n) / n
        d = Derivative4Periodic(n, 1.0 / n)
        got = d(np.sin(2 * np.pi * x))
        errs.append(np.max(np.abs(got - 2 * np.pi * np.cos(2 * np.pi * x))))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders > 3.9)


def test_periodic_derivative_applies_along_first_axis():
    n = 32
    x = np.arange(n) / n
    f = np.column_stack([np.sin(2 * np.pi * x), np.cos(4 * np.pi * x)])
    d = Derivative4Periodic(n, 1.0 / n)(f)
    assert d.shape == f.shape
    assert np.max(np.abs(d[:, 0] - 2 * np.pi * np.cos(2 * np.pi * x))) < 1e-2
