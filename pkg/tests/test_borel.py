import cmath
import math
import warnings

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clborel.actions import Action, boltzmann_moment
from clborel.borel import (
    borel_curve,
    borel_sum,
    borel_transform,
    borel_transform_rotated,
    derived_higher_moments,
    laplace_integral,
    scaling_check,
)
from clborel.errors import GridTooCoarseError, InvalidParameterError, TailTruncationWarning
from clborel.moments import equilibrium_recursion, moment_partial_sum, series_coefficients_via_recursion

pytestmark = pytest.mark.filterwarnings("ignore::clborel.errors.TailTruncationWarning")

T_GRID = np.round(np.arange(0.1, 2.0001, 0.1), 10)


@pytest.fixture(scope="module")
def m2_theta0():
    return borel_transform(2, T_GRID)


def test_borel_sum_origin():
    assert borel_sum(2, 0.0) == 0
    assert borel_sum(0, 3.0) == 1


def test_borel_sum_truncation_independent():
    a = borel_sum(2, 11.0, 500)
    b = borel_sum(2, 11.0, 1000)
    assert abs(a - b) < 1e-8 * max(1.0, abs(b))


def test_borel_sum_small_s_against_term_sum():
    # independent term-by-term sum of c (-4 alpha)^m (2s)^n / (n!)^2 in mpmath
    alpha, s = 0.5, 0.01
    table = series_coefficients_via_recursion(4, 80)
    mp.mp.dps = 40
    for p in (2, 4):
        ref = mp.mpf(0)
        for n, c in table.row(p):
            m = (n - p // 2) // 2
            ref += c * mp.mpf(-4 * alpha) ** m * mp.mpf(2 * s) ** n / mp.factorial(n) ** 2
        assert abs(borel_sum(p, s, 500, alpha) - float(ref)) < 1e-12 * max(1e-3, abs(float(ref)))


def test_borel_sum_rejects_negative_s():
    with pytest.raises(InvalidParameterError):
        borel_sum(2, -1.0)


def test_equilibrium_values():
    assert borel_transform(2, 2.0) == pytest.approx(0.47798, abs=1e-3)
    assert borel_transform(4, 2.0) == pytest.approx(0.5, abs=1e-3)


@pytest.mark.parametrize("p", [2, 4])
@pytest.mark.parametrize("theta", [0.0, math.pi / 2])
def test_equilibrium_limit(p, theta):
    val = borel_transform(p, 2.0, theta)
    assert abs(val - boltzmann_moment(Action.quartic(1.0, theta), p)) < 1e-3


def test_small_t_matches_series():
    val = borel_transform(2, 0.01)
    ser = moment_partial_sum(2, 0.01, 60, 0.5)
    assert abs(val - ser) < 1e-4


def test_p0_is_one():
    assert borel_transform(0, [0.5, 1.0]) == pytest.approx([1.0, 1.0])


def test_scaling_check():
    assert scaling_check(2, 0.5, 1.0) < 1e-6
    assert scaling_check(2, 0.25, 16.0) < 1e-6
    assert scaling_check(0, 0.5, 1.0) == 0


def test_step_halving(m2_theta0):
    fine = borel_transform(2, T_GRID, step=5e-4)
    assert np.max(np.abs(fine - m2_theta0) / np.abs(m2_theta0)) < 1e-8


def test_monotone_at_theta0():
    # with the default 500 terms the neglected tail beyond s_max = 11 is about
    # 1e-5 and shows up as a spurious decrease for t > 1.5; 1000 terms reach s = 16
    dense = borel_transform(2, np.linspace(0.02, 2.0, 100), s_max=16.0, n_terms=1000)
    assert np.all(np.abs(dense.imag) < 1e-14)
    assert np.all(np.diff(dense.real) > -1e-9)


@settings(max_examples=8)
@given(st.floats(0.3, 1.5), st.floats(0.2, 3.0))
def test_theta_covariance(t, theta):
    p = 2
    lhs = borel_transform(p, t, theta)
    rhs = cmath.exp(-1j * p * theta / 8) * borel_transform_rotated(p, cmath.exp(0.25j * theta) * t)
    assert abs(lhs - rhs) < 1e-8


def test_tail_warning_raised():
    with pytest.warns(TailTruncationWarning):
        borel_transform(2, 2.0, s_max=6.0)


def test_laplace_integral_exact_polynomial():
    s = np.linspace(0, 40, 4001)
    for tau in (0.02, 0.3, 1.0 + 0.5j):
        val, _ = laplace_integral(s, s * s, tau, tail_closure=False)
        assert abs(val - 2 * tau**3) < 1e-7 * abs(tau) ** 3
    with pytest.raises(InvalidParameterError):
        laplace_integral(s, s, -1.0)


def test_borel_curve_metadata():
    res = borel_curve(2, [0.5, 1.0])
    md = res.metadata
    assert md["p"] == 2 and md["N_terms"] == 500 and md["s_max"] == pytest.approx(11.0)
    assert len(res.s_grid) == len(res.b_values)
    assert res.M_values.shape == (2,)


def test_derived_moments_match_m4():
    t = np.round(np.arange(0.1, 1.9001, 0.005), 10)
    m2 = borel_transform(2, t)
    m4 = borel_transform(4, t)
    out = derived_higher_moments(m2, t, 0.5)
    sel = (out["t"] >= 0.2 - 1e-12) & (out["t"] <= 1.8 + 1e-12)
    idx = np.searchsorted(t, out["t"][sel])
    assert np.max(np.abs(out[4][sel] - m4[idx].real)) < 1e-3


def test_derived_moments_stationary_input():
    alpha = 0.5
    t = np.linspace(0, 1, 21)
    m2inf = boltzmann_moment(Action.quartic(1.0), 2).real
    out = derived_higher_moments(np.full_like(t, m2inf), t, alpha)
    assert np.allclose(out[4], 1 / (4 * alpha), atol=0, rtol=1e-14)
    assert out[4][0] == pytest.approx(equilibrium_recursion(4, m2inf, alpha).real, rel=1e-14)
    zero = derived_higher_moments(np.zeros_like(t), t, alpha)
    assert np.allclose(zero[4], 1 / (4 * alpha))


def test_derived_moments_coarse_grid():
    t = np.linspace(0.05, 2.0, 9)
    with pytest.raises(GridTooCoarseError):
        derived_higher_moments(borel_transform(2, t), t, 0.5)
    with pytest.raises(InvalidParameterError):
        derived_higher_moments(np.zeros(5), np.linspace(0, 1, 5), 0.5)
