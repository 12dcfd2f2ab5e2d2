import cmath
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from clborel.actions import Action, NoiseConfig, boltzmann_moment, drift, fokker_planck_potential, force_components
from clborel.errors import InvalidParameterError

coord = st.floats(-3, 3, allow_nan=False)
angle = st.floats(0, math.pi, allow_nan=False)
coupling = st.floats(0.05, 20, allow_nan=False)
kinds = st.sampled_from(["quartic", "quadratic"])


def test_drift_examples():
    assert drift(Action.quartic(1.0), 1.0) == pytest.approx(-2.0)
    assert drift(Action.quartic(1.0), 0.0) == 0
    assert abs(drift(Action.quadratic(1.0, math.pi), 1.0) - (-2j)) < 1e-15


def test_force_examples():
    assert force_components(Action.quartic(1.0), 1.0, 0.0) == pytest.approx((-2.0, 0.0))
    assert force_components(Action.quartic(1.0), 0.0, 0.0) == (0.0, 0.0)
    a = Action.quartic(1.0, math.pi / 2)
    fx, fy = force_components(a, 1.0, 1.0)
    d = drift(a, 1 + 1j)
    assert abs(fx - d.real) < 1e-14 and abs(fy - d.imag) < 1e-14


def test_fokker_planck_potential_examples():
    assert fokker_planck_potential(Action.quartic(1.0), 1.0) == pytest.approx(-2.0)
    assert fokker_planck_potential(Action.quartic(1.0), 0.0) == 0
    assert fokker_planck_potential(Action.quadratic(1.0), 0.0) == pytest.approx(-1.0)


def test_boltzmann_examples():
    assert boltzmann_moment(Action.quartic(1.0), 2) == pytest.approx(0.47798, abs=1e-5)
    assert boltzmann_moment(Action.quartic(1.0), 0) == 1
    v = boltzmann_moment(Action.quartic(1.0, math.pi / 2), 2)
    assert abs(v - (0.441596 - 0.182915j)) < 1e-5


def test_parameter_validation():
    with pytest.raises(InvalidParameterError):
        Action.quartic(0.0)
    with pytest.raises(InvalidParameterError):
        Action.quartic(1.0, -0.1)
    with pytest.raises(InvalidParameterError):
        Action("sextic", 1.0)
    with pytest.raises(InvalidParameterError):
        NoiseConfig(-1.0)
    with pytest.raises(InvalidParameterError):
        boltzmann_moment(Action.quartic(1.0), 3)
    with pytest.raises(InvalidParameterError):
        boltzmann_moment(Action.quartic(1.0, math.pi), 2)
    assert NoiseConfig(0.3).a_r == pytest.approx(1.3)


@given(kinds, coupling, angle, st.lists(st.tuples(coord, coord), min_size=1, max_size=20))
def test_cauchy_riemann_of_forces(kind, g, theta, pts):
    a = Action(kind, g, theta)
    h = 1e-5
    for x, y in pts:
        dfy_dx = (force_components(a, x + h, y)[1] - force_components(a, x - h, y)[1]) / (2 * h)
        dfx_dy = (force_components(a, x, y + h)[0] - force_components(a, x, y - h)[0]) / (2 * h)
        scale = max(1.0, abs(dfy_dx))
        assert abs(dfy_dx + dfx_dy) < 1e-6 * scale * 10


def test_cauchy_riemann_hundred_points():
    rng = np.random.default_rng(1)
    a = Action.quartic(1.0, math.pi / 2)
    x, y = rng.uniform(-1, 1, (2, 100))
    h = 1e-5
    dfy_dx = (force_components(a, x + h, y)[1] - force_components(a, x - h, y)[1]) / (2 * h)
    dfx_dy = (force_components(a, x, y + h)[0] - force_components(a, x, y - h)[0]) / (2 * h)
    assert np.max(np.abs(dfy_dx + dfx_dy)) < 1e-6


@given(kinds, coupling, angle, coord, coord)
def test_drift_matches_forces(kind, g, theta, x, y):
    a = Action(kind, g, theta)
    fx, fy = force_components(a, x, y)
    d = drift(a, complex(x, y))
    scale = max(1.0, abs(d))
    assert abs(fx - d.real) <= 1e-14 * scale * 4 and abs(fy - d.imag) <= 1e-14 * scale * 4


@given(coupling)
def test_quartic_fourth_moment_is_inverse_alpha(lam):
    a = Action.quartic(lam)
    assert boltzmann_moment(a, 4) == pytest.approx(0.25 / a.alpha, rel=1e-13)


@given(coupling, st.floats(0, 3.1, allow_nan=False), st.sampled_from([2, 4, 6, 8]))
def test_phase_covariance(lam, theta, p):
    base = boltzmann_moment(Action.quartic(lam), p)
    rot = boltzmann_moment(Action.quartic(lam, theta), p)
    assert abs(rot - cmath.exp(-1j * p * theta / 8) * base) < 1e-12 * abs(base)


def test_quadratic_boltzmann_moment():
    assert boltzmann_moment(Action.quadratic(1.0), 2) == pytest.approx(0.5)
    assert boltzmann_moment(Action.quadratic(1.0), 4) == pytest.approx(0.75)
