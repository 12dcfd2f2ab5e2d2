import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clborel import langevin as L
from clborel.actions import Action, NoiseConfig
from clborel.errors import (
    AllDivergedError,
    ExcessiveDivergenceError,
    InsufficientDataError,
    InvalidParameterError,
    NonFiniteStateError,
)
from clborel.harmonic import harmonic_moment_flow

BACKENDS = L.available_backends()
compiled_only = pytest.mark.skipif("compiled" not in BACKENDS, reason="extension not built")


def cfg(action, a_i=0.0, ck=(0.05,), n=64, delta=1e-4, seed=3):
    return L.SimulationConfig(action, NoiseConfig(a_i), ck, n, delta, seed)


def test_step_zero_noise():
    s = L.TrajectoryState(1.0, 0.0, 0.0, L.TrajectoryState.origin().rng)
    nxt = L.step(s, Action.quartic(1.0), NoiseConfig(0.0), 1e-3, deterministic=True)
    assert nxt.x < 1.0 and nxt.y == 0.0
    assert s.x == 1.0  # input untouched


def test_step_sizes():
    a, nz = Action.quartic(1.0), NoiseConfig(0.0)
    s = L.TrajectoryState.origin(0, 0)
    assert L.step(s, a, nz, 1e-4).t == 1e-4
    far = L.TrajectoryState(10.0, 0.0, 0.0, s.rng)
    assert L.step(far, a, nz, 1e-4, deterministic=True).t == pytest.approx(1e-4 / 2001, rel=1e-15)


def test_step_divergence():
    s = L.TrajectoryState(float("nan"), 0.0, 0.0, L.TrajectoryState.origin().rng)
    with pytest.raises(NonFiniteStateError):
        L.step(s, Action.quartic(1.0), NoiseConfig(0.0), 1e-3, deterministic=True)


def test_checkpoint_zero_records_origin():
    for b in BACKENDS:
        out, status, _ = L.run_block(cfg(Action.quartic(1.0), ck=(0.0, 0.01), n=5), 0, 5, b)
        assert np.all(out[:, 0] == 0) and np.all(status == 0)
        assert np.all(out[:, 1, 0] != 0)


def test_config_validation():
    a = Action.quartic(1.0)
    with pytest.raises(InvalidParameterError):
        cfg(a, ck=(0.2, 0.1))
    with pytest.raises(InvalidParameterError):
        cfg(a, ck=())
    with pytest.raises(InvalidParameterError):
        cfg(a, n=0)
    with pytest.raises(InvalidParameterError):
        cfg(a, delta=0.0)
    with pytest.raises(InvalidParameterError):
        L.run_block(cfg(a), 0, 1, "fortran")


@compiled_only
@settings(max_examples=10)
@given(st.sampled_from(["quartic", "quadratic"]), st.floats(0, math.pi), st.sampled_from([0.0, 0.1, 1.0]),
       st.integers(0, 2**63))
def test_backends_bit_identical(kind, theta, a_i, seed):
    c = L.SimulationConfig(Action(kind, 1.0, theta), NoiseConfig(a_i), (0.01, 0.02, 0.05), 40, 1e-4, seed)
    o1, s1, n1 = L.run_block(c, 7, 40, "compiled")
    o2, s2, n2 = L.run_block(c, 7, 40, "python")
    assert np.array_equal(o1, o2) and np.array_equal(s1, s2) and n1 == n2


def test_step_chain_matches_block():
    a, nz = Action.quartic(1.0, math.pi / 2), NoiseConfig(1.0)
    c = L.SimulationConfig(a, nz, (0.003,), 1, 1e-4, 11)
    ref = L.run_trajectory(c, 5, "python")
    s = L.TrajectoryState.origin(11, 5)
    while s.t < 0.003:
        s = L.step(s, a, nz, 1e-4)
    assert (s.x, s.y) == (ref[0, 0], ref[0, 1])


def test_run_trajectory_is_partition_independent():
    c = cfg(Action.quartic(1.0, 1.0), 1.0, ck=(0.01, 0.03), n=30)
    out, _, _ = L.run_block(c, 0, 30)
    for i in (0, 13, 29):
        assert np.array_equal(L.run_trajectory(c, i), out[i])


def test_theta0_without_imaginary_noise_stays_real():
    c = cfg(Action.quartic(1.0), 0.0, ck=(0.05, 0.2), n=200)
    for b in BACKENDS:
        out, _, _ = L.run_block(c, 0, 200, b)
        assert np.all(out[:, :, 1] == 0.0)


def test_ensemble_determinism_across_schedules():
    c = cfg(Action.quartic(1.0, math.pi / 2), 1.0, ck=(0.02, 0.05), n=600)
    a = L.ensemble_moments(c, threads=1, block_size=100)
    b = L.ensemble_moments(c, threads=4, block_size=100)
    for p in (2, 4):
        assert np.array_equal(a.mean[p], b.mean[p]) and np.array_equal(a.se[p], b.se[p])
    c2 = L.ensemble_moments(c, threads=2, block_size=256)
    assert np.allclose(c2.mean[2], a.mean[2], rtol=1e-13, atol=1e-15)


def test_backend_ensembles_identical():
    c = cfg(Action.quartic(1.0, 1.0), 0.5, ck=(0.02, 0.04), n=128)
    res = [L.ensemble_moments(c, backend=b) for b in BACKENDS]
    for r in res[1:]:
        assert np.array_equal(r.mean[2], res[0].mean[2])


def test_single_trajectory_se_undefined():
    m = L.ensemble_moments(cfg(Action.quartic(1.0), n=1))
    assert not m.se_defined
    assert np.all(np.isnan(m.se[2]))


def _fake_divergence(monkeypatch, bad):
    real = L.run_block

    def patched(config, start, count, backend=None):
        out, status, steps = real(config, start, count, backend)
        status = status.copy()
        status[: min(bad, count)] = 1
        return out, status, steps

    monkeypatch.setattr(L, "run_block", patched)


def test_divergence_handling(monkeypatch):
    c = cfg(Action.quartic(1.0), 1.0, ck=(0.005,), n=2000)
    clean = L.ensemble_moments(c, block_size=2000)
    _fake_divergence(monkeypatch, 1)
    m = L.ensemble_moments(c, block_size=2000)
    assert (m.n_kept, m.n_excluded) == (1999, 1)
    assert m.m(2)[0] != clean.m(2)[0]
    with pytest.raises(ExcessiveDivergenceError):
        L.ensemble_moments(c, block_size=2000, max_excluded_fraction=0.0)
    _fake_divergence(monkeypatch, 2000)
    with pytest.raises(AllDivergedError):
        L.ensemble_moments(c, block_size=2000)


def test_harmonic_flow_agreement():
    # quadratic action: Langevin must reproduce the exact moment flow
    ck = (0.1, 0.25, 0.5, 1.0, 2.0)
    for theta, a_i in ((0.0, 0.0), (math.pi / 2, 1.0)):
        c = L.SimulationConfig(Action.quadratic(1.0, theta), NoiseConfig(a_i), ck, 20000, 1e-4, 5)
        m = L.ensemble_moments(c)
        exact = harmonic_moment_flow(2, np.array(ck), 1.0, theta)
        assert np.all(np.abs(m.m(2) - exact) < 3 * np.abs(m.se[2]) + 1e-3)


def test_detect_breakdown_trivial_cases():
    c = cfg(Action.quartic(1.0), ck=tuple(np.linspace(0.01, 0.1, 10)), n=50)
    m = L.ensemble_moments(c)
    assert L.detect_breakdown(m, m.m(2)) is None
    shifted = m.m(2).copy()
    shifted[4:] += 1.0
    assert L.detect_breakdown(m, shifted) == pytest.approx(m.t[4])
    assert L.detect_breakdown(m, lambda t: 10.0) == pytest.approx(m.t[0])
    with pytest.raises(InvalidParameterError):
        L.detect_breakdown(m, m.m(2), window=0)


def test_scaling_fit_examples():
    a = np.array([1.0, 0.5, 0.2, 0.1])
    fit = L.breakdown_scaling_fit(list(zip(a, a**-0.5)))
    assert fit.gamma == pytest.approx(0.5, abs=1e-6) and fit.alpha == pytest.approx(0.0, abs=1e-6)
    quoted = L.breakdown_scaling_fit([(1, 0.16), (0.5, 0.22), (0.2, 0.41), (0.1, 0.67)])
    assert abs(quoted.gamma - 0.6) < 0.15
    assert np.all(np.abs(np.log(quoted.predict(quoted.a_i) / quoted.t_c)) < 0.2)
    with pytest.raises(InsufficientDataError):
        L.breakdown_scaling_fit([(1, 0.16), (0.5, 0.22)])


@given(st.floats(0.2, 1.5), st.floats(-0.05, 0.5), st.floats(0.1, 3.0))
def test_scaling_fit_recovers_exact_model(gamma, alpha, c0):
    a = np.array([1.0, 0.5, 0.2, 0.1, 0.05])
    tc = c0 * (a + alpha) ** -gamma
    fit = L.breakdown_scaling_fit(list(zip(a, tc)))
    assert fit.residual < 1e-6
    assert np.allclose(fit.predict(a), tc, rtol=1e-5)


def test_histogram_parity_and_normalization():
    c = L.SimulationConfig(Action.quadratic(1.0, math.pi / 2), NoiseConfig(1.0), (1.0,), 20000, 1e-3, 9)
    h = L.density_histogram_2d(c, 3.0, bins=(12, 12))
    assert h.mass.sum() == pytest.approx(1.0)
    assert 0 < h.excluded_fraction < 0.02
    flipped = h.mass[::-1, ::-1]
    assert np.abs(h.mass - flipped).sum() < 0.15  # sampling noise is about 0.08
