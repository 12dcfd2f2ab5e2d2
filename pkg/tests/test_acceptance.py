"""Acceptance criteria 1-10.

Each test records one PASS/FAIL line (shown in the terminal summary) and
then asserts. The Langevin ensembles come from session fixtures in
conftest.py and take most of the runtime (about an hour on one core).
"""

import math
import time
import warnings

import numpy as np
import pytest
from scipy.special import eval_legendre

from clborel import langevin as L
from clborel import spectral1d as S1
from clborel import spectral2d as S2
from clborel.actions import Action, NoiseConfig, boltzmann_moment
from clborel.borel import borel_transform
from clborel.errors import TailTruncationWarning
from clborel.harmonic import (
    generating_functional_check,
    harmonic_ground_state,
    harmonic_moment_flow,
    spectral_norm_generating_function,
)
from clborel.moments import series_coefficients_via_operator, series_coefficients_via_recursion, series_row

HALF = math.pi / 2
REF_C = [1.935482, 6.298496, 11.680971, 18.042635, 25.254605,
          33.226111, 41.891010, 51.197908, 61.105360, 71.579037]
REF_LOG_NORMS = [0.08664, 0.21303, 0.40745, 0.69222, 1.02414, 1.3901, 1.7800, 2.1869, 2.6063, 3.0351, 3.4711]
REF_C2_ROW = [1, 6, 216, 22896, 5360256, 2346299136]
REF_GS_M2 = {1.0: 0.54 - 0.41j, 0.5: 0.48 - 0.30j, 0.2: 0.45 - 0.23j, 0.1: 0.44 - 0.20j}
COMPLEX_MEASURE_M2 = 0.441596 - 0.182915j
BREAKDOWN_TC = {1.0: 0.16, 0.5: 0.22, 0.2: 0.41, 0.1: 0.67}

pytestmark = pytest.mark.filterwarnings("ignore::clborel.errors.TailTruncationWarning")


def _borel_m2(t, theta):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TailTruncationWarning)
        return borel_transform(2, np.asarray(t), theta)


def test_c01_series_exactness(report):
    t0 = time.perf_counter()
    row = [c for _, c in series_row(2, 6)]
    rec = series_coefficients_via_recursion(12, 40)
    same = all(series_coefficients_via_operator(p, 40) == {k: v for k, v in rec.entries.items() if k[0] == p}
               for p in range(2, 13, 2))
    elapsed = time.perf_counter() - t0
    ok = row == REF_C2_ROW and same and elapsed < 10
    report(1, ok, f"c_2 = {row}, oracles identical for p<=12, n<=40: {same}, {elapsed:.2f} s")
    assert ok


def test_c02_borel_equilibrium(report):
    t0 = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TailTruncationWarning)
        m2 = borel_transform(2, 2.0, n_terms=500, s_max=11.0)
        m4 = borel_transform(4, 2.0, n_terms=500, s_max=11.0)
    elapsed = time.perf_counter() - t0
    ok = abs(m2 - 0.47798) <= 1e-3 and abs(m4 - 0.5) <= 1e-3 and elapsed < 60
    report(2, ok, f"M2(2) = {m2.real:.6f}, M4(2) = {m4.real:.6f}, {elapsed:.1f} s")
    assert ok


def test_c03_langevin_borel_theta0(report, theta0_run):
    m = theta0_run
    ref = _borel_m2(m.t, 0.0)
    z = np.abs(m.m(2) - ref) / m.error(2)
    ok = len(m.t) == 10 and m.t[0] >= 0.05 and m.t[-1] <= 2 and bool(np.all(z <= 3))
    report(3, ok, f"max |m2 - M2|/sigma = {z.max():.2f} over {len(m.t)} checkpoints, "
                  f"{m.n_kept} trajectories kept")
    assert ok


def test_c04_breakdown(report, breakdown_runs):
    detected, lines = {}, []
    for a_i, m in breakdown_runs.items():
        tc = L.detect_breakdown(m, _borel_m2(m.t, HALF))
        detected[a_i] = tc
        lines.append(f"A_I={a_i:g}: t_c={'none' if tc is None else f'{tc:.2f}'} (expected {BREAKDOWN_TC[a_i]})")
    within = all(tc is not None and abs(tc - BREAKDOWN_TC[a_i]) <= 0.05 for a_i, tc in detected.items())
    points = [(a, tc) for a, tc in detected.items() if tc is not None]
    gamma = None
    if len(points) >= 3:
        gamma = L.breakdown_scaling_fit(points).gamma
        lines.append(f"gamma={gamma:.3f} from {len(points)} points")
    else:
        lines.append("scaling fit impossible: fewer than three detections")
    ok = within and gamma is not None and abs(gamma - 0.6) <= 0.15
    report(4, ok, "; ".join(lines))
    assert ok


def test_c05_spectrum_1d(report):
    d0 = S1.eigen_decompose_1d(S1.build_fp_hamiltonian(1.0, 0.0, 150))
    dh = S1.eigen_decompose_1d(S1.build_fp_hamiltonian(1.0, HALF, 150))
    dc = np.abs(d0.C[1:11] - REF_C).max()
    e0 = max(abs(d0.eigenvalues[0]), abs(dh.eigenvalues[0]))
    darg = np.abs(np.angle(dh.eigenvalues[1:11]) - HALF / 4).max()
    ok = dc < 1e-4 and e0 < 1e-6 and darg < 1e-3
    report(5, ok, f"max |C_n - reference| = {dc:.1e}, |E0| = {e0:.1e}, max |arg E_n - pi/8| = {darg:.1e}")
    assert ok


def test_c06_spectral_norms(report):
    big = S1.eigen_decompose_1d(S1.build_fp_hamiltonian(1.0, HALF, 1500))
    ln = np.log(big.norms)
    dtab = np.abs(ln[:11] - REF_LOG_NORMS).max()
    dn0 = abs(big.norms[0] - S1.ground_state_norm_exact(HALF))
    fit = S1.norm_growth_fit(big.norms, n_min=10, reliable=big.norm_reliable, n_max=36)
    dlam = 0.0
    base = S1.eigen_decompose_1d(S1.build_fp_hamiltonian(1.0, HALF, 300))
    for lam in (0.1, 10.0):
        d = S1.eigen_decompose_1d(S1.build_fp_hamiltonian(lam, HALF, 300))
        r = base.reliable & d.reliable
        r[0] = False
        dlam = max(dlam, np.abs(d.C[r] / base.C[r] - 1).max(), np.abs(d.norms[r] / base.norms[r] - 1).max())
    ok = (dtab < 1e-3 and dn0 < 1e-6 and abs(fit.slope - 0.47) <= 0.03
          and abs(fit.intercept + 1.34) <= 0.1 and dlam < 1e-5)
    report(6, ok, f"max |ln N_n - reference| = {dtab:.1e}, |N0 - closed form| = {dn0:.1e}, "
                  f"fit {fit.intercept:.3f} + {fit.slope:.4f} n ({fit.n_points} pts), lambda spread {dlam:.1e}")
    assert ok


def _conj_defect(low, pool):
    return max(np.abs(np.conj(e) - pool).min() for e in low)


def test_c07_spectrum_2d(report):
    N = 64
    w0 = S2.spectrum_2d(S2.build_fp_matrix(1.0, 0.0, 1.0, N), 12)
    Ph = S2.build_fp_matrix(1.0, HALF, 1.0, N)
    wh = S2.spectrum_2d(Ph, 12)
    e0 = max(abs(w0[0]), abs(wh[0]))
    d1 = max(abs(w0[1] - 2.07), abs(wh[1] - 1.92))
    conj = max(_conj_defect(w0[:10], w0), _conj_defect(wh[:10], wh),
               S2.conjugation_defect(S2.full_spectrum_2d(S2.build_fp_matrix(1.0, HALF, 1.0, 30))))
    PT = S2.build_fp_transpose_matrix(1.0, HALF, 1.0, N).matrix
    # independent closed forms; entries up to ~1e3 are sums of cancelling terms
    dT = abs(PT - Ph.matrix.T).max() / abs(Ph.matrix).max()
    ok = e0 < 0.02 and d1 <= 0.05 and conj < 1e-8 and dT < 1e-12
    report(7, ok, f"N={N}: |E0| <= {e0:.4f}, E1 = {w0[1].real:.4f} / {wh[1].real:.4f}, "
                  f"conjugation defect {conj:.1e}, transpose defect {dT:.1e}")
    assert ok


def test_c08_ground_state_moments(report):
    parts, ok = [], True
    for a_i, target in REF_GS_M2.items():
        # truncation raised from N = 50 until the zero mode has converged (|E0| < 0.02)
        gs = S2.converged_ground_state(1.0, HALF, a_i)
        N = gs.N
        m2, _ = S2.ground_state_moments(gs, 2)
        good = abs(m2 - target) <= 0.05
        if a_i >= 0.5:
            good &= abs(m2 - COMPLEX_MEASURE_M2) > 0.05
        ok &= good
        parts.append(f"A_I={a_i:g} (N={N}): {m2.real:.3f}{m2.imag:+.3f}i")
    ok &= abs(boltzmann_moment(Action.quartic(1.0, HALF), 2) - COMPLEX_MEASURE_M2) < 1e-5
    report(8, ok, "; ".join(parts))
    assert ok


def test_c09_cross_route(report, breakdown_runs):
    m = breakdown_runs[0.1]
    sel = m.t < 0.5
    z = np.abs(m.m(2)[sel] - _borel_m2(m.t[sel], HALF)) / m.error(2)[sel]
    ok = bool(np.all(z <= 3))
    report(9, ok, f"A_I=0.1: max |m2 - M2|/sigma = {z.max():.2f} over {sel.sum()} checkpoints t < 0.5")
    assert ok


def _gaussian_bin_masses(gs, xe, ye, sub=8):
    # midpoint rule on a sub-grid inside each bin
    def fine(e):
        h = np.diff(e) / sub
        return (e[:-1, None] + h[:, None] * (np.arange(sub) + 0.5)).ravel(), np.repeat(h, sub)

    fx, hx = fine(xe)
    fy, hy = fine(ye)
    dens = gs.density(fx[:, None], fy[None, :]) * hx[:, None] * hy[None, :]
    nx, ny = len(xe) - 1, len(ye) - 1
    return dens.reshape(nx, sub, ny, sub).sum(axis=(1, 3))


def test_c10_harmonic_anchor(report, harmonic_runs):
    zmax = 0.0
    for a_i, m in harmonic_runs.items():
        exact = harmonic_moment_flow(2, m.t, 1.0, HALF)
        zmax = max(zmax, (np.abs(m.m(2) - exact) / m.error(2)).max())
    gf = max(generating_functional_check(j, 1.0, th, a) for j in (0.5, 1.0, 2.0)
             for th in (0.0, HALF, 2.5) for a in (0.5, 1.0, 3.0))
    norms = spectral_norm_generating_function(HALF, 60)
    c = math.cos(HALF / 2)
    closed = np.array([c**-0.5, c**-1.5, (5 - math.cos(HALF)) / (4 * c**2.5)])
    legendre = c**-0.5 * eval_legendre(np.arange(61), 1 / c)
    dnorm = max(np.abs(norms[:3] / closed - 1).max(), np.abs(norms / legendre - 1).max())
    cfg = L.SimulationConfig(Action.quadratic(1.0, HALF), NoiseConfig(1.0), (3.0,), 100_000, 1e-4, 41)
    hist = L.density_histogram_2d(cfg, 3.0, bounds=((-3, 3), (-3, 3)), bins=(20, 20))
    exact = _gaussian_bin_masses(harmonic_ground_state(1.0, HALF, 1.0), hist.x_edges, hist.y_edges)
    l1 = np.abs(hist.mass - exact / exact.sum()).sum()
    ok = zmax <= 3 and gf < 1e-10 and dnorm < 1e-12 and l1 < 0.05
    report(10, ok, f"max |m2 - exact|/sigma = {zmax:.2f}, generating functional {gf:.1e}, "
                   f"norm series vs closed form {dnorm:.1e}, histogram L1 {l1:.3f} "
                   f"({hist.n_samples} samples, {hist.excluded_fraction:.1e} outside)")
    assert ok
