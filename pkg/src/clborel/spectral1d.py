"""Hermite-basis truncation of the complex sextic Fokker-Planck Hamiltonian.

H = p² - e^{iθ/2} ω² q² + λ e^{iθ} q⁶ in the oscillator basis of
frequency ω_b (q = (a + a†)/√(2ω_b), p = i(a† - a)√(ω_b/2)). The
Fokker-Planck case has ω² = 3√λ, where E₀ = 0 exactly and
E_n = C_n e^{iθ/4} λ^{1/4}.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.special import gammaln

from .errors import EigensolverError, InsufficientDataError, InvalidParameterError, InvalidTruncationError

# relative shifts tolerated between the N and N - 50 truncations
EIG_TOL = 1e-5
NORM_TOL = 1e-3
COMPARE_OFFSET = 50


@dataclass(frozen=True)
class TruncatedOperator1D:
    """Dense N×N matrix ⟨m|H|n⟩ with its parameters."""

    N: int
    matrix: np.ndarray = field(repr=False)
    omega2: float
    lam: float
    theta: float
    basis_frequency: float


def _band(m: np.ndarray, d: int) -> np.ndarray:
    """√(m!/(m-d)!) for m >= d."""
    return np.exp(0.5 * (gammaln(m + 1) - gammaln(m - d + 1)))


def build_hamiltonian_matrix(omega2: float, lam: float, theta: float, N: int,
                             basis_frequency: float | None = None) -> TruncatedOperator1D:
    """Matrix elements of H between the first N oscillator states.

    Parameters
    ----------
    omega2 : float
        Coefficient ω² of the quadratic term (3√λ for Fokker-Planck).
    lam : float
        Sextic coupling, > 0.
    theta : float
        Wick angle; the quadratic term carries e^{iθ/2}, the sextic e^{iθ}.
    N : int
        Truncation, N >= 8.
    basis_frequency : float, optional
        Defaults to √ω² when ω² > 0, else λ^{1/4}.
    """
    N = int(N)
    if N < 8:
        raise InvalidTruncationError("sextic band needs N >= 8")
    if lam <= 0:
        raise InvalidParameterError("lambda must be positive")
    if omega2 < 0:
        raise InvalidParameterError("omega^2 must be nonnegative")
    wb = basis_frequency
    if wb is None:
        wb = math.sqrt(omega2) if omega2 > 0 else lam**0.25
    if not (math.isfinite(wb) and wb > 0 and 0 < wb**3 < math.inf):
        raise InvalidParameterError(f"basis frequency {wb!r} is outside the representable range")
    ph = cmath.exp(0.5j * theta)
    c6 = lam * ph * ph / (8 * wb**3)
    kin = wb / 2
    quad = ph * omega2 / (2 * wb)

    m = np.arange(N, dtype=float)
    M = np.zeros((N, N), dtype=complex)
    diag = (kin - quad) * (2 * m + 1) + c6 * (20 * m**3 + 30 * m**2 + 40 * m + 15)
    M[np.diag_indices(N)] = diag
    for d, poly in ((2, lambda k: 15 * (k * k - k + 1)),
                    (4, lambda k: 6 * k - 9),
                    (6, lambda k: np.ones_like(k))):
        k = m[d:]
        val = c6 * _band(k, d) * poly(k)
        if d == 2:
            val = val - (kin + quad) * _band(k, 2)
        idx = np.arange(d, N)
        M[idx, idx - d] = val
        M[idx - d, idx] = val
    return TruncatedOperator1D(N, M, float(omega2), float(lam), float(theta), float(wb))


def build_fp_hamiltonian(lam: float, theta: float, N: int) -> TruncatedOperator1D:
    """Fokker-Planck specialization ω² = 3√λ."""
    return build_hamiltonian_matrix(3 * math.sqrt(lam), lam, theta, N)


@dataclass(frozen=True)
class SpectralDecomposition1D:
    """Eigenpairs sorted by modulus with norms and truncation diagnostics."""

    N: int
    lam: float
    theta: float
    eigenvalues: np.ndarray = field(repr=False)
    eigenvectors: np.ndarray = field(repr=False)
    C: np.ndarray = field(repr=False)
    norms: np.ndarray = field(repr=False)
    reliable: np.ndarray = field(repr=False)
    phase_ok: np.ndarray = field(repr=False)
    compare_N: int | None = None
    norm_reliable: np.ndarray | None = field(default=None, repr=False)


def _sorted_eig(M: np.ndarray):
    try:
        w, v = scipy.linalg.eig(M, check_finite=False)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigensolverError(f"eig failed for {M.shape} matrix: {exc}") from exc
    order = np.lexsort((np.angle(w), np.round(np.abs(w), 12)))
    w = w[order]
    v = v[:, order]
    v = v / np.linalg.norm(v, axis=0)
    return w, v


def _norms(v: np.ndarray) -> np.ndarray:
    return 1.0 / np.abs(np.sum(v * v, axis=0))


def eigen_decompose_1d(op: TruncatedOperator1D, compare: bool = True,
                       phase_tol: float = 1e-3) -> SpectralDecomposition1D:
    """Dense eigen-decomposition with a stability check at N - 50.

    An eigenpair is flagged reliable when its eigenvalue moves by less
    than 1e-5 (relative, absolute near zero) and its spectral norm by less
    than 1e-3 relative between the two truncations. ``norm_reliable`` keeps
    only the norm condition; eigenvalues of strongly non-normal levels lose
    digits to rounding long before their norms do.
    """
    w, v = _sorted_eig(op.matrix)
    norms = _norms(v)
    C = np.abs(w) * op.lam ** (-0.25)
    arg_ok = np.abs(np.angle(w) - op.theta / 4) < phase_tol
    reliable = np.zeros(len(w), dtype=bool)
    norm_ok = np.zeros(len(w), dtype=bool)
    cmp_N = None
    if compare and op.N - COMPARE_OFFSET >= 8:
        cmp_N = op.N - COMPARE_OFFSET
        small = build_hamiltonian_matrix(op.omega2, op.lam, op.theta, cmp_N, op.basis_frequency)
        w2, v2 = _sorted_eig(small.matrix)
        n2 = _norms(v2)
        k = cmp_N
        de = np.abs(w[:k] - w2) / np.maximum(np.abs(w[:k]), 1.0)
        dn = np.abs(norms[:k] - n2) / norms[:k]
        reliable[:k] = (de < EIG_TOL) & (dn < NORM_TOL)
        norm_ok[:k] = dn < NORM_TOL
        # both flags mark a prefix: stop at the first unstable level
        for flag in (reliable, norm_ok):
            bad = np.flatnonzero(~flag[:k])
            if len(bad):
                flag[bad[0]:] = False
    return SpectralDecomposition1D(op.N, op.lam, op.theta, w, v, C, norms, reliable,
                                   arg_ok, cmp_N, norm_ok)


def spectral_norms(dec: SpectralDecomposition1D) -> np.ndarray:
    """N_n = 1/|Σ_j v_j²| for unit-norm eigenvectors."""
    return _norms(dec.eigenvectors)


def ground_state_norm_exact(theta: float) -> float:
    """N₀ = cos(θ/2)^{-1/4}."""
    if not 0 <= theta < math.pi:
        raise InvalidParameterError("theta must lie in [0, pi)")
    return math.cos(theta / 2) ** -0.25


WKB_C = (math.sqrt(math.pi) * math.gamma(5 / 3) / math.gamma(7 / 6)) ** 0.25


def wkb_energy(n: int, lam: float = 1.0) -> float:
    """Semiclassical level ε_n = C⁶ n^{3/2} λ^{1/4}."""
    if n < 1:
        raise InvalidParameterError("wkb_energy needs n >= 1")
    return WKB_C**6 * n**1.5 * lam**0.25


@dataclass(frozen=True)
class NormFit:
    intercept: float
    slope: float
    residual: float
    n_points: int


def norm_growth_fit(norms, n_min: int = 10, reliable=None, n_max: int | None = None) -> NormFit:
    """Least-squares line ln N_n ≈ intercept + slope·n over reliable n >= n_min."""
    norms = np.asarray(norms, dtype=float)
    n = np.arange(len(norms))
    mask = n >= n_min
    if n_max is not None:
        mask &= n <= n_max
    if reliable is not None:
        mask &= np.asarray(reliable, dtype=bool)
    if mask.sum() < 10:
        raise InsufficientDataError("need at least 10 reliable norms beyond n_min")
    x = n[mask].astype(float)
    y = np.log(norms[mask])
    A = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.sqrt(np.mean((A @ coef - y) ** 2)))
    return NormFit(float(coef[0]), float(coef[1]), resid, int(mask.sum()))
