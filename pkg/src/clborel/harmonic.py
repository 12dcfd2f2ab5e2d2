"""Exact results for the quadratic action S = ω e^{iθ/2} z².

Moment flow, the Gaussian zero mode of the real Langevin operator, the
generating function of the spectral norms of the complex oscillator and
the Mehler kernel. Everything here is closed form and serves as ground
truth for the numerical modules.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

import numpy as np

from .actions import _require_even
from .errors import DegenerateParameterError, InstabilityWarning, InvalidParameterError

NORM_GUARD = 1e12


def _check_omega_theta(omega, theta, closed=False):
    if not (math.isfinite(omega) and omega > 0):
        raise InvalidParameterError("omega must be positive")
    hi_ok = theta <= math.pi if closed else theta < math.pi
    if not (0 <= theta and hi_ok):
        raise InvalidParameterError("theta must lie in [0, pi)")


def _flow_coefficients(p: int, w: complex, initial: Mapping[int, complex]):
    """m_p(t) = Σ_k a_k e^{-2wkt} as a dict k -> a_k."""
    terms = {0: 1.0 + 0j}
    for q in range(2, p + 1, 2):
        new = {q: complex(initial.get(q, 0.0))}
        for k, a in terms.items():
            c = q * (q - 1) * a / (2 * w * (q - k))
            new[k] = new.get(k, 0) + c
            new[q] -= c
        terms = new
    return terms


def harmonic_moment_flow(p: int, t, omega: float, theta: float = 0.0,
                         initial: Mapping[int, complex] | None = None):
    """m_p(t) for the quadratic action from the decoupled moment equations.

    ∂_t m_p = p(p-1) m_{p-2} - 2ωp m_p with ω → ω e^{iθ/2}, solved as a
    finite sum of exponentials (no quadrature).

    Parameters
    ----------
    initial : mapping p -> m_p(0), optional
        Missing entries are zero (point mass at the origin).
    """
    p = _require_even(p)
    _check_omega_theta(omega, theta, closed=True)
    w = omega * cmath.exp(0.5j * theta)
    terms = _flow_coefficients(p, w, initial or {})
    t_arr = np.asarray(t, dtype=float)
    out = np.zeros(t_arr.shape, dtype=complex)
    for k, a in terms.items():
        out = out + a * np.exp(-2 * w * k * t_arr)
    return complex(out) if out.ndim == 0 else out


def harmonic_equilibrium_moment(p: int, omega: float, theta: float = 0.0) -> complex:
    """m_p(∞) = p!/(p/2)! (4ω e^{iθ/2})^{-p/2}."""
    p = _require_even(p)
    _check_omega_theta(omega, theta, closed=True)
    w = omega * cmath.exp(0.5j * theta)
    return math.factorial(p) / math.factorial(p // 2) * (4 * w) ** (-(p // 2))


@dataclass(frozen=True)
class GaussianGroundState:
    """φ₀ = exp(-A₀x² - 2B₀xy - C₀y²), the integrable zero mode."""

    A0: float
    B0: float
    C0: float
    omega: float
    theta: float
    a_i: float
    lam_plus: float
    lam_minus: float

    @property
    def noise_alpha(self) -> float:
        """α with A_I = sinh²(α/4)."""
        return 4 * math.asinh(math.sqrt(self.a_i))

    @property
    def rotation(self) -> float:
        """θ/4; the wide axis (eigenvalue λ₊) points along (cos, -sin)(θ/4)."""
        return self.theta / 4

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.A0, self.B0], [self.B0, self.C0]])

    @property
    def normalization(self) -> float:
        """∫φ₀ dx dy = π/√(A₀C₀ - B₀²)."""
        return math.pi / math.sqrt(self.A0 * self.C0 - self.B0**2)

    @property
    def covariance(self) -> np.ndarray:
        return 0.5 * np.linalg.inv(self.matrix)

    def density(self, x, y):
        """Normalized density on broadcastable x, y."""
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        q = self.A0 * x * x + 2 * self.B0 * x * y + self.C0 * y * y
        return np.exp(-q) / self.normalization

    def moment(self, p: int) -> complex:
        """⟨(x+iy)^p⟩ under φ₀ (Gaussian, via the cumulant s = Σxx - Σyy + 2iΣxy)."""
        p = _require_even(p)
        S = self.covariance
        s = S[0, 0] - S[1, 1] + 2j * S[0, 1]
        return math.factorial(p) / (math.factorial(p // 2) * 2 ** (p // 2)) * s ** (p // 2)


def harmonic_ground_state(omega: float, theta: float, a_i: float) -> GaussianGroundState:
    """Real Gaussian zero mode for A_R = cosh²(α/4), A_I = sinh²(α/4).

    Raises
    ------
    DegenerateParameterError
        When cosh α - cos θ < 1e-12 (θ = 0 with A_I = 0).
    """
    _check_omega_theta(omega, theta)
    if not (math.isfinite(a_i) and a_i >= 0):
        raise InvalidParameterError("A_I must be nonnegative")
    al = 4 * math.asinh(math.sqrt(a_i))
    den = math.cosh(al) - math.cos(theta)
    if den < 1e-12:
        raise DegenerateParameterError("cosh(alpha) - cos(theta) vanishes; no normalizable zero mode")
    c2 = math.cos(theta / 2)
    ch2 = math.cosh(al / 2)
    A0 = 2 * omega * c2 * (2 * ch2 - 1 - math.cos(theta)) / den
    B0 = omega * (math.sin(theta / 2) + math.sin(1.5 * theta)) / den
    C0 = 2 * omega * c2 * (2 * ch2 + 1 + math.cos(theta)) / den
    lp = 2 * omega * c2 / (ch2 + c2)
    lm = 2 * omega * c2 / (ch2 - c2)
    return GaussianGroundState(A0, B0, C0, float(omega), float(theta), float(a_i), lp, lm)


def gaussian_fp_residual(A, B, C, omega: float, theta: float, a_i: float, E0, x, y):
    """(𝒫 - E₀) exp(-Ax² - 2Bxy - Cy²) evaluated pointwise.

    Accepts complex A, B, C and any real a_i (A_R = a_i + 1), so that the
    non-normalizable solutions can be checked as well.
    """
    x, y = np.asarray(x), np.asarray(y)
    a_r = a_i + 1.0
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    gx = 2 * A * x + 2 * B * y
    gy = 2 * B * x + 2 * C * y
    poly = (a_r * (gx * gx - 2 * A) + a_i * (gy * gy - 2 * C)
            - 2 * omega * (x * c - y * s) * gx - 2 * omega * (y * c + x * s) * gy
            + 4 * omega * c - E0)
    return poly * np.exp(-(A * x * x + 2 * B * x * y + C * y * y))


def stationarity_residual(gs: GaussianGroundState, half_width: float = 5.0, points: int = 101) -> float:
    """max |𝒫φ₀| on a square grid for the normalized density."""
    g = np.linspace(-half_width, half_width, points)
    X, Y = np.meshgrid(g, g, indexing="ij")
    r = gaussian_fp_residual(gs.A0, gs.B0, gs.C0, gs.omega, gs.theta, gs.a_i, 0.0, X, Y)
    return float(np.max(np.abs(r)) / gs.normalization)


def generating_functional_check(j: float, omega: float, theta: float, a_i: float) -> float:
    """|⟨e^{jz}⟩_{φ₀} - exp(e^{-iθ/2} j²/(4ω))|.

    The right side is ⟨e^{jx}⟩ under e^{-S}, whose second moment is
    1/(2ω e^{iθ/2}).
    """
    if j == 0:
        return 0.0
    gs = harmonic_ground_state(omega, theta, a_i)
    S = gs.covariance
    lhs = cmath.exp(0.5 * j * j * (S[0, 0] - S[1, 1] + 2j * S[0, 1]))
    rhs = cmath.exp(cmath.exp(-0.5j * theta) * j * j / (4 * omega))
    return abs(lhs - rhs)


def spectral_norm_generating_function(theta: float, n_max: int, exact_c2: Fraction | None = None):
    """Spectral norms N_0..N_{n_max} of the complex oscillator.

    Expands (c - 2u + cu²)^{-1/2} = Σ N_n u^n, c = cos(θ/2), via
    (n+1)h_{n+1} = (2n+1)h_n - n c² h_{n-1} for h_n = N_n c^{n+1/2}.
    With `exact_c2` (c² as a Fraction) the h_n are exact rationals.
    Warns InstabilityWarning when any of N_0..N_10 exceeds 1e12, which
    signals θ too close to π; exponential growth at large n is genuine.
    """
    _check_omega_theta(1.0, theta)
    if n_max < 0:
        raise InvalidParameterError("n_max must be nonnegative")
    if exact_c2 is not None:
        c2 = Fraction(exact_c2)
        if abs(float(c2) - math.cos(theta / 2) ** 2) > 1e-12:
            raise InvalidParameterError("exact_c2 does not match cos^2(theta/2)")
    else:
        c2 = math.cos(theta / 2) ** 2
    h = [Fraction(1) if exact_c2 is not None else 1.0]
    if n_max >= 1:
        h.append(h[0])
    for n in range(1, n_max):
        h.append(((2 * n + 1) * h[n] - n * c2 * h[n - 1]) / (n + 1))
    c = math.cos(theta / 2)
    out = np.array([float(hn) * c ** (-n - 0.5) for n, hn in enumerate(h)])
    if np.any(out[:11] > NORM_GUARD):
        warnings.warn("spectral norms exceed 1e12; theta is too close to pi", InstabilityWarning,
                      stacklevel=2)
    return out


def mehler_kernel(q, qp, t: float):
    """(2π sinh t)^{-1/2} exp(-(q² + q'²)/(2 tanh t) + qq'/sinh t)."""
    if not t > 0:
        raise InvalidParameterError("t must be positive")
    q, qp = np.asarray(q, dtype=float), np.asarray(qp, dtype=float)
    sh = math.sinh(t)
    val = np.exp(-(q * q + qp * qp) / (2 * math.tanh(t)) + q * qp / sh) / math.sqrt(2 * math.pi * sh)
    return float(val) if val.ndim == 0 else val


def mehler_spectral_sum(q: float, qp: float, t: float, n_terms: int = 30) -> float:
    """Σ_{n<n_terms} e^{-t(1/2+n)} h_n(q) h_n(q') with normalized Hermite functions."""
    from .spectral2d import hermite_functions

    H = hermite_functions(n_terms, np.array([q, qp], dtype=float))
    n = np.arange(n_terms)
    return float(np.sum(np.exp(-t * (0.5 + n)) * H[:, 0] * H[:, 1]))
