"""Borel sum b_p(s) and Borel transform M_p(t) of the moment series.

b_p(s) = Σ c_{p,n} (-4α)^{(n-p/2)/2} (2s)ⁿ / n!² is an entire function
whose Taylor terms cancel catastrophically for large s (terms near 1e76
at s = 11, α = 1/2), so it is evaluated by Horner's rule in s² with
decimal arithmetic at a precision chosen from the largest term. The
transform

    M_p(t) = e^{-i(θ/4)(1+p/2)} t^{-1} ∫₀^∞ e^{-s/(t e^{iθ/4})} b_p(s) ds

only ever integrates b_p along the real axis, with α = √λ/2 > 0.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Sequence

import numpy as np

from .actions import _require_even
from .errors import (
    GridTooCoarseError,
    InstabilityWarning,
    InvalidParameterError,
    TailTruncationWarning,
)
from .moments import series_row

DEFAULT_NTERMS = 500
DEFAULT_SMAX = 11.0
DEFAULT_STEP = 1e-3
SMALL_T = 0.05
# guard digits on top of the largest Horner term
_GUARD_DIGITS = 40
# a truncated Borel sum counts as stable while its last term is below this
_STABLE_TERM = 1e-10


@dataclass(frozen=True)
class BorelResult:
    """Sampled Borel sum and transform with their numerical metadata."""

    p: int
    theta: float
    lam: float
    s_grid: np.ndarray = field(repr=False)
    b_values: np.ndarray = field(repr=False)
    t_grid: np.ndarray = field(repr=False)
    M_values: np.ndarray = field(repr=False)
    N_terms: int
    s_max: float
    quadrature_step: float
    tail_closure: bool = True

    @property
    def metadata(self) -> Dict[str, object]:
        return {
            "p": self.p,
            "theta": self.theta,
            "lambda": self.lam,
            "N_terms": self.N_terms,
            "s_max": self.s_max,
            "quadrature_step": self.quadrature_step,
            "tail_closure": self.tail_closure,
        }


@dataclass(frozen=True)
class _Poly:
    """b_p(s) = s^{p/2} Σ_j d_j (s²)^j with exact rational d_j."""

    p: int
    coeffs: tuple  # Fractions
    log10_abs: np.ndarray  # log10 |d_j|

    def log10_term(self, j: int, s: float) -> float:
        if s == 0:
            return -math.inf
        return self.log10_abs[j] + (2 * j + self.p // 2) * math.log10(s)

    def max_log10_term(self, s: float) -> float:
        if s <= 0:
            return 0.0
        j = np.arange(len(self.coeffs))
        return float(np.max(self.log10_abs + (2 * j + self.p // 2) * math.log10(s)))

    def stable_limit(self, threshold: float = _STABLE_TERM) -> float:
        """Largest s at which the last retained term stays below `threshold`."""
        J = len(self.coeffs) - 1
        deg = 2 * J + self.p // 2
        return 10 ** ((math.log10(threshold) - self.log10_abs[J]) / deg)


@lru_cache(maxsize=32)
def _borel_poly(p: int, n_terms: int, alpha: float) -> _Poly:
    a = Fraction(alpha)
    row = series_row(p, n_terms)
    coeffs = []
    logs = []
    for j, (n, c) in enumerate(row):
        d = Fraction(c * 2**n, math.factorial(n) ** 2) * (-4 * a) ** j
        coeffs.append(d)
        logs.append(
            (math.log(c) + n * math.log(2) - 2 * math.lgamma(n + 1) + j * math.log(4 * alpha))
            / math.log(10)
        )
    return _Poly(p, tuple(coeffs), np.asarray(logs))


def _horner(poly: _Poly, s: np.ndarray, prec: int) -> np.ndarray:
    with localcontext() as ctx:
        ctx.prec = prec
        d = [Decimal(f.numerator) / Decimal(f.denominator) for f in poly.coeffs]
        x = np.array([Decimal(float(v)) ** 2 for v in s], dtype=object)
        acc = np.full(len(x), d[-1], dtype=object)
        for dj in reversed(d[:-1]):
            acc = acc * x + dj
        out = np.array([float(v) for v in acc])
    return out * s ** (poly.p // 2)


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not (alpha > 0 and math.isfinite(alpha)):
        raise InvalidParameterError("the Borel sum is defined here for real alpha > 0")
    return alpha


def borel_sum(p: int, s, N: int = DEFAULT_NTERMS, alpha: float = 0.5) -> np.ndarray | float:
    """b_p(s) from the first N nonzero coefficients.

    Parameters
    ----------
    p : even int
    s : float or array of float, s >= 0
    N : int
        Number of nonzero series terms.
    alpha : float
        Real positive quartic coupling.

    Warns
    -----
    InstabilityWarning
        When the last retained term is not negligible (relative 1e-8) at
        the largest requested s, i.e. N is too small for that s.
    """
    p = _require_even(p)
    alpha = _check_alpha(alpha)
    scalar = np.ndim(s) == 0
    s_arr = np.atleast_1d(np.asarray(s, dtype=float))
    if np.any(s_arr < 0) or not np.all(np.isfinite(s_arr)):
        raise InvalidParameterError("s must be finite and nonnegative")
    if p == 0:
        out = np.ones_like(s_arr)
        return float(out[0]) if scalar else out
    poly = _borel_poly(p, int(N), alpha)
    smax = float(s_arr.max())
    prec = int(max(poly.max_log10_term(smax), 0) + _GUARD_DIGITS)
    out = _horner(poly, s_arr, prec)
    if smax > 0:
        last = 10 ** poly.log10_term(len(poly.coeffs) - 1, smax)
        ref = max(abs(out[np.argmax(s_arr)]), 1e-300)
        if last > 1e-8 * ref:
            warnings.warn(
                f"Borel sum with {N} terms is not truncation stable at s={smax:g}",
                InstabilityWarning,
                stacklevel=2,
            )
    return float(out[0]) if scalar else out


@lru_cache(maxsize=16)
def _tabulate(p: int, alpha: float, s_max: float, step: float, n_terms: int):
    n = int(round(s_max / step))
    n += n % 2
    s = np.linspace(0.0, n * step, n + 1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", InstabilityWarning)
        b = borel_sum(p, s, n_terms, alpha)
    s.setflags(write=False)
    b.setflags(write=False)
    return s, b


def tabulate_borel_sum(p: int, lam: float = 1.0, s_max: float = DEFAULT_SMAX,
                       step: float = DEFAULT_STEP, n_terms: int = DEFAULT_NTERMS):
    """(s, b_p(s)) on a uniform grid, s_max capped at the stable range."""
    alpha = 0.5 * math.sqrt(lam)
    s_eff = effective_smax(p, lam, s_max, n_terms)
    return _tabulate(_require_even(p), alpha, s_eff, float(step), int(n_terms))


def effective_smax(p: int, lam: float, s_max: float, n_terms: int = DEFAULT_NTERMS) -> float:
    """min(s_max, largest s where the truncated Borel sum is stable)."""
    if p == 0:
        return float(s_max)
    poly = _borel_poly(_require_even(p), int(n_terms), _check_alpha(0.5 * math.sqrt(lam)))
    return float(min(s_max, poly.stable_limit()))


def _simpson_weights(n: int, h: float) -> np.ndarray:
    w = np.ones(n + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * h / 3.0


def _product_weights(h: float, tau: complex):
    """Weights of ∫₀^{2h} e^{-u/τ} P(u) du for the quadratic P through u = 0, h, 2h."""
    a = 1.0 / tau
    e = cmath.exp(-2 * h * a)
    i0 = (1 - e) / a
    i1 = (i0 - 2 * h * e) / a
    i2 = (2 * i1 - 4 * h * h * e) / a
    w0 = (i2 - 3 * h * i1 + 2 * h * h * i0) / (2 * h * h)
    w1 = -(i2 - 2 * h * i1) / (h * h)
    w2 = (i2 - h * i1) / (2 * h * h)
    return w0, w1, w2


def laplace_integral(s: np.ndarray, b: np.ndarray, tau: complex, tail_closure: bool = True):
    """∫₀^∞ e^{-s/τ} b(s) ds from samples on a uniform grid with an even panel count.

    Composite Simpson for |τ| >= 0.05. For smaller |τ| the exponential is
    integrated exactly against the panel's quadratic interpolant of b.
    Beyond the grid b is replaced by its (Simpson) mean over the upper half
    of the grid, which integrates to mean·τ e^{-s_max/τ}.

    Returns
    -------
    value : complex
    tail : complex
        Contribution of the closure term (0 if disabled).
    """
    tau = complex(tau)
    if tau.real <= 0:
        raise InvalidParameterError("Re tau must be positive")
    n = len(s) - 1
    h = s[1] - s[0]
    if abs(tau) >= SMALL_T:
        f = np.exp(-s / tau) * b
        val = complex(np.dot(_simpson_weights(n, h), f))
    else:
        w0, w1, w2 = _product_weights(h, tau)
        s0 = s[0:-1:2]
        scale = np.exp(-s0 / tau)
        panel = w0 * b[0:-1:2] + w1 * b[1::2] + w2 * b[2::2]
        val = complex(np.sum(scale * panel))
    tail = 0.0j
    if tail_closure:
        smax = s[-1]
        # Simpson mean over the upper half, so the closure converges with the grid
        k = n - 2 * (n // 4)
        mean_b = float(np.dot(_simpson_weights(n - k, h), b[k:]) / (smax - s[k]))
        tail = mean_b * tau * cmath.exp(-smax / tau)
    return val + tail, tail


def borel_transform(p: int, t, theta: float = 0.0, lam: float = 1.0,
                    s_max: float = DEFAULT_SMAX, step: float = DEFAULT_STEP,
                    n_terms: int = DEFAULT_NTERMS, tail_closure: bool = True):
    """M_p(t) for the quartic action with coupling λ and Wick angle θ.

    Parameters
    ----------
    p : even int
    t : float or array of float, t > 0
    theta, lam : float
    s_max, step : float
        Quadrature range and Simpson step in s. s_max is lowered to the
        stable range of the truncated Borel sum if necessary.
    n_terms : int
        Nonzero series terms in b_p.
    tail_closure : bool
        Add the mean-value estimate of the integral beyond s_max.

    Warns
    -----
    TailTruncationWarning
        When |e^{-s_max cos(θ/4)/t} b_p(s_max)| exceeds 1e-8 of the
        integral, so that the closure term matters.
    """
    p = _require_even(p)
    scalar = np.ndim(t) == 0
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t_arr <= 0):
        raise InvalidParameterError("t must be positive")
    if p == 0:
        out = np.ones(len(t_arr), dtype=complex)
        return complex(out[0]) if scalar else out
    s, b = tabulate_borel_sum(p, lam, s_max, step, n_terms)
    rot = cmath.exp(0.25j * theta)
    phase = cmath.exp(-0.25j * theta * (1 + p // 2))
    out = np.empty(len(t_arr), dtype=complex)
    worst = 0.0
    for i, tt in enumerate(t_arr):
        val, _ = laplace_integral(s, b, tt * rot, tail_closure)
        out[i] = phase * val / tt
        edge = abs(math.exp(-s[-1] * math.cos(theta / 4) / tt) * b[-1])
        worst = max(worst, edge / max(abs(val), 1e-300))
    if worst > 1e-8:
        warnings.warn(
            f"Borel integral truncated at s_max={s[-1]:g}; neglected tail up to "
            f"{worst:.1e} relative ({'closure applied' if tail_closure else 'no closure'})",
            TailTruncationWarning,
            stacklevel=2,
        )
    return complex(out[0]) if scalar else out


def borel_transform_rotated(p: int, tau: complex, lam: float = 1.0,
                            s_max: float = DEFAULT_SMAX, step: float = DEFAULT_STEP,
                            n_terms: int = DEFAULT_NTERMS, tail_closure: bool = True) -> complex:
    """M_p at θ = 0 continued to complex τ: τ^{-1} ∫ e^{-s/τ} b_p(s) ds along real s."""
    p = _require_even(p)
    if p == 0:
        return 1.0 + 0.0j
    s, b = tabulate_borel_sum(p, lam, s_max, step, n_terms)
    val, _ = laplace_integral(s, b, complex(tau), tail_closure)
    return val / complex(tau)


def borel_curve(p: int, t_grid: Sequence[float], theta: float = 0.0, lam: float = 1.0,
                s_max: float = DEFAULT_SMAX, step: float = DEFAULT_STEP,
                n_terms: int = DEFAULT_NTERMS, tail_closure: bool = True) -> BorelResult:
    """Tabulated b_p and M_p bundled with their metadata."""
    t_grid = np.asarray(t_grid, dtype=float)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TailTruncationWarning)
        M = borel_transform(p, t_grid, theta, lam, s_max, step, n_terms, tail_closure)
    if p == 0:
        s = np.array([0.0, s_max])
        b = np.ones(2)
    else:
        s, b = tabulate_borel_sum(p, lam, s_max, step, n_terms)
    return BorelResult(p, theta, lam, np.asarray(s), np.asarray(b), t_grid,
                       np.atleast_1d(M), n_terms, float(s[-1]), step, tail_closure)


def scaling_check(p: int, t: float, lam: float, **kw) -> float:
    """|M_p(t; α) - α^{-p/4} M_p(α^{1/2} t; α = 1)| at θ = 0."""
    p = _require_even(p)
    if p == 0:
        return 0.0
    alpha = 0.5 * math.sqrt(lam)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TailTruncationWarning)
        lhs = borel_transform(p, t, 0.0, lam, **kw)
        rhs = alpha ** (-p / 4) * borel_transform(p, math.sqrt(alpha) * t, 0.0, 4.0, **kw)
    return abs(lhs - rhs)


def _central_derivatives(y: np.ndarray, h: float, stride: int):
    """First three central derivatives at indices 2*stride .. len-2*stride-1."""
    k = stride
    H = h * k
    i = np.arange(2 * k, len(y) - 2 * k)
    d1 = (y[i + k] - y[i - k]) / (2 * H)
    d2 = (y[i + k] - 2 * y[i] + y[i - k]) / H**2
    d3 = (y[i + 2 * k] - 2 * y[i + k] + 2 * y[i - k] - y[i - 2 * k]) / (2 * H**3)
    return i, d1, d2, d3


def _moments_from_derivatives(m2, d1, d2, d3, alpha):
    m4 = (2.0 - d1) / (8 * alpha)
    m6 = (d2 + 96 * alpha * m2) / (128 * alpha**2)
    m8 = (960 * alpha - 576 * alpha * d1 - d3) / (3072 * alpha**3)
    return m4, m6, m8


def derived_higher_moments(m2, t_grid, alpha: complex, tol: float = 1e-3):
    """m₄, m₆, m₈ from a sampled m₂(t) through 4α m_p = (p-3)m_{p-4} - ∂_t m_{p-2}/(p-2).

    Parameters
    ----------
    m2 : array
        m₂ on a uniform grid.
    t_grid : array
    alpha : complex
    tol : float
        Largest allowed difference between step-h and step-2h estimates.

    Returns
    -------
    dict with keys "t", 4, 6, 8; two grid points are dropped at each end.

    Raises
    ------
    GridTooCoarseError
        If the two step sizes disagree by more than `tol`.
    """
    m2 = np.asarray(m2)
    t_grid = np.asarray(t_grid, dtype=float)
    if len(m2) != len(t_grid) or len(t_grid) < 9:
        raise InvalidParameterError("need at least 9 matching samples")
    h = np.diff(t_grid)
    if not np.allclose(h, h[0], rtol=1e-9, atol=0):
        raise InvalidParameterError("t grid must be uniform")
    h = float(h[0])
    alpha = complex(alpha)
    i1, a1, a2, a3 = _central_derivatives(m2, h, 1)
    i2, b1, b2, b3 = _central_derivatives(m2, h, 2)
    fine = _moments_from_derivatives(m2[i1], a1, a2, a3, alpha)
    coarse = _moments_from_derivatives(m2[i2], b1, b2, b3, alpha)
    sel = np.searchsorted(i1, i2)
    worst = max(float(np.max(np.abs(f[sel] - c))) for f, c in zip(fine, coarse))
    if worst > tol:
        raise GridTooCoarseError(f"step h vs 2h differ by {worst:.2e} > {tol:.1e}")
    cast = (lambda a: a.real.copy()) if alpha.imag == 0 and not np.iscomplexobj(m2) else (lambda a: a)
    return {"t": t_grid[i1], 4: cast(fine[0]), 6: cast(fine[1]), 8: cast(fine[2])}
