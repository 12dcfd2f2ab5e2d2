"""Quartic and quadratic complex actions.

An action is S(z) = c e^{iθ/2} z^d with d = 4 (quartic, c = √λ/2) or
d = 2 (quadratic, c = ω). Drifts, real force components, the
Fokker-Planck potential and the exact moments of e^{-S} all derive from
the value object defined here.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError

QUARTIC = "quartic"
QUADRATIC = "quadratic"


@dataclass(frozen=True)
class Action:
    """Immutable complex action.

    Parameters
    ----------
    kind : {"quartic", "quadratic"}
    coupling : float
        λ for the quartic action, ω for the quadratic one. Must be > 0.
    theta : float
        Wick angle in radians, 0 <= theta <= π. The closed interval is
        accepted so that boundary cases can be probed; equilibrium
        quantities require theta < π.
    """

    kind: str
    coupling: float
    theta: float = 0.0

    def __post_init__(self):
        if self.kind not in (QUARTIC, QUADRATIC):
            raise InvalidParameterError(f"unknown action kind {self.kind!r}")
        if not (math.isfinite(self.coupling) and self.coupling > 0):
            raise InvalidParameterError("coupling must be positive and finite")
        if not (math.isfinite(self.theta) and 0.0 <= self.theta <= math.pi):
            raise InvalidParameterError("theta must lie in [0, pi]")

    @classmethod
    def quartic(cls, lam: float, theta: float = 0.0) -> "Action":
        return cls(QUARTIC, float(lam), float(theta))

    @classmethod
    def quadratic(cls, omega: float, theta: float = 0.0) -> "Action":
        return cls(QUADRATIC, float(omega), float(theta))

    @property
    def lam(self) -> float:
        if self.kind != QUARTIC:
            raise InvalidParameterError("lambda is defined for quartic actions only")
        return self.coupling

    @property
    def omega(self) -> float:
        if self.kind != QUADRATIC:
            raise InvalidParameterError("omega is defined for quadratic actions only")
        return self.coupling

    @property
    def phase(self) -> complex:
        """e^{iθ/2}."""
        return cmath.exp(0.5j * self.theta)

    @property
    def alpha(self) -> complex:
        """Complex coupling α = (√λ/2) e^{iθ/2} of S = α z⁴."""
        return 0.5 * math.sqrt(self.lam) * self.phase

    @property
    def degree(self) -> int:
        return 4 if self.kind == QUARTIC else 2

    @property
    def drift_coefficient(self) -> complex:
        """Coefficient κ in -S'(z) = κ z^{d-1}."""
        if self.kind == QUARTIC:
            return -2.0 * math.sqrt(self.coupling) * self.phase
        return -2.0 * self.coupling * self.phase


@dataclass(frozen=True)
class NoiseConfig:
    """Imaginary-noise strength A_I; A_R = A_I + 1 is always derived."""

    a_i: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.a_i) and self.a_i >= 0):
            raise InvalidParameterError("A_I must be nonnegative and finite")

    @property
    def a_r(self) -> float:
        return self.a_i + 1.0


def drift(action: Action, z):
    """Return -S'(z).

    Works on Python complex scalars and on numpy arrays.
    """
    kappa = action.drift_coefficient
    if action.kind == QUARTIC:
        return kappa * z * z * z
    return kappa * z


def force_components(action: Action, x, y):
    """Real forces (F_x, F_y) on the complexified plane.

    Uses the explicit real polynomials rather than complex arithmetic so
    that the two routes can be checked against each other.
    """
    c = math.cos(0.5 * action.theta)
    s = math.sin(0.5 * action.theta)
    if action.kind == QUARTIC:
        g = 2.0 * math.sqrt(action.coupling)
        u = x**3 - 3.0 * x * y**2
        v = 3.0 * x**2 * y - y**3
    else:
        g = 2.0 * action.coupling
        u = x
        v = y
    fx = -g * (c * u - s * v)
    fy = -g * (s * u + c * v)
    return fx, fy


def fokker_planck_potential(action: Action, q):
    """V_FP = S'(q)²/4 - S''(q)/2."""
    ph = action.phase
    if action.kind == QUARTIC:
        lam = action.coupling
        return lam * ph * ph * q**6 - 3.0 * math.sqrt(lam) * ph * q**2
    om = action.coupling
    return om * om * ph * ph * q**2 - om * ph


def _require_even(p: int) -> int:
    if isinstance(p, (bool, np.bool_)) or int(p) != p:
        raise InvalidParameterError("moment order must be an integer")
    p = int(p)
    if p < 0 or p % 2:
        raise InvalidParameterError("only even nonnegative moments are represented")
    return p


def boltzmann_moment(action: Action, p: int) -> complex:
    """Exact moment ⟨x^p⟩ of the complex weight e^{-S}.

    Quartic: Γ((p+1)/4)/Γ(1/4) α^{-p/4}. Quadratic: p!/(p/2)! (4ω e^{iθ/2})^{-p/2}.
    Principal branches throughout.
    """
    p = _require_even(p)
    if action.theta >= math.pi:
        raise InvalidParameterError("equilibrium moments require theta < pi")
    if p == 0:
        return 1.0 + 0.0j
    if action.kind == QUARTIC:
        logr = math.lgamma((p + 1) / 4.0) - math.lgamma(0.25)
        return cmath.exp(logr - 0.25 * p * cmath.log(action.alpha))
    w = 4.0 * action.coupling * action.phase
    logr = math.lgamma(p + 1) - math.lgamma(p // 2 + 1)
    return cmath.exp(logr - (p // 2) * cmath.log(w))
