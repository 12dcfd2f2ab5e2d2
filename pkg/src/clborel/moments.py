"""Exact short-time moment series of the quartic complex Langevin flow.

For S = α x⁴ started from a point mass at the origin the moments admit
the asymptotic expansion

    m_p(t) ~ Σ_n c_{p,n} (-4α)^{(n-p/2)/2} (2t)^n / n!

with positive integers c_{p,n}, nonzero only for n >= p/2 and
n ≡ p/2 (mod 2). Two independent routes produce the c_{p,n}: an integer
recursion derived from the moment flow and repeated application of the
Langevin operator L = ∂² - S'∂ to x^p, followed by evaluation at x = 0.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, Mapping, Tuple

import numpy as np

from .actions import _require_even
from .errors import (
    InexactDivisionError,
    InsufficientDataError,
    InvalidParameterError,
    RecursionViolationError,
    SeriesOverflowError,
    StructuralMismatchError,
)


@dataclass(frozen=True)
class SeriesTable:
    """Exact coefficients c_{p,n} keyed by (p, n)."""

    p_max: int
    n_max: int
    entries: Mapping[Tuple[int, int], int] = field(repr=False)

    def __getitem__(self, key: Tuple[int, int]) -> int:
        return self.entries[key]

    def get(self, p: int, n: int, default: int = 0) -> int:
        return self.entries.get((p, n), default)

    def row(self, p: int) -> list:
        """Sorted [(n, c_{p,n}), ...] for one p."""
        return sorted((n, c) for (q, n), c in self.entries.items() if q == p)

    def __len__(self):
        return len(self.entries)


def _stored(p: int, n: int) -> bool:
    return n >= p // 2 and (n - p // 2) % 2 == 0


def _exact_div(num: int, den: int) -> int:
    q, r = divmod(num, den)
    if r:
        raise InexactDivisionError(f"{num} / {den} is not an integer")
    return q


# ---------------------------------------------------------------------------
# operator route

class IntegerPolynomial(dict):
    """Element of ℤ[α][x] stored as {(degree k, alpha power m): coefficient}."""

    @classmethod
    def monomial(cls, k: int, m: int = 0, coeff: int = 1) -> "IntegerPolynomial":
        return cls({(k, m): coeff})

    def constant_term(self) -> "IntegerPolynomial":
        return IntegerPolynomial({km: c for km, c in self.items() if km[0] == 0})


def apply_langevin_operator(poly: Mapping[Tuple[int, int], int]) -> IntegerPolynomial:
    """Apply L = ∂² - S'∂ with S = α x⁴ to an element of ℤ[α][x].

    L x^k = k(k-1) x^{k-2} - 4αk x^{k+2}.
    """
    out: Dict[Tuple[int, int], int] = {}
    for (k, m), c in poly.items():
        if not c or k == 0:
            continue
        if k >= 2:
            key = (k - 2, m)
            out[key] = out.get(key, 0) + k * (k - 1) * c
        key = (k + 2, m + 1)
        out[key] = out.get(key, 0) - 4 * k * c
    return IntegerPolynomial({km: c for km, c in out.items() if c})


def series_coefficients_via_operator(p: int, n_max: int) -> Dict[Tuple[int, int], int]:
    """c_{p,n} for n <= n_max from (Lⁿ x^p)(0).

    (Lⁿ x^p)(0) = c_{p,n} (-4α)^{(n-p/2)/2} 2ⁿ; anything else is a
    structural error.
    """
    p = _require_even(p)
    if n_max < p // 2:
        raise InvalidParameterError("n_max must be at least p/2")
    poly = IntegerPolynomial.monomial(p)
    out: Dict[Tuple[int, int], int] = {}
    if p == 0:
        out[(0, 0)] = 1
    for n in range(1, n_max + 1):
        poly = apply_langevin_operator(poly)
        # terms of degree k cannot reach x⁰ in the remaining n_max - n steps
        poly = IntegerPolynomial(
            {km: c for km, c in poly.items() if km[0] <= 2 * (n_max - n)}
        )
        const = poly.constant_term()
        if p == 0 or not _stored(p, n):
            if const:
                raise StructuralMismatchError(f"unexpected constant term at p={p}, n={n}")
            continue
        m = (n - p // 2) // 2
        if set(const) != {(0, m)}:
            raise StructuralMismatchError(
                f"constant term at p={p}, n={n} has alpha powers {sorted(const)}"
            )
        val = const[(0, m)]
        unit = (-4) ** m * 2**n
        c = _exact_div(val, unit)
        if c <= 0:
            raise StructuralMismatchError(f"sign pattern violated at p={p}, n={n}")
        out[(p, n)] = c
    return out


# ---------------------------------------------------------------------------
# recursion route

def _flow_rows(n_max: int, p_keep: int) -> Dict[Tuple[int, int], int]:
    """Rows p <= p_keep from the upward flow 2c_{p,n+1} = p(p-1)c_{p-2,n} + p c_{p+2,n}.

    The flow needs c_{p+2,n}, so columns are built for all p up to 2n.
    """
    col = {0: 1}
    out = {(0, 0): 1}
    for n in range(n_max):
        nxt = {}
        for p in range(2, 2 * (n + 1) + 1, 2):
            if not _stored(p, n + 1):
                continue
            num = p * (p - 1) * col.get(p - 2, 0) + p * col.get(p + 2, 0)
            nxt[p] = _exact_div(num, 2)
        col = nxt
        for p, c in col.items():
            if p <= p_keep:
                out[(p, n + 1)] = c
    return out


def series_coefficients_via_recursion(p_max: int, n_max: int) -> SeriesTable:
    """Fill c_{p,n} for p <= p_max, n <= n_max.

    Row p = 2 comes from the upward moment flow; rows p >= 4 from
    c_{p,p/2} = p(p-1)/2 c_{p-2,p/2-1} and
    c_{p,n} = -(p-3) c_{p-4,n} + 2/(p-2) c_{p-2,n+1}.
    """
    p_max = _require_even(p_max)
    if p_max < 2:
        raise InvalidParameterError("p_max must be at least 2")
    if n_max < 0:
        raise InvalidParameterError("n_max must be nonnegative")
    reach = n_max + p_max // 2
    seed = _flow_rows(reach, 2)
    rows: Dict[int, Dict[int, int]] = {0: {0: 1}, 2: {n: c for (p, n), c in seed.items() if p == 2}}
    for p in range(4, p_max + 1, 2):
        row = {}
        lim = reach - (p - 2) // 2
        prev, prev2 = rows[p - 2], rows[p - 4]
        row[p // 2] = _exact_div(p * (p - 1) * prev[p // 2 - 1], 2)
        for n in range(p // 2 + 2, lim + 1, 2):
            num = -(p - 3) * (p - 2) * prev2.get(n, 0) + 2 * prev[n + 1]
            row[n] = _exact_div(num, p - 2)
        rows[p] = row
    entries = {}
    for p, row in rows.items():
        for n, c in row.items():
            if n <= n_max and _stored(p, n):
                if c <= 0:
                    raise StructuralMismatchError(f"non-positive c_{{{p},{n}}}")
                entries[(p, n)] = c
    return SeriesTable(p_max, n_max, entries)


def series_row(p: int, n_terms: int) -> list:
    """The first `n_terms` nonzero coefficients of row p as [(n, c), ...]."""
    p = _require_even(p)
    n_max = p // 2 + 2 * (n_terms - 1)
    table = series_coefficients_via_recursion(max(p, 2), n_max)
    return table.row(p)[:n_terms]


# ---------------------------------------------------------------------------
# floating evaluation

def _log_term(c: int, n: int, m: int, log_abs_4a: float, log_2t: complex) -> complex:
    return math.log(c) - math.lgamma(n + 1) + m * log_abs_4a + n * log_2t


def moment_partial_sum(p: int, t: complex, N: int, alpha: complex, table: SeriesTable | None = None) -> complex:
    """Σ_{n<=N} c_{p,n} (-4α)^{(n-p/2)/2} (2t)ⁿ/n! with log-magnitude terms."""
    p = _require_even(p)
    if p == 0:
        return 1.0 + 0.0j
    t = complex(t)
    if t == 0:
        return 0.0j
    if table is None or table.n_max < N or table.p_max < p:
        table = series_coefficients_via_recursion(max(p, 2), N)
    four_a = -4.0 * complex(alpha)
    log_abs = math.log(abs(four_a))
    arg = cmath.phase(four_a)
    log_2t = cmath.log(2.0 * t)
    total = 0.0j
    for n, c in table.row(p):
        if n > N:
            break
        m = (n - p // 2) // 2
        lt = _log_term(c, n, m, log_abs, log_2t)
        if lt.real > 709.0:
            raise SeriesOverflowError(f"term n={n} exceeds the double range")
        total += cmath.exp(lt + 1j * m * arg)
    return total


@dataclass(frozen=True)
class GrowthFit:
    """log(c_{p,n}/n!) ≈ α_p (k+1/2) ln k - β_p k with n = p/2 - 2 + 2k."""

    alpha_p: float
    beta_p: float
    residual: float
    k_min: int
    k_max: int


def growth_fit(p: int, table: SeriesTable | Iterable[Tuple[int, int]], k_min: int = 10) -> GrowthFit:
    """Least-squares fit of the factorial growth law over k >= k_min."""
    p = _require_even(p)
    rows = table.row(p) if isinstance(table, SeriesTable) else list(table)
    ks, ys = [], []
    for n, c in rows:
        k2 = n - p // 2 + 2
        if k2 % 2:
            continue
        k = k2 // 2
        if k < k_min:
            continue
        ks.append(k)
        ys.append(math.log(c) - math.lgamma(n + 1))
    if len(ks) < 10:
        raise InsufficientDataError("growth_fit needs at least 10 points with k >= k_min")
    k = np.asarray(ks, dtype=float)
    A = np.column_stack([(k + 0.5) * np.log(k), -k])
    y = np.asarray(ys)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.sqrt(np.mean((A @ coef - y) ** 2)))
    return GrowthFit(float(coef[0]), float(coef[1]), resid, int(k.min()), int(k.max()))


def equilibrium_recursion(p: int, m2_inf: complex, alpha: complex) -> complex:
    """Stationary solution of 4α m_p = (p-3) m_{p-4}.

    p ≡ 0 (mod 4): Γ((p+1)/4)/Γ(1/4) α^{-p/4}.
    p ≡ 2 (mod 4): Γ((p+1)/4)/Γ(3/4) m₂(∞) α^{(2-p)/4}.
    """
    p = _require_even(p)
    la = cmath.log(complex(alpha))
    if p % 4 == 0:
        return cmath.exp(math.lgamma((p + 1) / 4) - math.lgamma(0.25) - 0.25 * p * la)
    r = math.exp(math.lgamma((p + 1) / 4) - math.lgamma(0.75))
    return r * complex(m2_inf) * cmath.exp(0.25 * (2 - p) * la)


# ---------------------------------------------------------------------------
# supertask isomorphism

def supertask_coefficients(n_max: int, a0: float = 1.0) -> np.ndarray:
    """a_0, ..., a_{n_max} with a_n = √(2n(2n+1)(2n+2)) for n >= 1."""
    n = np.arange(n_max + 1, dtype=float)
    a = np.sqrt(2 * n * (2 * n + 1) * (2 * n + 2))
    a[0] = a0
    return a


def _double_factorial(k: int) -> int:
    return math.prod(range(k, 0, -2)) if k > 0 else 1


def _optimal_partial_sum(p: int, t: float, alpha: float, table: SeriesTable) -> float:
    """Series summed up to its smallest term (plain sum inside the plateau)."""
    if p == 0:
        return 1.0
    if t == 0:
        return 0.0
    four_a = 4.0 * alpha
    total, best = 0.0, math.inf
    for n, c in table.row(p):
        m = (n - p // 2) // 2
        lt = math.log(c) - math.lgamma(n + 1) + m * math.log(four_a) + n * math.log(2 * t)
        if lt > best + 1e-12:
            break
        best = lt
        total += (-1) ** m * math.exp(lt)
    return total


def supertask_map(
    p: int,
    t: float,
    alpha: float,
    table: SeriesTable | None = None,
    *,
    a0: float = 1.0,
    moment: Callable[[int, float], float] | None = None,
    h: float = 1e-4,
    tol: float = 1e-6,
) -> float:
    """Map m_p(t) onto the supertask amplitude f_{p/2}(√(4α) t).

    f_{p/2}(s) = a₀ f₀ (4α)^{p/4} m_p(s/√(4α)) / √(2p (p-1)!!) with f₀ = 1.
    For p >= 4 the recursion f_n = a_{n-2}/a_{n-1} f_{n-2} - f'_{n-1}/a_{n-1}
    is checked with a central difference of step h in s.

    Parameters
    ----------
    moment : callable, optional
        m(p, t) -> float. Defaults to the short-time series summed to its
        smallest term, which is accurate inside the plateau region.

    Raises
    ------
    RecursionViolationError
        If the recursion residual exceeds `tol`.
    """
    p = _require_even(p)
    if p < 2:
        raise InvalidParameterError("supertask_map needs p >= 2")
    if alpha <= 0:
        raise InvalidParameterError("alpha must be positive")
    if moment is None:
        if table is None or table.p_max < p:
            table = series_coefficients_via_recursion(max(p, 2), 400)
        tab = table

        def moment(q, tt):
            return _optimal_partial_sum(q, tt, alpha, tab)

    root = math.sqrt(4.0 * alpha)

    def f(n, s):
        if n == 0:
            return 1.0
        q = 2 * n
        norm = math.sqrt(2 * q * _double_factorial(q - 1))
        return a0 * (4.0 * alpha) ** (q / 4) * moment(q, s / root) / norm

    s = root * t
    n = p // 2
    value = f(n, s)
    if n >= 2 and s > h:
        a = supertask_coefficients(n, a0)
        d = (f(n - 1, s + h) - f(n - 1, s - h)) / (2 * h)
        rhs = a[n - 2] / a[n - 1] * f(n - 2, s) - d / a[n - 1]
        if abs(rhs - value) > tol * max(1.0, abs(value)):
            raise RecursionViolationError(
                f"supertask recursion residual {abs(rhs - value):.3e} at n={n}, s={s}"
            )
    return value
