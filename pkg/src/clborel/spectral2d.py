"""Two-oscillator truncation of the real Fokker-Planck operator 𝒫.

𝒫 acts on densities of (x, y) and generates the Langevin evolution of
z = x + iy:

    𝒫 = A_R ∂_x² + A_I ∂_y² - ∂_x F_x - ∂_y F_y.

In the product basis of Hermite functions H_k(√ω x) H_l(√ω y) with
ω = √6 λ^{1/4} the stored matrix is -(2/ω)⟨kl|𝒫|mn⟩ (row index kN + l),
so its eigenvalues times ω/2 are the levels E_n with Re E_n >= 0 and
E_0 = 0. Matrices are kept sparse (81 nonzero diagonals); the dense form
is only built for full spectra at desk-scale N.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.special import gammaln

from .actions import QUADRATIC, QUARTIC, Action
from .errors import (
    BoundaryMassError,
    ConvergenceError,
    EigensolverError,
    GridWarning,
    InvalidParameterError,
    InvalidTruncationError,
    ShiftWarning,
)
from .actions import _require_even

DEFAULT_N = 50
DEFAULT_SHIFT = 1e-3
GRID_HALF_WIDTH = 3.5
GRID_POINTS = 141
DENSE_LIMIT = 4200  # largest N² handled by the dense eigensolver by default


def basis_frequency(lam: float) -> float:
    """ω = √6 λ^{1/4}."""
    return math.sqrt(6.0) * lam**0.25


@dataclass(frozen=True)
class TruncatedOperator2D:
    """Sparse N²×N² matrix of -(2/ω)𝒫 (or of -(2/ω)𝒫ᵀ)."""

    N: int
    matrix: sp.csr_matrix = field(repr=False)
    lam: float
    theta: float
    a_i: float
    omega: float
    transpose: bool = False

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    @staticmethod
    def index(k, l, N):
        """Zero-based row index i = kN + l."""
        return k * N + l


# ---------------------------------------------------------------------------
# closed-form matrix elements

def _d(a, b):
    return (a == b).astype(float)


def _ff(a, r):
    """√(a(a-1)...(a-r+1)), zero where a < r."""
    a = np.asarray(a, dtype=float)
    ok = a >= r
    safe = np.where(ok, a, r)
    return np.where(ok, np.exp(0.5 * (gammaln(safe + 1) - gammaln(safe - r + 1))), 0.0)


def _sq(a):
    return np.sqrt(np.maximum(np.asarray(a, dtype=float), 0.0))


def _X(k, l, m, n):
    dl = _d(l, n)
    t = dl * (_ff(k, 4) * _d(k, m + 4) + _ff(k, 2) * 2 * (k - 2) * _d(k, m + 2))
    t -= dl * (_ff(m, 4) * _d(m, k + 4) + _ff(m, 2) * 2 * (m - 2) * _d(m, k + 2))
    t += dl * (6 * _ff(k, 2) * _d(k, m + 2) + (6 * k + 3) * _d(k, m))
    L = _sq((l + 2) * (l + 1)) * _d(l + 2, n) + _ff(l, 2) * _d(l - 2, n) + (2 * l + 1) * _d(l, n)
    K = _sq((m + 2) * (m + 1)) * _d(k, m + 2) - _ff(m, 2) * _d(k, m - 2) + _d(k, m)
    return t - 3 * L * K


def _Y(k, l, m, n):
    A = (_sq(l) * _d(l - 1, n) - _sq(l + 1) * _d(l + 1, n)) * (
        _sq((m + 3) * (m + 2) * (m + 1)) * _d(m + 3, k)
        + 3 * _sq(m + 1) * (m + 1) * _d(m + 1, k)
        + 3 * _sq(m) * m * _d(m - 1, k)
        + _ff(m, 3) * _d(m - 3, k)
    )
    B = 3 * (_sq(k) * _d(k - 1, m) + _sq(k + 1) * _d(k + 1, m)) * (
        _sq((n + 3) * (n + 2) * (n + 1)) * _d(l, n + 3)
        + _sq(n + 1) * (n + 3) * _d(l, n + 1)
        - _sq(n) * (n - 2) * _d(l, n - 1)
        - _ff(n, 3) * _d(l, n - 3)
    )
    return A - B


def _fp_elements(k, l, m, n, a_i, theta, transpose):
    a_r = a_i + 1.0
    c = math.cos(theta / 2)
    s = math.sin(theta / 2)
    dkm, dln = _d(k, m), _d(l, n)
    kk = _ff(k, 2) * _d(k - 2, m) + _ff(m, 2) * _d(m - 2, k)
    ll = _ff(l, 2) * _d(l - 2, n) + _ff(n, 2) * _d(n - 2, l)
    xy = _X(k, l, m, n) - _X(l, k, n, m)
    yy = _Y(k, l, m, n) + _Y(l, k, n, m)
    if transpose:
        v = (a_r * (2 * k + 1) + a_i * (2 * l + 1)) * dkm * dln
        v -= a_r * kk * dln
        v -= a_i * ll * dkm
        v -= c / 6 * xy + s / 6 * yy
        return v
    v = ((a_r - 2 * c) * (2 * k + 1) + (a_i + 2 * c) * (2 * l + 1)) * dkm * dln
    v -= (a_r + 2 * c) * kk * dln
    v += (-a_i + 2 * c) * ll * dkm
    v += 4 * s * (_sq(k) * _d(k - 1, m) + _sq(m) * _d(m - 1, k)) * (
        _sq(l) * _d(l - 1, n) + _sq(n) * _d(n - 1, l)
    )
    v += c / 6 * xy + s / 6 * yy
    return v


def _check(lam, theta, a_i, N, n_min=6):
    if N < n_min:
        raise InvalidTruncationError(f"N must be at least {n_min}")
    if not lam > 0:
        raise InvalidParameterError("lambda must be positive")
    if not 0 <= theta < math.pi:
        raise InvalidParameterError("theta must lie in [0, pi)")
    if not a_i >= 0:
        raise InvalidParameterError("A_I must be nonnegative")


def _assemble(lam, theta, a_i, N, transpose):
    N = int(N)
    _check(lam, theta, a_i, N)
    k, l = np.divmod(np.arange(N * N), N)
    rows, cols, vals = [], [], []
    for dk in range(-4, 5):
        for dl in range(-4, 5):
            m, n = k + dk, l + dl
            ok = (m >= 0) & (m < N) & (n >= 0) & (n < N)
            if not ok.any():
                continue
            kk, ll, mm, nn = k[ok], l[ok], m[ok], n[ok]
            v = _fp_elements(kk, ll, mm, nn, a_i, theta, transpose)
            nz = v != 0
            rows.append(kk[nz] * N + ll[nz])
            cols.append(mm[nz] * N + nn[nz])
            vals.append(v[nz])
    M = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(N * N, N * N)
    )
    M.sort_indices()
    return TruncatedOperator2D(N, M, float(lam), float(theta), float(a_i), basis_frequency(lam), transpose)


def build_fp_matrix(lam: float, theta: float, a_i: float, N: int = DEFAULT_N) -> TruncatedOperator2D:
    """-(2/ω)⟨kl|𝒫|mn⟩ from the closed-form oscillator matrix elements."""
    return _assemble(lam, theta, a_i, N, False)


def build_fp_transpose_matrix(lam: float, theta: float, a_i: float, N: int = DEFAULT_N) -> TruncatedOperator2D:
    """-(2/ω)⟨kl|𝒫ᵀ|mn⟩ built directly from its own closed form."""
    return _assemble(lam, theta, a_i, N, True)


def build_fp_matrix_operator(action: Action, a_i: float, N: int, omega: float | None = None,
                             pad: int = 6) -> TruncatedOperator2D:
    """Second construction of -(2/ω)𝒫 from ladder-operator products.

    -𝒫 = A_R p_x² + A_I p_y² + i p_x F_x + i p_y F_y with p = -i∂, x and y
    built from a basis padded by `pad` states and truncated afterwards.
    Works for quartic and quadratic actions.
    """
    if omega is None:
        omega = basis_frequency(action.lam) if action.kind == QUARTIC else 2.0 * action.omega
    K = int(N) + pad
    a = sp.diags(np.sqrt(np.arange(1, K, dtype=float)), 1, format="csr")
    ad = a.T.tocsr()
    eye = sp.identity(K, format="csr")
    x1 = (a + ad) / math.sqrt(2 * omega)
    p1 = 1j * (ad - a) * math.sqrt(omega / 2)
    x, y = sp.kron(x1, eye, "csr"), sp.kron(eye, x1, "csr")
    px, py = sp.kron(p1, eye, "csr"), sp.kron(eye, p1, "csr")
    c, s = math.cos(action.theta / 2), math.sin(action.theta / 2)
    if action.kind == QUARTIC:
        g = 2.0 * math.sqrt(action.lam)
        u = x @ x @ x - 3 * x @ y @ y
        v = 3 * x @ x @ y - y @ y @ y
    else:
        g = 2.0 * action.omega
        u, v = x, y
    fx = -g * (c * u - s * v)
    fy = -g * (s * u + c * v)
    a_r = a_i + 1.0
    mP = a_r * px @ px + a_i * py @ py + 1j * px @ fx + 1j * py @ fy
    M = (2.0 / omega) * mP
    idx = np.array([k * K + l for k in range(N) for l in range(N)])
    M = M.tocsr()[idx][:, idx]
    if abs(M.imag).max() > 1e-9 * max(abs(M).max(), 1.0):
        raise EigensolverError("operator construction produced a non-real matrix")
    lam = action.lam if action.kind == QUARTIC else action.omega
    return TruncatedOperator2D(int(N), sp.csr_matrix(M.real), float(lam), action.theta,
                               float(a_i), float(omega), False)


# ---------------------------------------------------------------------------
# spectra

def _order(w):
    return w[np.lexsort((w.imag, np.round(np.abs(w), 10)))]


def spectrum_2d(op: TruncatedOperator2D, n_low: int = 10, method: str = "auto") -> np.ndarray:
    """Lowest `n_low` levels of -𝒫 by modulus, in physical units.

    method : {"auto", "dense", "sparse"}
        "dense" diagonalizes the full matrix; "sparse" uses shift-invert
        Arnoldi around zero. "auto" picks dense when N² <= 4200.
    """
    if method == "auto":
        method = "dense" if op.N**2 <= DENSE_LIMIT else "sparse"
    if method not in ("dense", "sparse"):
        raise InvalidParameterError(f"unknown method {method!r}")
    scale = op.omega / 2
    try:
        if method == "dense":
            w = scipy.linalg.eigvals(op.dense(), check_finite=False)
        elif method == "sparse":
            k = min(max(n_low + 4, 8), op.N**2 - 2)
            w = spla.eigs(op.matrix.tocsc(), k=k, sigma=0.0, return_eigenvectors=False)
    except (np.linalg.LinAlgError, spla.ArpackError, ValueError) as exc:
        raise EigensolverError(f"eigensolver failed for N={op.N}, lambda={op.lam}, "
                               f"theta={op.theta}, A_I={op.a_i}: {exc}") from exc
    return _order(np.asarray(w) * scale)[:n_low]


def full_spectrum_2d(op: TruncatedOperator2D) -> np.ndarray:
    """All N² levels, sorted by modulus."""
    return spectrum_2d(op, op.N**2, "dense")


def conjugation_defect(levels: np.ndarray) -> float:
    """Largest distance from a level's conjugate to the nearest level."""
    levels = np.asarray(levels)
    if len(levels) == 0:
        return 0.0
    d = np.abs(np.conj(levels)[:, None] - levels[None, :]).min(axis=1)
    return float(d.max())


# ---------------------------------------------------------------------------
# ground state

@dataclass(frozen=True)
class GroundState2D:
    """Zero mode of -(2/ω)𝒫 from inverse iteration."""

    N: int
    lam: float
    theta: float
    a_i: float
    omega: float
    v: np.ndarray = field(repr=False)
    E0: complex
    residual: float
    iterations: int

    @property
    def coefficients(self) -> np.ndarray:
        """v reshaped to (k, l)."""
        return self.v.reshape(self.N, self.N)


def ground_state_vector(op: TruncatedOperator2D, shift: complex = DEFAULT_SHIFT, tol: float = 1e-10,
                        max_iter: int = 500, levels: Sequence[complex] | None = None) -> GroundState2D:
    """Inverse iteration (M - shift)^{-1} until ‖Mv - μv‖ < tol for unit v.

    The (0,0) component is made positive. If the lowest levels are passed
    in `levels` (physical units) a ShiftWarning is issued when the shift
    is not clearly closer to E₀ than to E₁.

    Raises
    ------
    ConvergenceError
        After `max_iter` iterations without meeting `tol`.
    """
    M = op.matrix
    n = M.shape[0]
    sigma = complex(shift)
    scale = op.omega / 2
    if levels is not None and len(levels) >= 2:
        e = np.asarray(levels) / scale
        if abs(e[1] - sigma) < 2 * abs(e[0] - sigma):
            warnings.warn("inverse-iteration shift is close to the first excited level", ShiftWarning,
                          stacklevel=2)
    real = sigma.imag == 0
    A = (M - (sigma.real if real else sigma) * sp.identity(n, format="csr")).tocsc()
    try:
        lu = spla.splu(A)
    except RuntimeError as exc:
        raise ConvergenceError(f"shifted matrix is singular: {exc}") from exc
    v = np.ones(n) if real else np.ones(n, dtype=complex)
    k, l = np.divmod(np.arange(n), op.N)
    v[(k + l) % 2 == 1] = 0.0
    v /= np.linalg.norm(v)
    res = math.inf
    mu = 0.0
    for it in range(1, max_iter + 1):
        w = lu.solve(v)
        w /= np.linalg.norm(w)
        Mw = M @ w
        mu = np.vdot(w, Mw)
        res = float(np.linalg.norm(Mw - mu * w))
        v = w
        if res < tol:
            break
    else:
        raise ConvergenceError(f"inverse iteration stalled at residual {res:.2e} after {max_iter} steps")
    v = np.real_if_close(v, tol=1e6)
    if v[0].real < 0:
        v = -v
    mu_phys = complex(mu) * scale
    if levels is None and abs(mu_phys) > 0.1:
        warnings.warn(f"converged level {mu_phys:.4f} is not near zero; shift may sit near an "
                      "excited level", ShiftWarning, stacklevel=2)
    return GroundState2D(op.N, op.lam, op.theta, op.a_i, op.omega, np.asarray(v), mu_phys, res, it)


def hermite_functions(n: int, u: np.ndarray) -> np.ndarray:
    """Normalized Hermite functions h_0..h_{n-1} at u via the stable recurrence."""
    u = np.asarray(u, dtype=float)
    H = np.zeros((n, len(u)))
    H[0] = np.pi**-0.25 * np.exp(-0.5 * u * u)
    if n > 1:
        H[1] = math.sqrt(2.0) * u * H[0]
    for k in range(2, n):
        H[k] = math.sqrt(2.0 / k) * u * H[k - 1] - math.sqrt((k - 1) / k) * H[k - 2]
    return H


@dataclass(frozen=True)
class GroundStateGrid:
    """φ₀ sampled on a rectangular grid with its self-tests."""

    x: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)
    phi: np.ndarray = field(repr=False)  # phi[i, j] = φ₀(x_i, y_j)
    min_value: float
    peak_value: float
    norm_integral: float  # ∫φ₀² on the grid
    norm_expected: float  # Σv²/ω
    boundary_ratio: float
    peaks: tuple

    @property
    def norm_error(self) -> float:
        return abs(self.norm_integral - self.norm_expected) / self.norm_expected


def default_grid(lam: float = 1.0, points: int = GRID_POINTS, half_width: float = GRID_HALF_WIDTH):
    """[-3.5, 3.5] scaled by λ^{-1/8}."""
    h = half_width * lam ** (-0.125)
    g = np.linspace(-h, h, points)
    return g, g.copy()


def _local_maxima(phi):
    core = phi[1:-1, 1:-1]
    mask = np.ones_like(core, dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di or dj:
                mask &= core >= phi[1 + di:phi.shape[0] - 1 + di, 1 + dj:phi.shape[1] - 1 + dj]
    mask &= core > 0.5 * phi.max()
    i, j = np.nonzero(mask)
    return i + 1, j + 1


def ground_state_function(gs: GroundState2D, grid=None) -> GroundStateGrid:
    """φ₀(x, y) = Σ v_kl h_k(√ω x) h_l(√ω y) on a grid.

    Warns GridWarning when the boundary values exceed 1e-6 of the peak.
    """
    x, y = default_grid(gs.lam) if grid is None else (np.asarray(grid[0]), np.asarray(grid[1]))
    r = math.sqrt(gs.omega)
    hx = hermite_functions(gs.N, r * x)
    hy = hermite_functions(gs.N, r * y)
    phi = hx.T @ gs.coefficients.real @ hy
    dx, dy = x[1] - x[0], y[1] - y[0]
    peak = float(np.max(np.abs(phi)))
    edge = max(np.abs(phi[0]).max(), np.abs(phi[-1]).max(), np.abs(phi[:, 0]).max(), np.abs(phi[:, -1]).max())
    ratio = float(edge / peak)
    if ratio > 1e-6:
        warnings.warn(f"phi0 at the grid boundary reaches {ratio:.1e} of its peak", GridWarning, stacklevel=2)
    i, j = _local_maxima(phi)
    peaks = tuple((float(x[a]), float(y[b])) for a, b in zip(i, j))
    return GroundStateGrid(
        x, y, phi, float(phi.min()), peak,
        float(np.sum(phi**2) * dx * dy), float(np.sum(np.abs(gs.v) ** 2) / gs.omega),
        ratio, peaks,
    )


def _moment_on_grid(gs: GroundState2D, p: int, x, y):
    r = math.sqrt(gs.omega)
    phi = hermite_functions(gs.N, r * x).T @ gs.coefficients.real @ hermite_functions(gs.N, r * y)
    z = x[:, None] + 1j * y[None, :]
    return complex(np.sum(z**p * phi) / np.sum(phi)), phi


def boundary_mass(phi: np.ndarray) -> float:
    """Share of ∫φ₀ carried by the outermost ring of grid points.

    Serves as the estimate of the mass lost outside the grid; the signed
    sum keeps truncation ripples from inflating it.
    """
    inner = phi[1:-1, 1:-1].sum()
    total = phi.sum()
    return float(abs(total - inner) / abs(total))


def ground_state_moments(gs: GroundState2D, p: int, grid=None, max_boundary_mass: float = 1e-4):
    """⟨z^p⟩ = ∫(x+iy)^p φ₀ / ∫φ₀ with a grid-refinement error estimate.

    Returns
    -------
    value : complex
    grid_error : float
        Change of the value when the grid spacing is halved.

    Raises
    ------
    BoundaryMassError
        If the boundary-ring estimate of the excluded mass exceeds
        `max_boundary_mass`.
    """
    p = _require_even(p)
    x, y = default_grid(gs.lam) if grid is None else (np.asarray(grid[0]), np.asarray(grid[1]))
    val, phi = _moment_on_grid(gs, p, x, y)
    bm = boundary_mass(phi)
    if bm > max_boundary_mass:
        raise BoundaryMassError(f"boundary mass {bm:.2e} exceeds {max_boundary_mass:.0e}")
    xf = np.linspace(x[0], x[-1], 2 * len(x) - 1)
    yf = np.linspace(y[0], y[-1], 2 * len(y) - 1)
    fine, _ = _moment_on_grid(gs, p, xf, yf)
    return val, float(abs(fine - val))


def principal_axis_angle(grid: GroundStateGrid) -> float:
    """Angle in (-π/2, π/2] of the major axis of the second-moment tensor of φ₀."""
    X, Y = np.meshgrid(grid.x, grid.y, indexing="ij")
    w = grid.phi
    sxx = np.sum(w * X * X)
    syy = np.sum(w * Y * Y)
    sxy = np.sum(w * X * Y)
    return 0.5 * math.atan2(2 * sxy, sxx - syy)


def converged_ground_state(lam: float, theta: float, a_i: float, sizes: Sequence[int] = (50, 100, 150),
                           e0_tol: float = 0.02) -> GroundState2D:
    """Ground state at the first truncation in `sizes` whose |E₀| < e0_tol.

    Smaller A_I spreads φ₀ further and needs more oscillator states; the
    size of the zero-mode residual |E₀| is the convergence signal.

    Raises
    ------
    ConvergenceError
        If no truncation in `sizes` converges.
    """
    last = None
    for N in sizes:
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", ShiftWarning)
                gs = ground_state_vector(build_fp_matrix(lam, theta, a_i, N))
        except ConvergenceError as exc:
            last = str(exc)
            continue
        if abs(gs.E0) < e0_tol:
            return gs
        last = f"|E0| = {abs(gs.E0):.3g} at N = {N}"
    raise ConvergenceError(f"no truncation in {tuple(sizes)} reached |E0| < {e0_tol}: {last}")
