"""Complex Langevin ensembles with the adaptive Euler-Maruyama step.

z = x + iy evolves as

    x += F_x Δt + √(2 A_R Δt) ξ,   y += F_y Δt + √(2 A_I Δt) η,
    Δt = δ / (1 + |F_x| + |F_y|),

with F = -S'(z) split into real and imaginary parts. Trajectories start
at the origin and are recorded the first time each checkpoint is reached.

Two interchangeable backends integrate blocks of trajectories: a compiled
extension (``clborel._kernel``) and a vectorized numpy path. Both draw
from the same per-trajectory streams and evaluate the same expressions,
so they return identical bits. Set ``CLBOREL_BACKEND=python`` to force
the numpy path.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import curve_fit

from . import _rng
from .actions import QUARTIC, Action, NoiseConfig
from .errors import (
    AllDivergedError,
    ConvergenceError,
    ExcessiveDivergenceError,
    InsufficientDataError,
    InvalidParameterError,
    NonFiniteStateError,
)

log = logging.getLogger(__name__)

try:
    from . import _kernel
except ImportError:  # extension not built
    _kernel = None

LIMIT = 1e150
DEFAULT_DELTA = 1e-5
DEFAULT_BLOCK = 4096
MAX_EXCLUDED_FRACTION = 1e-3


def available_backends() -> tuple:
    return ("compiled", "python") if _kernel is not None else ("python",)


def _default_backend() -> str:
    env = os.environ.get("CLBOREL_BACKEND", "").strip().lower()
    if env in ("python", "numpy"):
        return "python"
    if env == "compiled":
        if _kernel is None:
            raise ImportError("CLBOREL_BACKEND=compiled but the extension is not built")
        return "compiled"
    return "compiled" if _kernel is not None else "python"


BACKEND = _default_backend()


# ---------------------------------------------------------------------------
# configuration and single steps

@dataclass(frozen=True)
class SimulationConfig:
    """Everything that determines an ensemble bit for bit."""

    action: Action
    noise: NoiseConfig
    checkpoints: tuple
    n_trajectories: int
    delta: float = DEFAULT_DELTA
    master_seed: int = 0

    def __post_init__(self):
        ck = tuple(float(c) for c in self.checkpoints)
        if not ck:
            raise InvalidParameterError("at least one checkpoint is required")
        if any(not math.isfinite(c) or c < 0 for c in ck):
            raise InvalidParameterError("checkpoints must be finite and nonnegative")
        if any(b <= a for a, b in zip(ck, ck[1:])):
            raise InvalidParameterError("checkpoints must be strictly increasing")
        object.__setattr__(self, "checkpoints", ck)
        if int(self.n_trajectories) != self.n_trajectories or self.n_trajectories < 1:
            raise InvalidParameterError("n_trajectories must be a positive integer")
        if not (math.isfinite(self.delta) and self.delta > 0):
            raise InvalidParameterError("delta must be positive")
        if not 0 <= int(self.master_seed) <= _rng.MASK:
            raise InvalidParameterError("master_seed must be a 64-bit unsigned integer")

    @property
    def kernel_args(self):
        k = self.action.drift_coefficient
        return k.real, k.imag, self.action.kind == QUARTIC, self.noise.a_r, self.noise.a_i, self.delta


@dataclass(frozen=True)
class TrajectoryState:
    """Position, Langevin time and the trajectory's random stream."""

    x: float
    y: float
    t: float
    rng: _rng.ScalarStream = field(repr=False, compare=False)

    @classmethod
    def origin(cls, master_seed: int = 0, trajectory_index: int = 0) -> "TrajectoryState":
        return cls(0.0, 0.0, 0.0, _rng.ScalarStream(_rng.seed_states(master_seed, trajectory_index, 1)[0]))


def step(state: TrajectoryState, action: Action, noise: NoiseConfig, delta: float,
         deterministic: bool = False) -> TrajectoryState:
    """One adaptive step; the input state is left untouched.

    With ``deterministic=True`` both noise terms are dropped.

    Raises
    ------
    NonFiniteStateError
        If the new position is non-finite or beyond 1e150.
    """
    k = action.drift_coefficient
    cr, ci = k.real, k.imag
    x, y = state.x, state.y
    x2, y2 = x * x, y * y
    if action.kind == QUARTIC:
        u = x * (x2 - 3.0 * y2)
        v = y * (3.0 * x2 - y2)
    else:
        u, v = x, y
    fx = cr * u - ci * v
    fy = cr * v + ci * u
    dt = delta / (1.0 + abs(fx) + abs(fy))
    rng = _rng.ScalarStream(state.rng.s)
    if deterministic:
        x = x + fx * dt
        y = y + fy * dt
    else:
        sdt = math.sqrt(dt)
        x = x + (fx * dt + (math.sqrt(2.0 * noise.a_r) * sdt) * rng.normal())
        sy = math.sqrt(2.0 * noise.a_i)
        if sy != 0.0:
            y = y + (fy * dt + (sy * sdt) * rng.normal())
        else:
            y = y + fy * dt
    if not (abs(x) <= LIMIT and abs(y) <= LIMIT):
        raise NonFiniteStateError("trajectory left the finite range", None)
    return TrajectoryState(x, y, state.t + dt, rng)


# ---------------------------------------------------------------------------
# block integration

def _run_block_python(states, cr, ci, quartic, a_r, a_i, delta, ck):
    n, nck = len(states), len(ck)
    out = np.zeros((n, nck, 2))
    status = np.zeros(n, dtype=np.int8)
    streams = _rng.VectorStreams(states)
    sx, sy = math.sqrt(2.0 * a_r), math.sqrt(2.0 * a_i)
    x, y, t = np.zeros(n), np.zeros(n), np.zeros(n)
    j = np.zeros(n, dtype=np.intp)
    while True:  # checkpoints at t <= 0 hold the origin
        at0 = j < nck
        at0[at0] = ~(0.0 < ck[j[at0]])
        if not at0.any():
            break
        j[at0] += 1
    idx = np.flatnonzero(j < nck)
    x, y, t, j = x[idx], y[idx], t[idx], j[idx]
    streams.compact(idx)
    done_states = np.array(states, dtype=np.uint64, copy=True)
    steps = 0
    with np.errstate(over="ignore", invalid="ignore"):
        while len(idx):
            x2 = x * x
            y2 = y * y
            if quartic:
                u = x * (x2 - 3.0 * y2)
                v = y * (3.0 * x2 - y2)
            else:
                u, v = x, y
            fx = cr * u - ci * v
            fy = cr * v + ci * u
            dt = delta / (1.0 + np.abs(fx) + np.abs(fy))
            sdt = np.sqrt(dt)
            xi = streams.normal()
            x = x + (fx * dt + (sx * sdt) * xi)
            if sy != 0.0:
                eta = streams.normal()
                y = y + (fy * dt + (sy * sdt) * eta)
            else:
                y = y + fy * dt
            t = t + dt
            steps += len(idx)
            bad = ~((np.abs(x) <= LIMIT) & (np.abs(y) <= LIMIT))
            hit = ~bad & ~(t < ck[j])
            while hit.any():
                h = np.flatnonzero(hit)
                out[idx[h], j[h], 0] = x[h]
                out[idx[h], j[h], 1] = y[h]
                j[h] += 1
                more = j[h] < nck
                hit[:] = False
                hm = h[more]
                hit[hm] = ~(t[hm] < ck[j[hm]])
            fin = bad | (j >= nck)
            if fin.any():
                status[idx[bad]] = 1
                done_states[idx[fin]] = streams.s[fin]
                keep = ~fin
                idx, x, y, t, j = idx[keep], x[keep], y[keep], t[keep], j[keep]
                streams.compact(keep)
    states[...] = done_states
    return out, status, steps


def run_block(config: SimulationConfig, start: int, count: int, backend: str | None = None):
    """Integrate trajectories start .. start+count-1.

    Returns
    -------
    out : ndarray (count, n_checkpoints, 2)
    status : ndarray (count,) int8, 1 for diverged trajectories
    steps : int
    """
    backend = backend or BACKEND
    states = _rng.seed_states(int(config.master_seed), int(start), int(count))
    ck = np.asarray(config.checkpoints, dtype=float)
    cr, ci, quartic, a_r, a_i, delta = config.kernel_args
    if backend == "compiled":
        if _kernel is None:
            raise InvalidParameterError("compiled backend is not available")
        out = np.zeros((count, len(ck), 2))
        status = np.zeros(count, dtype=np.int8)
        steps = _kernel.run_block(states, _rng.KI, _rng.WI, _rng.FI, cr, ci, quartic, a_r, a_i,
                                  delta, ck, out, status)
        return out, status, int(steps)
    if backend == "python":
        return _run_block_python(states, cr, ci, quartic, a_r, a_i, delta, ck)
    raise InvalidParameterError(f"unknown backend {backend!r}")


def run_trajectory(config: SimulationConfig, trajectory_index: int, backend: str | None = None) -> np.ndarray:
    """(x, y) at every checkpoint for one trajectory, shape (n_checkpoints, 2).

    Raises
    ------
    NonFiniteStateError
        Carrying the trajectory index, if the trajectory diverged.
    """
    out, status, _ = run_block(config, trajectory_index, 1, backend)
    if status[0]:
        raise NonFiniteStateError(f"trajectory {trajectory_index} diverged", trajectory_index)
    return out[0]


def _blocks(n: int, block_size: int):
    return [(s, min(block_size, n - s)) for s in range(0, n, block_size)]


def _map_blocks(config: SimulationConfig, fn: Callable, threads: int, block_size: int, backend):
    """Apply fn(out, status, steps) to every block; results in block order."""
    if block_size < 1:
        raise InvalidParameterError("block_size must be positive")
    blocks = _blocks(int(config.n_trajectories), block_size)

    def work(b):
        return fn(*run_block(config, b[0], b[1], backend))

    if threads <= 1 or len(blocks) == 1:
        return [work(b) for b in blocks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(work, blocks))


# ---------------------------------------------------------------------------
# ensemble moments

@dataclass(frozen=True)
class EnsembleMoments:
    """Per-checkpoint means of z^p with standard errors of the mean.

    ``se[p]`` holds se(Re) + i·se(Im); entries are NaN when fewer than two
    trajectories were kept (see ``se_defined``).
    """

    t: np.ndarray
    mean: dict
    se: dict
    n_kept: int
    n_excluded: int
    steps: int
    config: SimulationConfig = field(repr=False)

    @property
    def se_defined(self) -> bool:
        return self.n_kept >= 2

    def m(self, p: int) -> np.ndarray:
        return self.mean[p]

    def error(self, p: int) -> np.ndarray:
        """|se| combining real and imaginary parts."""
        return np.abs(self.se[p])


def _block_stats(powers):
    def fn(out, status, steps):
        keep = status == 0
        z = out[keep, :, 0] + 1j * out[keep, :, 1]
        cols = []
        for p in powers:
            zp = z**p
            cols += [zp.real, zp.imag]
        q = np.stack(cols, axis=0)  # (2·len(powers), n, nck)
        n = q.shape[1]
        if n:
            mean = q.mean(axis=1)
            m2 = ((q - mean[:, None, :]) ** 2).sum(axis=1)
        else:
            mean = m2 = np.zeros((q.shape[0], q.shape[2]))
        return n, mean, m2, int((~keep).sum()), steps
    return fn


def _merge(parts):
    """Chan's pairwise update, applied in block order."""
    n_tot, mean, m2, excl, steps = 0, None, None, 0, 0
    for n, mb, m2b, e, s in parts:
        excl += e
        steps += s
        if n == 0:
            continue
        if mean is None:
            n_tot, mean, m2 = n, mb.copy(), m2b.copy()
            continue
        nn = n_tot + n
        d = mb - mean
        mean = mean + d * (n / nn)
        m2 = m2 + m2b + d * d * (n_tot * n / nn)
        n_tot = nn
    return n_tot, mean, m2, excl, steps


def ensemble_moments(config: SimulationConfig, powers: Sequence[int] = (2, 4), threads: int = 1,
                     block_size: int = DEFAULT_BLOCK, backend: str | None = None,
                     max_excluded_fraction: float = MAX_EXCLUDED_FRACTION) -> EnsembleMoments:
    """Means and standard errors of z^p over all non-diverged trajectories.

    Block sums are merged in trajectory order, so the result does not
    depend on `threads`.

    Raises
    ------
    AllDivergedError
        If no trajectory survived.
    ExcessiveDivergenceError
        If more than `max_excluded_fraction` of trajectories diverged.
    """
    powers = tuple(int(p) for p in powers)
    parts = _map_blocks(config, _block_stats(powers), threads, block_size, backend)
    n, mean, m2, excl, steps = _merge(parts)
    if n == 0:
        raise AllDivergedError(f"all {config.n_trajectories} trajectories diverged")
    if excl > max_excluded_fraction * config.n_trajectories:
        raise ExcessiveDivergenceError(
            f"{excl} of {config.n_trajectories} trajectories diverged "
            f"(limit {max_excluded_fraction:g})")
    if excl:
        log.warning("%d diverged trajectories excluded", excl)
    if n >= 2:
        se = np.sqrt(m2 / (n - 1) / n)
    else:
        se = np.full_like(mean, np.nan)
    means, ses = {}, {}
    for k, p in enumerate(powers):
        means[p] = mean[2 * k] + 1j * mean[2 * k + 1]
        ses[p] = se[2 * k] + 1j * se[2 * k + 1]
    return EnsembleMoments(np.asarray(config.checkpoints), means, ses, n, excl, steps, config)


# ---------------------------------------------------------------------------
# breakdown

def detect_breakdown(langevin: EnsembleMoments, reference, k_sigma: float = 4.0, window: int = 3,
                     floor: float = 0.005, p: int = 2):
    """First checkpoint from which |m_p - reference| > k_sigma·|se| + floor
    holds at `window` consecutive checkpoints; None if never.

    `reference` is a callable t -> complex or an array aligned with the
    checkpoints.
    """
    if window < 1:
        raise InvalidParameterError("window must be at least 1")
    t = langevin.t
    ref = np.asarray([reference(tt) for tt in t] if callable(reference) else reference, dtype=complex)
    if ref.shape != t.shape:
        raise InvalidParameterError("reference does not match the checkpoints")
    dev = np.abs(langevin.m(p) - ref)
    thr = k_sigma * np.nan_to_num(langevin.error(p), nan=0.0) + floor
    over = dev > thr
    run = 0
    for i, o in enumerate(over):
        run = run + 1 if o else 0
        if run == window:
            return float(t[i - window + 1])
    return None


@dataclass(frozen=True)
class BreakdownFit:
    """t_c ≈ prefactor·(A_I + α)^{-γ}."""

    a_i: np.ndarray
    t_c: np.ndarray
    prefactor: float
    alpha: float
    gamma: float
    residual: float

    def predict(self, a_i):
        return self.prefactor * (np.asarray(a_i, dtype=float) + self.alpha) ** (-self.gamma)


def breakdown_scaling_fit(points: Sequence[tuple], max_iter: int = 5000) -> BreakdownFit:
    """Least squares in log t_c for (prefactor, α, γ).

    Raises
    ------
    InsufficientDataError
        With fewer than three points.
    ConvergenceError
        If the optimizer does not converge.
    """
    pts = [(float(a), float(tc)) for a, tc in points]
    if len(pts) < 3:
        raise InsufficientDataError("the scaling fit needs at least three (A_I, t_c) points")
    a = np.array([q[0] for q in pts])
    tc = np.array([q[1] for q in pts])
    if np.any(tc <= 0) or np.any(a < 0):
        raise InvalidParameterError("need t_c > 0 and A_I >= 0")
    lo = -a.min() + 1e-9

    def model(x, lnc, al, g):
        return lnc - g * np.log(x + al)

    try:
        popt, _ = curve_fit(model, a, np.log(tc), p0=(float(np.log(tc).mean()), max(0.0, lo + 1e-3), 0.5),
                            bounds=([-np.inf, lo, -10.0], [np.inf, 10.0, 10.0]), maxfev=max_iter,
                            xtol=1e-15, ftol=1e-15, gtol=1e-15)
    except (RuntimeError, ValueError) as exc:
        raise ConvergenceError(f"scaling fit did not converge: {exc}") from exc
    res = float(np.sqrt(np.mean((model(a, *popt) - np.log(tc)) ** 2)))
    return BreakdownFit(a, tc, float(np.exp(popt[0])), float(popt[1]), float(popt[2]), res)


# ---------------------------------------------------------------------------
# equilibrium histograms

@dataclass(frozen=True)
class Histogram2D:
    """Bin masses normalized over the included bins."""

    x_edges: np.ndarray
    y_edges: np.ndarray
    mass: np.ndarray
    excluded_fraction: float
    n_samples: int

    @property
    def x_centers(self):
        return 0.5 * (self.x_edges[1:] + self.x_edges[:-1])

    @property
    def y_centers(self):
        return 0.5 * (self.y_edges[1:] + self.y_edges[:-1])

    @property
    def density(self):
        """mass / bin area."""
        return self.mass / np.outer(np.diff(self.x_edges), np.diff(self.y_edges))


def density_histogram_2d(config: SimulationConfig, t_final: float, bounds=((-3, 3), (-3, 3)),
                         bins=(60, 60), threads: int = 1, block_size: int = DEFAULT_BLOCK,
                         backend: str | None = None) -> Histogram2D:
    """Histogram of trajectory endpoints at t_final; reports the mass outside `bounds`."""
    cfg = SimulationConfig(config.action, config.noise, (float(t_final),), config.n_trajectories,
                           config.delta, config.master_seed)
    xe = np.linspace(bounds[0][0], bounds[0][1], bins[0] + 1)
    ye = np.linspace(bounds[1][0], bounds[1][1], bins[1] + 1)

    def fn(out, status, steps):
        keep = status == 0
        h, _, _ = np.histogram2d(out[keep, 0, 0], out[keep, 0, 1], bins=(xe, ye))
        return h, int(keep.sum())

    parts = _map_blocks(cfg, fn, threads, block_size, backend)
    counts = sum(p[0] for p in parts)
    n = sum(p[1] for p in parts)
    if n == 0:
        raise AllDivergedError("all trajectories diverged")
    inside = counts.sum()
    if inside == 0:
        raise InvalidParameterError("no samples fall inside the histogram bounds")
    return Histogram2D(xe, ye, counts / inside, float(1 - inside / n), n)
