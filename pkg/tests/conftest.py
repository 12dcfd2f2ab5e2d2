import math
import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from clborel import langevin as L
from clborel.actions import Action, NoiseConfig

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", deadline=None, max_examples=400)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

THREADS = os.cpu_count() or 1
N_TRAJ = 100_000
DELTA = 1e-5

# checkpoints on [0.05, 2] for the real-action run; 0.5 doubles as the step-size probe
THETA0_CHECKPOINTS = (0.05, 0.1, 0.2, 0.3, 0.5, 0.75, 1.0, 1.25, 1.5, 2.0)
# last checkpoint per A_I for the θ = π/2 runs (a few windows past the expected t_c)
BREAKDOWN_TMAX = {1.0: 0.4, 0.5: 0.5, 0.2: 0.8, 0.1: 1.0}


def _run(action, a_i, checkpoints, n=N_TRAJ, delta=DELTA, seed=1):
    cfg = L.SimulationConfig(action, NoiseConfig(a_i), tuple(checkpoints), n, delta, seed)
    return L.ensemble_moments(cfg, threads=THREADS)


@pytest.fixture(scope="session")
def theta0_run():
    return _run(Action.quartic(1.0), 0.0, THETA0_CHECKPOINTS, seed=11)


@pytest.fixture(scope="session")
def theta0_half_step_run():
    return _run(Action.quartic(1.0), 0.0, (0.5,), delta=DELTA / 2, seed=12)


@pytest.fixture(scope="session")
def breakdown_runs():
    """θ = π/2 ensembles keyed by A_I, checkpoints every 0.01."""
    out = {}
    for k, (a_i, tmax) in enumerate(BREAKDOWN_TMAX.items()):
        ck = np.round(np.arange(0.01, tmax + 1e-9, 0.01), 10)
        out[a_i] = _run(Action.quartic(1.0, math.pi / 2), a_i, ck, seed=21 + k)
    return out


@pytest.fixture(scope="session")
def harmonic_runs():
    """Quadratic action at θ = π/2, A_I ∈ {0, 1}; δ = 1e-4 keeps the cost to a minute each."""
    ck = np.round(np.arange(0.1, 2.0 + 1e-9, 0.1), 10)
    return {a_i: _run(Action.quadratic(1.0, math.pi / 2), a_i, ck, delta=1e-4, seed=31 + int(a_i))
            for a_i in (0.0, 1.0)}


# ---------------------------------------------------------------------------
# one PASS/FAIL line per acceptance criterion in the terminal summary

_REPORT = pytest.StashKey[dict]()


@pytest.fixture
def report(request):
    store = request.config.stash.setdefault(_REPORT, {})

    def record(number: int, ok: bool, detail: str):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        store[number] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(_REPORT, {})
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(store):
        terminalreporter.write_line(store[k])
