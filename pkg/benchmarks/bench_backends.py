"""Compiled vs pure-Python Langevin backend: time per step and agreement.

    python benchmarks/bench_backends.py --ntraj 2000 --tmax 0.05

Both backends integrate the same trajectories (same seeds), so besides the
timings the script confirms that their checkpoint values are identical.
"""

import argparse
import math
import time

import numpy as np

from clborel import langevin as L
from clborel.actions import Action, NoiseConfig


def bench(config, backend, repeat):
    best, result = math.inf, None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = L.run_block(config, 0, config.n_trajectories, backend)
        best = min(best, time.perf_counter() - t0)
    return best, result


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--ntraj", type=int, default=2000)
    ap.add_argument("--tmax", type=float, default=0.05)
    ap.add_argument("--delta", type=float, default=1e-5)
    ap.add_argument("--ai", type=float, default=1.0)
    ap.add_argument("--theta", type=float, default=math.pi / 2)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args(argv)

    cases = [("quartic", Action.quartic(1.0, args.theta)), ("quadratic", Action.quadratic(1.0, args.theta))]
    backends = L.available_backends()
    print(f"backends: {', '.join(backends)}; {args.ntraj} trajectories to t = {args.tmax}, "
          f"delta = {args.delta}, A_I = {args.ai}")
    print(f"{'action':<10} {'backend':<9} {'steps':>11} {'seconds':>9} {'ns/step':>9} {'speedup':>8}")
    for name, action in cases:
        ck = tuple(np.linspace(args.tmax / 5, args.tmax, 5))
        cfg = L.SimulationConfig(action, NoiseConfig(args.ai), ck, args.ntraj, args.delta, args.seed)
        timings, outputs = {}, {}
        for b in backends:
            sec, res = bench(cfg, b, args.repeat if b == "compiled" else 1)
            timings[b], outputs[b] = (sec, res[2]), res
        ref = timings.get("python", (None,))[0]
        for b in backends:
            sec, steps = timings[b]
            speed = f"{ref / sec:8.1f}" if ref else f"{'-':>8}"
            print(f"{name:<10} {b:<9} {steps:>11d} {sec:>9.3f} {1e9 * sec / steps:>9.1f} {speed}")
        if len(outputs) == 2:
            a, b = outputs.values()
            same = np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1]) and a[2] == b[2]
            print(f"{name:<10} outputs identical across backends: {same}")


if __name__ == "__main__":
    main()
