"""Command-line front end: ``clborel <subcommand> [flags]``.

Every subcommand writes one main table and, when the main table goes to a
file, optional companion tables next to it (``<stem>.<name>.csv``). Each
file starts with a ``#`` line holding JSON metadata (parameters, version,
seed, derived results and a creation timestamp) followed by a CSV header.
With ``--format json`` the same content is written as one JSON document.

Flags can also come from ``--config FILE``, an INI file of ``key = value``
lines; keys in ``[common]`` apply to every subcommand, keys in a section
named after the subcommand only to that one. Flags on the command line win.
If ``--output`` is not given, the main table goes to
``$CLBOREL_OUTPUT_DIR/<subcommand>.csv`` when that variable is set and to
standard output otherwise.

Exit status: 0 on success, 1 for usage errors, 2 for numerical failures.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import datetime as _dt
import io
import json
import logging
import math
import os
import sys
import warnings
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .actions import Action, NoiseConfig
from .errors import ClBorelError, InsufficientDataError, InvalidParameterError, NumericalWarning

ENV_OUTPUT_DIR = "CLBOREL_OUTPUT_DIR"
PACKAGE = "clborel"

log = logging.getLogger(__name__)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# ---------------------------------------------------------------------------
# tables and output

class Table:
    """Columns, rows and the metadata echoed into the file header."""

    def __init__(self, columns: Sequence[str], rows, metadata: dict | None = None):
        self.columns = list(columns)
        self.rows = [list(r) for r in rows]
        self.metadata = dict(metadata or {})


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _json_value(v):
    if isinstance(v, dict):
        return {str(k): _json_value(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_value(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else repr(v)
    if isinstance(v, complex):
        return {"re": _json_value(v.real), "im": _json_value(v.imag)}
    return v


def render(table: Table, fmt: str, created: str) -> str:
    meta = _json_value(dict(table.metadata, created=created))
    if fmt == "json":
        rows = [[_json_value(c) for c in r] for r in table.rows]
        doc = {"metadata": meta, "columns": table.columns, "rows": rows}
        return json.dumps(doc, sort_keys=True) + "\n"
    buf = io.StringIO()
    buf.write("# " + json.dumps(meta, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    for r in table.rows:
        w.writerow([_cell(c) for c in r])
    return buf.getvalue()


class Output:
    """Resolves where the main table and its companions go."""

    def __init__(self, subcommand: str, path: str | None, fmt: str):
        self.fmt = fmt
        self.created = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
        if path is None and os.environ.get(ENV_OUTPUT_DIR):
            path = str(Path(os.environ[ENV_OUTPUT_DIR]) / f"{subcommand}.{fmt}")
        self.path = None if path in (None, "-") else Path(path)
        self.written = []

    @property
    def to_file(self) -> bool:
        return self.path is not None

    def companion(self, name: str) -> Path | None:
        if self.path is None:
            return None
        return self.path.with_name(f"{self.path.stem}.{name}.{self.fmt}")

    def write(self, table: Table, name: str | None = None) -> None:
        text = render(table, self.fmt, self.created)
        if name is None:
            if self.path is None:
                sys.stdout.write(text)
                return
            target = self.path
        else:
            target = self.companion(name)
            if target is None:
                log.info("companion table %r skipped when writing to standard output", name)
                return
        target.parent.mkdir(parents=True, exist_ok=True)
        with open(target, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        self.written.append(str(target))


# ---------------------------------------------------------------------------
# argument types

def _grid(text: str) -> tuple:
    """'a:b:h' (inclusive, step h) or a comma list; strictly increasing."""
    text = text.strip()
    try:
        if ":" in text:
            a, b, h = (float(v) for v in text.split(":"))
            if not h > 0 or b < a:
                raise ValueError
            n = math.floor((b - a) / h + 1e-9)  # never past b
            vals = [round(a + k * h, 12) for k in range(n + 1)]
        else:
            vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}; use start:stop:step or a comma list")
    if not vals or any(not math.isfinite(v) for v in vals):
        raise argparse.ArgumentTypeError(f"bad grid {text!r}")
    if any(b <= a for a, b in zip(vals, vals[1:])):
        raise argparse.ArgumentTypeError("grid values must be strictly increasing")
    return tuple(vals)


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError("expected a positive integer")
    return v


def _points(text: str) -> list:
    out = []
    try:
        for item in text.split(","):
            a, tc = item.split(":")
            out.append((float(a), float(tc)))
    except ValueError:
        raise argparse.ArgumentTypeError("points must look like 'a_i:t_c,a_i:t_c,...'")
    return out


def _angle(args) -> float:
    frac = getattr(args, "theta_frac", None)
    if frac is not None and args.theta is not None:
        raise UsageError("give either --theta or --theta-frac, not both")
    if frac is not None:
        return frac * math.pi
    return 0.0 if args.theta is None else args.theta


# ---------------------------------------------------------------------------
# parser

def _common(p, *, theta=True, threads=False):
    if theta:
        p.add_argument("--theta", type=float, help="Wick angle in radians")
        p.add_argument("--theta-frac", type=float, help="Wick angle as a fraction q of pi")
    if threads:
        p.add_argument("--threads", type=_positive_int, default=os.cpu_count() or 1,
                       help="worker threads (results do not depend on it)")
    p.add_argument("-o", "--output", help="main output file ('-' for standard output)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--config", help="INI file of key = value defaults")
    p.add_argument("-v", "--verbose", action="store_true")


def _langevin_flags(p, ntraj):
    p.add_argument("--ai", type=float, default=0.0, help="imaginary noise strength A_I")
    p.add_argument("--delta", type=float, default=1e-5, help="base Langevin step")
    p.add_argument("--ntraj", type=_positive_int, default=ntraj)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--checkpoints", type=_grid, default=_grid("0.02:1:0.02"),
                   help="times start:stop:step or a comma list")
    p.add_argument("--block-size", type=_positive_int, default=4096)
    p.add_argument("--backend", choices=("compiled", "python"))
    p.add_argument("--max-excluded", type=float, default=1e-3,
                   help="largest tolerated fraction of diverged trajectories")
    p.add_argument("--k-sigma", type=float, default=4.0)
    p.add_argument("--floor", type=float, default=0.005)
    p.add_argument("--window", type=_positive_int, default=3)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog=PACKAGE, description="Borel resummation and complex Langevin breakdown "
                     "for zero-dimensional complex actions.")
    parser.add_argument("--version", action="version", version=f"{PACKAGE} {__version__}")
    sub = parser.add_subparsers(dest="subcommand", parser_class=_Parser, metavar="SUBCOMMAND")

    p = sub.add_parser("series", help="exact coefficients c_{p,n} and their growth fit")
    p.add_argument("--p", type=int, default=2)
    p.add_argument("--nterms", type=_positive_int, default=12, help="keep orders n < nterms")
    p.add_argument("--k-min", type=int, default=10)
    _common(p, theta=False)

    p = sub.add_parser("borel", help="Borel sum b_p(s) and transform M_p(t)")
    p.add_argument("--p", type=int, default=2)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--tgrid", type=_grid, default=_grid("0.02:2:0.02"))
    p.add_argument("--nterms", type=_positive_int, default=500)
    p.add_argument("--smax", type=float, default=11.0)
    p.add_argument("--step", type=float, default=1e-3)
    p.add_argument("--no-tail-closure", action="store_true")
    _common(p)

    p = sub.add_parser("simulate", help="complex Langevin moments and breakdown time")
    p.add_argument("--action", choices=("quartic", "quadratic"), default="quartic")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--omega", type=float, default=1.0)
    _langevin_flags(p, 10000)
    p.add_argument("--no-reference", action="store_true", help="skip the exact reference and t_c")
    p.add_argument("--tfinal", type=float, help="also write an endpoint histogram at this time")
    p.add_argument("--bins", type=_positive_int, default=60)
    p.add_argument("--bounds", type=float, default=3.0, help="histogram half-width")
    _common(p, threads=True)

    p = sub.add_parser("breakdown-fit", help="fit t_c = c (A_I + alpha)^(-gamma)")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--points", type=_points, help="a_i:t_c pairs, comma separated")
    src.add_argument("--input", help="CSV with columns a_i and t_c")
    _common(p, theta=False)

    p = sub.add_parser("spectrum-1d", help="spectrum and spectral norms of the sextic Hamiltonian")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--N", dest="n_trunc", type=_positive_int, default=150)
    p.add_argument("--omega2", type=float, help="quadratic coefficient (default 3 sqrt(lambda))")
    p.add_argument("--nlevels", type=_positive_int, help="rows to write (default N)")
    p.add_argument("--n-min", type=int, default=10, help="first level of the norm growth fit")
    p.add_argument("--no-compare", action="store_true", help="skip the N - 50 stability check")
    _common(p)

    p = sub.add_parser("spectrum-2d", help="low spectrum and ground state of the 2D Fokker-Planck operator")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--ai", type=float, default=1.0)
    p.add_argument("--N", dest="n_trunc", type=_positive_int, default=50)
    p.add_argument("--nlevels", type=_positive_int, default=10)
    p.add_argument("--method", choices=("auto", "dense", "sparse"), default="auto")
    p.add_argument("--ground-state", action="store_true",
                   help="also write phi0 on a grid and its moments")
    p.add_argument("--grid-points", type=_positive_int, default=141)
    _common(p)

    p = sub.add_parser("harmonic", help="closed-form results for the quadratic action")
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--ai", type=float, default=1.0)
    p.add_argument("--p", type=int, default=2)
    p.add_argument("--tgrid", type=_grid, default=_grid("0:2:0.02"))
    p.add_argument("--nmax", type=int, default=50, help="largest n of the spectral norm table")
    _common(p)

    p = sub.add_parser("compare", help="Langevin, Borel and spectral m2(t) on one grid")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    _langevin_flags(p, 10000)
    p.add_argument("--N", dest="n_trunc", type=_positive_int,
                   help="2D truncation (default: first of 50, 100, 150 with |E0| < 0.02)")
    p.add_argument("--no-spectral", action="store_true")
    _common(p, threads=True)
    return parser


# ---------------------------------------------------------------------------
# config files

def _config_argv(path: str, subcommand: str, parser: argparse.ArgumentParser) -> list:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise UsageError(f"cannot read config file {path}: {exc}")
    sub = _subparser(parser, subcommand)
    flags = {}
    for a in sub._actions:
        for s in a.option_strings:
            if s.startswith("--"):
                flags[s[2:].replace("-", "_").lower()] = (s, a)
    argv = []
    for section in ("common", subcommand):
        if not cp.has_section(section):
            continue
        for key, value in cp.items(section):
            norm = key.replace("-", "_").lower()
            if norm in ("config", "output_dir"):
                continue
            if norm not in flags:
                if section == "common":
                    continue
                raise UsageError(f"unknown key {key!r} in [{section}] of {path}")
            opt, action = flags[norm]
            if isinstance(action, argparse._StoreTrueAction):
                if value.strip().lower() in ("1", "true", "yes", "on"):
                    argv.append(opt)
            else:
                argv += [opt, value.strip()]
    return argv


def _subparser(parser, name):
    for a in parser._actions:
        if isinstance(a, argparse._SubParsersAction):
            return a.choices[name]
    raise KeyError(name)


def parse_args(argv: Sequence[str]) -> argparse.Namespace:
    parser = build_parser()
    argv = list(argv)
    if not argv:
        raise UsageError(parser.format_help().rstrip())
    args = parser.parse_args(argv)
    if args.subcommand is None:
        raise UsageError(parser.format_usage().rstrip())
    if getattr(args, "config", None):
        file_argv = _config_argv(args.config, args.subcommand, parser)
        rest = argv[argv.index(args.subcommand) + 1:]
        args = parser.parse_args([args.subcommand] + file_argv + rest)
    return args


# ---------------------------------------------------------------------------
# helpers shared by subcommands

def _params(args, **extra) -> dict:
    skip = {"output", "format", "config", "verbose", "subcommand"}
    out = {k: v for k, v in vars(args).items() if k not in skip}
    out.update(extra)
    return out


def _meta(args, table: str, results: dict | None = None, **extra) -> dict:
    return {
        "package": PACKAGE,
        "version": __version__,
        "subcommand": args.subcommand,
        "table": table,
        "parameters": _params(args, **extra),
        "seed": getattr(args, "seed", None),
        "results": results or {},
    }


def _sim_config(args, action: Action, checkpoints):
    from .langevin import SimulationConfig

    return SimulationConfig(action, NoiseConfig(args.ai), tuple(checkpoints), args.ntraj, args.delta,
                            args.seed)


def _moments(args, config):
    from . import langevin

    return langevin.ensemble_moments(config, (2, 4), threads=args.threads, block_size=args.block_size,
                                     backend=args.backend, max_excluded_fraction=args.max_excluded)


# ---------------------------------------------------------------------------
# subcommands

def cmd_series(args, out: Output):
    from .moments import growth_fit, series_coefficients_via_recursion

    if args.p < 2 or args.p % 2:
        raise InvalidParameterError("--p must be an even integer >= 2")
    table = series_coefficients_via_recursion(args.p, args.nterms - 1)
    rows = [(args.p, n, str(c)) for n, c in table.row(args.p)]
    try:
        g = growth_fit(args.p, table, args.k_min)
        fit = {"alpha_p": g.alpha_p, "beta_p": g.beta_p, "residual": g.residual,
               "k_min": g.k_min, "k_max": g.k_max}
    except InsufficientDataError as exc:
        fit = {"skipped": str(exc)}
    out.write(Table(("p", "n", "c_decimal"), rows, _meta(args, "series", {"growth_fit": fit})))


def cmd_borel(args, out: Output):
    from .borel import borel_curve

    theta = _angle(args)
    res = borel_curve(args.p, args.tgrid, theta, args.lam, args.smax, args.step, args.nterms,
                      not args.no_tail_closure)
    rows = [(t, m.real, m.imag, args.p, theta, args.lam) for t, m in zip(res.t_grid, res.M_values)]
    meta = _meta(args, "borel_transform", res.metadata, theta=theta)
    out.write(Table(("t", "re_M", "im_M", "p", "theta", "lambda"), rows, meta))
    s_rows = list(zip(res.s_grid.tolist(), res.b_values.tolist()))
    out.write(Table(("s", "b"), s_rows, _meta(args, "borel_sum", res.metadata, theta=theta)), "borel_sum")


def _reference_m2(action: Action, t):
    from .borel import borel_transform
    from .harmonic import harmonic_moment_flow

    t = np.asarray(t, dtype=float)
    ref = np.zeros(len(t), dtype=complex)
    pos = t > 0
    if action.kind == "quartic":
        ref[pos] = borel_transform(2, t[pos], action.theta, action.lam)
    else:
        ref[pos] = harmonic_moment_flow(2, t[pos], action.omega, action.theta)
    return ref


def _langevin_rows(m):
    rows = []
    for i, t in enumerate(m.t):
        row = [t]
        for p in (2, 4):
            row += [m.mean[p][i].real, m.mean[p][i].imag, m.se[p][i].real, m.se[p][i].imag]
        rows.append(row + [m.n_kept, m.n_excluded])
    return rows


LANGEVIN_COLUMNS = ("t", "re_m2", "im_m2", "se_re_m2", "se_im_m2", "re_m4", "im_m4", "se_re_m4",
                    "se_im_m4", "n_kept", "n_excluded")


def cmd_simulate(args, out: Output):
    from . import langevin

    theta = _angle(args)
    if args.action == "quartic":
        action = Action.quartic(args.lam, theta)
    else:
        action = Action.quadratic(args.omega, theta)
    cfg = _sim_config(args, action, args.checkpoints)
    m = _moments(args, cfg)
    results = {"steps": m.steps, "backend": args.backend or langevin.BACKEND}
    if not args.no_reference:
        ref = _reference_m2(action, m.t)
        results["t_c"] = langevin.detect_breakdown(m, ref, args.k_sigma, args.window, args.floor)
        results["max_deviation_m2"] = float(np.max(np.abs(m.m(2) - ref)))
    out.write(Table(LANGEVIN_COLUMNS, _langevin_rows(m), _meta(args, "langevin_moments", results,
                                                               theta=theta)))
    if args.tfinal is not None:
        b = args.bounds
        h = langevin.density_histogram_2d(cfg, args.tfinal, ((-b, b), (-b, b)), (args.bins, args.bins),
                                          args.threads, args.block_size, args.backend)
        rows = [(xc, yc, h.mass[i, j]) for i, xc in enumerate(h.x_centers) for j, yc in enumerate(h.y_centers)]
        hres = {"excluded_fraction": h.excluded_fraction, "n_samples": h.n_samples}
        out.write(Table(("x_center", "y_center", "mass"), rows, _meta(args, "histogram", hres, theta=theta)),
                  "histogram")


def _read_points(path: str) -> list:
    try:
        with open(path, encoding="utf-8") as fh:
            lines = [ln for ln in fh if ln.strip() and not ln.startswith("#")]
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}")
    reader = csv.DictReader(lines)
    if reader.fieldnames is None or not {"a_i", "t_c"} <= set(reader.fieldnames):
        raise UsageError(f"{path} needs columns a_i and t_c")
    pts = []
    for row in reader:
        if row["t_c"] in ("", "None", "nan"):
            continue
        pts.append((float(row["a_i"]), float(row["t_c"])))
    return pts


def cmd_breakdown_fit(args, out: Output):
    from .langevin import breakdown_scaling_fit

    if args.points is not None:
        pts = args.points
    elif args.input is not None:
        pts = _read_points(args.input)
    else:
        raise UsageError("breakdown-fit needs --points or --input")
    fit = breakdown_scaling_fit(pts)
    pred = fit.predict(fit.a_i)
    rows = list(zip(fit.a_i.tolist(), fit.t_c.tolist(), pred.tolist()))
    res = {"prefactor": fit.prefactor, "alpha": fit.alpha, "gamma": fit.gamma, "residual": fit.residual}
    out.write(Table(("a_i", "t_c", "t_c_fit"), rows, _meta(args, "breakdown_fit", res)))


def cmd_spectrum_1d(args, out: Output):
    from .spectral1d import build_hamiltonian_matrix, eigen_decompose_1d, norm_growth_fit

    theta = _angle(args)
    omega2 = 3 * math.sqrt(args.lam) if args.omega2 is None else args.omega2
    op = build_hamiltonian_matrix(omega2, args.lam, theta, args.n_trunc)
    dec = eigen_decompose_1d(op, compare=not args.no_compare)
    k = dec.N if args.nlevels is None else min(args.nlevels, dec.N)
    rows = [(n, dec.eigenvalues[n].real, dec.eigenvalues[n].imag, dec.C[n], dec.norms[n],
             bool(dec.reliable[n]), dec.N) for n in range(k)]
    try:
        mask = dec.norm_reliable if dec.compare_N is not None else None
        f = norm_growth_fit(dec.norms, args.n_min, mask)
        fit = {"intercept": f.intercept, "slope": f.slope, "residual": f.residual, "n_points": f.n_points}
    except InsufficientDataError as exc:
        fit = {"skipped": str(exc)}
    res = {"omega2": omega2, "compare_N": dec.compare_N, "n_reliable": int(dec.reliable.sum()),
           "norm_growth_fit": fit}
    cols = ("n", "re_E", "im_E", "C_n", "N_n", "reliable_flag", "N_truncation")
    out.write(Table(cols, rows, _meta(args, "spectrum_1d", res, theta=theta)))


def cmd_spectrum_2d(args, out: Output):
    from . import spectral2d as s2

    theta = _angle(args)
    op = s2.build_fp_matrix(args.lam, theta, args.ai, args.n_trunc)
    levels = s2.spectrum_2d(op, args.nlevels, args.method)
    rows = [(n, e.real, e.imag, args.n_trunc) for n, e in enumerate(levels)]
    res = {"conjugation_defect": s2.conjugation_defect(levels)}
    if args.ground_state:
        gs = s2.ground_state_vector(op, levels=levels)
        grid = s2.default_grid(args.lam, args.grid_points)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", NumericalWarning)
            g = s2.ground_state_function(gs, grid)
        res.update(E0=gs.E0, residual=gs.residual, iterations=gs.iterations,
                   boundary_ratio=g.boundary_ratio, boundary_mass=s2.boundary_mass(g.phi),
                   norm_error=g.norm_error, peaks=[list(p) for p in g.peaks],
                   principal_axis_angle=s2.principal_axis_angle(g))
        mrows = []
        for p in (2, 4):
            val, err = s2.ground_state_moments(gs, p, grid)
            mrows.append((p, val.real, val.imag, err))
    out.write(Table(("n", "re_E", "im_E", "N_truncation"), rows, _meta(args, "spectrum_2d", res, theta=theta)))
    if args.ground_state:
        grows = [(xv, yv, g.phi[i, j]) for i, xv in enumerate(g.x) for j, yv in enumerate(g.y)]
        out.write(Table(("x", "y", "phi0"), grows, _meta(args, "ground_state_grid", theta=theta)), "grid")
        out.write(Table(("p", "re", "im", "grid_error"), mrows, _meta(args, "ground_state_moments", theta=theta)),
                  "moments")


def cmd_harmonic(args, out: Output):
    from .errors import DegenerateParameterError
    from .harmonic import harmonic_equilibrium_moment, harmonic_ground_state, harmonic_moment_flow
    from .harmonic import spectral_norm_generating_function

    theta = _angle(args)
    p = args.p
    curve = np.atleast_1d(harmonic_moment_flow(p, np.asarray(args.tgrid), args.omega, theta))
    res = {"equilibrium": harmonic_equilibrium_moment(p, args.omega, theta)}
    rows = [(t, v.real, v.imag) for t, v in zip(args.tgrid, curve)]
    out.write(Table(("t", f"re_m{p}", f"im_m{p}"), rows, _meta(args, "moment_flow", res, theta=theta)))
    if not out.to_file:
        return
    try:
        gs = harmonic_ground_state(args.omega, theta, args.ai)
        prow = [(args.omega, theta, args.ai, gs.A0, gs.B0, gs.C0, gs.lam_plus, gs.lam_minus)]
        out.write(Table(("omega", "theta", "a_i", "A0", "B0", "C0", "lam_plus", "lam_minus"), prow,
                        _meta(args, "ground_state_parameters", theta=theta)), "params")
    except DegenerateParameterError as exc:
        print(f"{PACKAGE}: no ground-state parameters: {exc}", file=sys.stderr)
    if theta < math.pi:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", NumericalWarning)
            norms = spectral_norm_generating_function(theta, args.nmax)
        nres = {"warnings": [str(w.message) for w in caught]}
        nrows = list(enumerate(norms.tolist()))
        out.write(Table(("n", "N_n"), nrows, _meta(args, "spectral_norms", nres, theta=theta)), "norms")


def cmd_compare(args, out: Output):
    from . import langevin

    theta = _angle(args)
    action = Action.quartic(args.lam, theta)
    cfg = _sim_config(args, action, args.checkpoints)
    m = _moments(args, cfg)
    ref = _reference_m2(action, m.t)
    t_c = langevin.detect_breakdown(m, ref, args.k_sigma, args.window, args.floor)
    res = {"t_c": t_c, "steps": m.steps, "n_kept": m.n_kept, "n_excluded": m.n_excluded,
           "backend": args.backend or langevin.BACKEND}
    gs_m2 = complex("nan")
    if not args.no_spectral:
        from . import spectral2d as s2

        if args.n_trunc:
            gs = s2.ground_state_vector(s2.build_fp_matrix(args.lam, theta, args.ai, args.n_trunc))
        else:
            gs = s2.converged_ground_state(args.lam, theta, args.ai)
        N = gs.N
        gs_m2, err = s2.ground_state_moments(gs, 2)
        res.update(spectral_N=N, spectral_E0=gs.E0, spectral_grid_error=err)
    rows = []
    for i, t in enumerate(m.t):
        mi, se = m.m(2)[i], m.se[2][i]
        flag = t_c is not None and t >= t_c
        rows.append((t, mi.real, mi.imag, se.real, se.imag, ref[i].real, ref[i].imag, gs_m2.real,
                     gs_m2.imag, flag))
    cols = ("t", "re_m2_langevin", "im_m2_langevin", "se_re_m2", "se_im_m2", "re_m2_borel",
            "im_m2_borel", "re_m2_spectral", "im_m2_spectral", "breakdown")
    out.write(Table(cols, rows, _meta(args, "compare_m2", res, theta=theta)))
    if t_c is None:
        print(f"{PACKAGE}: no breakdown detected up to t = {m.t[-1]:g}", file=sys.stderr)
    else:
        print(f"{PACKAGE}: breakdown flagged at t_c = {t_c:g}", file=sys.stderr)


COMMANDS = {
    "series": cmd_series,
    "borel": cmd_borel,
    "simulate": cmd_simulate,
    "breakdown-fit": cmd_breakdown_fit,
    "spectrum-1d": cmd_spectrum_1d,
    "spectrum-2d": cmd_spectrum_2d,
    "harmonic": cmd_harmonic,
    "compare": cmd_compare,
}


def main(argv: Sequence[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format=f"{PACKAGE}: %(message)s", stream=sys.stderr)
    out = Output(args.subcommand, args.output, args.format)
    try:
        COMMANDS[args.subcommand](args, out)
    except UsageError as exc:
        print(f"{PACKAGE}: {exc}", file=sys.stderr)
        return 1
    except InvalidParameterError as exc:
        print(f"{PACKAGE}: invalid parameter: {exc}", file=sys.stderr)
        return 1
    except (ClBorelError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"{PACKAGE}: numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"{PACKAGE}: cannot write output: {exc}", file=sys.stderr)
        return 1
    for path in out.written:
        log.info("wrote %s", path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
