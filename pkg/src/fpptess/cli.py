"""Command-line experiment runner.

Every subcommand writes one table (CSV by default, JSON with ``--format json``)
whose header echoes the resolved configuration. Exit status is 0 on success,
2 for configuration errors and 3 for numerical failures.
"""

from __future__ import annotations

import argparse
import datetime
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .directional import parse_phi
from .errors import (
    CensoredResult,
    ConstructionUnsafe,
    InvalidParameter,
    NumericFailure,
    OutOfWindow,
    WindowTooSmall,
)
from .geometry import sphere_covering, uniform_sphere
from .hyperplanes import poisson_tail, sample_pht
from .io_utils import atomic_write_text, to_csv, to_json
from .marks import parse_marks
from .pht_fpp import (
    TimeConstantModel,
    deviation_experiment,
    direction_sweep,
    limit_shape,
    mu_many,
)
from .svg import emit_svg

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

TAIL_GRID_LAMBDAS = (0.5, 1.0, 2.0, 5.0, 10.0)
TAIL_GRID_FACTORS = (0.5, 1.0, 2.0)


class ConfigError(Exception):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _default_seed() -> int:
    env = os.environ.get("FPPTESS_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise ConfigError(f"FPPTESS_SEED must be an integer, got {env!r}")


def _model(args) -> TimeConstantModel:
    phi = parse_phi(args.phi)
    marks = parse_marks(args.marks, dim=phi.dim, allow_heavy=args.allow_heavy)
    return TimeConstantModel(args.gamma, phi, marks)


# --- subcommands ---------------------------------------------------------------
# each returns (columns, rows, extra_meta)

def cmd_pht_shape(args):
    model = _model(args)
    shape = limit_shape(model, args.dirs)
    rows = [{"ux": float(u[0]), "uy": float(u[1]), "radius": float(rad)}
            for u, rad in zip(shape.directions, shape.radii)]
    mus = 1.0 / shape.radii
    if args.svg:
        if model.dim != 2:
            raise InvalidParameter("SVG output is planar only")
        emit_svg(shape.boundary, args.svg, float(mus.min()), float(mus.max()),
                 title=f"limit shape gamma={args.gamma} phi={args.phi}")
    return ["ux", "uy", "radius"], rows, {"mu_min": float(mus.min()), "mu_max": float(mus.max())}


def cmd_pht_sweep(args):
    model = _model(args)
    if model.dim != 2:
        raise InvalidParameter("direction sweeps are planar")
    res = direction_sweep(model, args.r, args.dirs, args.reps, args.seed)
    rows = [{"ux": float(s.u[0]), "uy": float(s.u[1]), "r": s.r,
             "mean_tau_over_r": s.mean_tau_over_r, "stderr": s.stderr, "mu": s.mu} for s in res]
    return ["ux", "uy", "r", "mean_tau_over_r", "stderr", "mu"], rows, {}


def cmd_pht_deviation(args):
    model = _model(args)
    table = deviation_experiment(model, args.r, args.eps, args.reps, args.seed)
    rows = [{"r": row.r, "eps": row.eps, "n_reps": row.n_reps, "exceed_prob": row.exceed_prob,
             "reference_decay": row.reference_decay} for row in table.rows]
    return (["r", "eps", "n_reps", "exceed_prob", "reference_decay"], rows,
            {"m": table.m, "grid_sizes": sorted({row.grid_k for row in table.rows})})


def cmd_poisson_tail(args):
    if args.grid:
        cells = [(lam, f * lam, side) for side in ("lower", "upper")
                 for lam in TAIL_GRID_LAMBDAS for f in TAIL_GRID_FACTORS]
    else:
        if args.lam is None or args.x is None:
            raise InvalidParameter("--lambda and --x are required unless --grid is given")
        cells = [(args.lam, args.x, args.side)]
    rows = []
    for lam, x, side in cells:
        t = poisson_tail(lam, x, side)
        rows.append({"lambda": lam, "x": x, "side": side, "exact": t.exact,
                     "paper_bound": t.paper_bound, "chernoff_bound": t.chernoff_bound,
                     "violation": t.paper_violation,
                     "chernoff_violation": t.chernoff_violation})
    cols = ["lambda", "x", "side", "exact", "paper_bound", "chernoff_bound", "violation",
            "chernoff_violation"]
    return cols, rows, {}


def _tail_summary(rows) -> str:
    return "\n".join(
        f"lambda={r['lambda']:g} x={r['x']:g} side={r['side']} exact={r['exact']:.5g} "
        f"paper={r['paper_bound']:.5g} chernoff={r['chernoff_bound']:.5g} "
        f"VIOLATION={'true' if r['violation'] else 'false'}" for r in rows) + "\n"


def cmd_voronoi_ergodic(args):
    from .ergodic import ball_growth_series
    series = ball_growth_series(args.lam, args.n, args.seeds, args.seed, threads=args.threads)
    rows = []
    for i, s in enumerate(series.seeds):
        for k, n in enumerate(series.n_values):
            rows.append({
                "lambda": args.lam, "n": int(n), "seed": int(s),
                "ball_size": int(series.ball_sizes[i, k]),
                "ball_area": float(series.ball_areas[i, k]),
                "avg_area": float(series.averages["area"][i, k]),
                "avg_perimeter": float(series.averages["perimeter"][i, k]),
                "avg_neighbors": float(series.averages["neighbors"][i, k]),
                "censored": bool(series.censored[i, k]),
                "ratio": float(series.ball_sizes[i, k] / series.ball_areas[i, k]),
            })
    cols = ["lambda", "n", "seed", "ball_size", "ball_area", "avg_area", "avg_perimeter",
            "avg_neighbors", "censored", "ratio"]
    k = len(series.n_values) - 1
    summ = series.summary(k, series.ratio())
    return cols, rows, {"ratio_mean": summ.mean, "ratio_stderr": summ.stderr}


def cmd_voronoi_timeconst(args):
    from .tess_fpp import time_constant_estimate
    marks = parse_marks(args.marks, dim=2, allow_heavy=args.allow_heavy)
    if len(args.u) != 2:
        raise InvalidParameter("--u must have two components")
    u = np.asarray(args.u) / np.linalg.norm(args.u)
    est = time_constant_estimate(args.lam, marks, u, args.r, args.reps, args.seed)
    rows = [{"lambda": args.lam, "mark_spec": est.mark_spec, "ux": float(u[0]), "uy": float(u[1]),
             "r": float(r), "mean": float(m), "stderr": float(e), "n_censored": int(c)}
            for r, m, e, c in zip(est.r_values, est.means, est.stderrs, est.n_censored)]
    return ["lambda", "mark_spec", "ux", "uy", "r", "mean", "stderr", "n_censored"], rows, {}


def cmd_tameness(args):
    from .tameness import compute_fields, compute_W, greedy_animal_max
    from .tess_fpp import assign_marks
    from .voronoi import sample_voronoi, window_for
    rows = []
    for delta in args.delta:
        R_safe = math.sqrt(2.0) * delta * (args.box + 2) + 1e-9
        if args.model == "voronoi":
            t = sample_voronoi(args.lam, window_for(args.lam, R_safe), R_safe, seed=args.seed)
            if args.field in ("Y", "U"):
                Y, U = compute_fields(t, delta, args.box)
                field = Y if args.field == "Y" else U
            else:
                marks = parse_marks(args.marks, dim=2, allow_heavy=args.allow_heavy)
                field = compute_W(assign_marks(t, marks, args.seed + 1), delta, args.rho, args.box)
        else:
            if args.field != "W":
                raise InvalidParameter("the hyperplane model supports the W field only")
            phi = parse_phi(args.phi)
            marks = parse_marks(args.marks, dim=phi.dim, allow_heavy=args.allow_heavy)
            s = sample_pht(args.gamma, phi, R_safe, marks, args.seed)
            field = compute_W(s, delta, args.rho, args.box)
        stat = greedy_animal_max(field, args.n, args.restarts, args.seed)
        rows.append({"model": f"{args.model}/{args.field}", "delta": delta, "rho": args.rho,
                     "n": args.n, "greedy_max_avg": stat.greedy_max_avg,
                     "n_restarts": stat.n_restarts, "seed": args.seed})
    cols = ["model", "delta", "rho", "n", "greedy_max_avg", "n_restarts", "seed"]
    return cols, rows, {"note": "greedy_max_avg is a lower bound on the lattice-animal maximum"}


def cmd_covering(args):
    rng = np.random.default_rng(args.seed)
    rows = []
    for delta in args.delta:
        cov = sphere_covering(args.d, delta)
        pts = uniform_sphere(rng, args.samples, args.d)
        covered = int(cov.covers(pts).sum())
        rows.append({"d": args.d, "delta": delta, "k": cov.k, "c1": cov.c1, "bound": cov.bound,
                     "n_samples": args.samples, "covered": covered})
    return ["d", "delta", "k", "c1", "bound", "n_samples", "covered"], rows, {}


# --- parser --------------------------------------------------------------------

def _add_common(p, seed_default):
    p.add_argument("--seed", type=int, default=seed_default,
                   help="master seed (default: $FPPTESS_SEED or 0)")
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--no-timestamp", action="store_true", help="omit the timestamp header line")
    p.add_argument("--threads", type=int, default=1)


def _add_pht_model(p):
    p.add_argument("--gamma", type=float, default=math.pi)
    p.add_argument("--phi", default="isotropic")
    p.add_argument("--marks", default="det:1.0")
    p.add_argument("--allow-heavy", action="store_true",
                   help="accept mark laws without a finite moment above the dimension")


def build_parser(seed_default: int = 0) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fpptess", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"fpptess {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pht-shape", help="limit shape of the hyperplane model")
    _add_pht_model(p)
    p.add_argument("--dirs", type=int, default=64)
    p.add_argument("--svg", help="also write an SVG plot here")
    p.set_defaults(func=cmd_pht_shape)

    p = sub.add_parser("pht-sweep", help="Monte Carlo tau/r per direction")
    _add_pht_model(p)
    p.add_argument("--r", type=float, default=100.0)
    p.add_argument("--dirs", type=int, default=16)
    p.add_argument("--reps", type=int, default=200)
    p.set_defaults(func=cmd_pht_sweep)

    p = sub.add_parser("pht-deviation", help="deviation probabilities over a direction grid")
    _add_pht_model(p)
    p.add_argument("--r", type=_floats, default=[20.0, 40.0, 80.0])
    p.add_argument("--eps", type=_floats, default=[0.5])
    p.add_argument("--reps", type=int, default=2000)
    p.set_defaults(func=cmd_pht_deviation)

    p = sub.add_parser("poisson-tail", help="exact Poisson tails against two bounds")
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--x", type=float)
    p.add_argument("--side", choices=("upper", "lower"), default="upper")
    p.add_argument("--grid", action="store_true", help="evaluate the standard 15-cell grid per side")
    p.set_defaults(func=cmd_poisson_tail)

    p = sub.add_parser("voronoi-ergodic", help="graph-ball ergodic averages")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--n", type=_ints, default=[30])
    p.add_argument("--seeds", type=int, default=100)
    p.set_defaults(func=cmd_voronoi_ergodic)

    p = sub.add_parser("voronoi-timeconst", help="time constant of Voronoi FPP")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--marks", default="det:1.0")
    p.add_argument("--allow-heavy", action="store_true")
    p.add_argument("--u", type=_floats, default=[1.0, 0.0])
    p.add_argument("--r", type=_floats, default=[10.0, 20.0, 40.0])
    p.add_argument("--reps", type=int, default=50)
    p.set_defaults(func=cmd_voronoi_timeconst)

    p = sub.add_parser("tameness", help="grid fields and greedy lattice-animal statistics")
    p.add_argument("--model", choices=("voronoi", "pht"), default="voronoi")
    p.add_argument("--field", choices=("Y", "U", "W"), default="U")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=math.pi)
    p.add_argument("--phi", default="isotropic")
    p.add_argument("--marks", default="det:1.0")
    p.add_argument("--allow-heavy", action="store_true")
    p.add_argument("--delta", type=_floats, default=[5.0])
    p.add_argument("--rho", type=float, default=1.0)
    p.add_argument("--box", type=int, default=8)
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--restarts", type=int, default=100)
    p.set_defaults(func=cmd_tameness)

    p = sub.add_parser("covering", help="sphere coverings and their size bound")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--delta", type=_floats, default=[1.0, 0.5, 0.1])
    p.add_argument("--samples", type=int, default=100000)
    p.set_defaults(func=cmd_covering)

    for name, sp in sub.choices.items():
        _add_common(sp, seed_default)
    return parser


def _resolved_config(args) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k not in ("func", "out", "no_timestamp")}
    return json.loads(json.dumps(cfg, default=str))


def run(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    try:
        seed_default = _default_seed()
    except ConfigError as exc:
        print(f"fpptess: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    parser = build_parser(seed_default)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.threads < 1:
            raise InvalidParameter("--threads must be >= 1")
        cols, rows, meta = args.func(args)
        config = _resolved_config(args)
        header = [f"fpptess {__version__}"]
        if not args.no_timestamp:
            header.append("timestamp: " + datetime.datetime.now(datetime.timezone.utc)
                          .isoformat(timespec="seconds"))
        header.append("config: " + json.dumps(config, sort_keys=True))
        if meta:
            header.append("meta: " + json.dumps(meta, sort_keys=True))
        if args.format == "csv":
            text = to_csv(cols, rows, header)
        else:
            doc = {"version": __version__, "config": config, "meta": meta}
            if not args.no_timestamp:
                doc["timestamp"] = header[1].split(": ", 1)[1]
            text = to_json(cols, rows, doc)
        if args.out:
            atomic_write_text(args.out, text)
            if args.command == "poisson-tail":
                stdout.write(_tail_summary(rows))
        elif args.command == "poisson-tail" and args.format == "csv":
            stdout.write(_tail_summary(rows))
        else:
            stdout.write(text)
        return EXIT_OK
    except (InvalidParameter, ConstructionUnsafe, WindowTooSmall, OutOfWindow, OSError) as exc:
        print(f"fpptess: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericFailure, CensoredResult, FloatingPointError) as exc:
        print(f"fpptess: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
