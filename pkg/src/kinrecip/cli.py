"""Command-line harness: equilibrium curves, island simulations and checks.

Every subcommand writes one table (CSV with a ``#`` comment header, or JSON)
that records the resolved configuration and package version, so a file is
enough to rerun the experiment.  Options may also come from a flat
``key = value`` file given with ``--config``; flags on the command line win.
"""
from __future__ import annotations

import argparse
import configparser
import io
import json
import math
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .games import GameSpec
from .island import SimConfig, dispersal_from_relatedness, run, run_grid
from .spe import sweep
from .verify import run_all

STRATEGY_NAMES = ("AllC", "AllD", "GRIM")
B5 = "2,1.8,1.6,1.4,1.2"
# paths and worker counts do not change results, so they stay out of headers
_UNRECORDED = {"config", "out", "timeseries", "threads", "func", "command"}


def _floats(text: str) -> tuple[float, ...]:
    try:
        values = tuple(float(x) for x in str(text).split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _fmt(x) -> str:
    if x is None:
        return "NA"
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        if math.isinf(x):
            return "INF" if x > 0 else "-INF"
        if math.isnan(x):
            return "NA"
        return "%.9g" % x
    return str(x)


def _json_value(x):
    if isinstance(x, (np.floating, float)):
        x = float(x)
        if math.isinf(x):
            return "INF" if x > 0 else "-INF"
        return None if math.isnan(x) else x
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, tuple):
        return [_json_value(v) for v in x]
    return x


def _resolved(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in _UNRECORDED}


def render(args, columns: Sequence[str], rows: Sequence[Sequence]) -> str:
    config = _resolved(args)
    if args.format == "json":
        doc = {
            "version": __version__,
            "command": args.command,
            "config": {k: _json_value(v) for k, v in config.items()},
            "columns": list(columns),
            "rows": [dict(zip(columns, (_json_value(v) for v in row))) for row in rows],
        }
        return json.dumps(doc, indent=2) + "\n"
    buf = io.StringIO()
    buf.write(f"# kinrecip {__version__}\n# command = {args.command}\n")
    for key, value in config.items():
        text = ",".join(_fmt(v) for v in value) if isinstance(value, tuple) else _fmt(value)
        buf.write(f"# {key} = {text}\n")
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def _write(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
        return
    Path(path).write_text(text, encoding="utf-8", newline="\n")


def _grid(lo: float, hi: float, points: int, name: str) -> np.ndarray:
    if points < 1:
        raise ValueError(f"--{name}-points must be positive")
    if points == 1:
        if lo != hi:
            raise ValueError(f"a single {name} point needs --{name}-min equal to --{name}-max")
        return np.array([lo])
    if not hi > lo:
        raise ValueError(f"--{name}-max must exceed --{name}-min")
    grid = np.linspace(lo, hi, points)
    grid[-1] = hi
    return grid


def _spe_spec(args) -> GameSpec:
    if args.command == "spe-pd2":
        return GameSpec.pd2(args.b, args.c)
    if args.command == "spe-pdn":
        return GameSpec.pdn(args.b, args.c)
    return GameSpec.pgg(args.b, args.c, args.v)


def cmd_spe(args) -> int:
    spec = _spe_spec(args)
    grid = _grid(args.r_min, args.r_max, args.r_points, "r")
    reports = sweep(spec, args.omega, grid)
    n = spec.n
    columns = ["r", "regime", "m", "omega_star", "sustained"]
    for key in ("gamma", "strategy", "payoff", "omega_star"):
        columns += [f"{key}_{i + 1}" for i in range(n)]
    rows = []
    for rep in reports:
        per_player = []
        for i, w in enumerate(rep.per_player_omega_star):
            # a GRIM candidate without punishers can never be held to cooperation
            lone = w is None and rep.profile[i].label != "AllC"
            per_player.append(math.inf if lone else w)
        rows.append(
            [rep.r, rep.regime.value, rep.m, rep.omega_star, rep.full_cooperation]
            + list(rep.gammas)
            + [s.label for s in rep.profile]
            + list(rep.payoffs)
            + per_player
        )
    _write(args.out, render(args, columns, rows))
    return 0


def _sim_config(args, d: float) -> SimConfig:
    return SimConfig(
        G=args.G,
        N=args.N,
        omega=args.omega,
        b1=args.b1,
        b2=args.b2,
        c1=args.c1,
        c2=args.c2,
        lam=args.lam,
        d=float(d),
        mu=args.mu,
        T=args.T,
        runs=args.runs,
        seed=args.seed,
        init=args.init,
        report_window=args.report_window,
        mutate_to_other=args.mutate_to_other,
        sampled_rounds=args.sampled_rounds,
        migration=args.migration,
    )


SIM_COLUMNS = (
    ["d", "r"]
    + [f"p{k}_{s}" for k in (1, 2) for s in STRATEGY_NAMES]
    + ["coop"]
    + [f"se_p{k}_{s}" for k in (1, 2) for s in STRATEGY_NAMES]
    + ["se_coop", "runs", "T", "seed"]
)


def _sim_row(metrics) -> list:
    cfg = metrics.config
    return (
        [cfg.d, cfg.r]
        + list(metrics.mean_freqs.ravel())
        + [metrics.cooperation_rate]
        + list(metrics.se_freqs.ravel())
        + [metrics.cooperation_se, metrics.runs, cfg.T, cfg.seed]
    )


def _write_timeseries(args, k: int, metrics) -> None:
    columns = ["generation"] + [f"p{j}_{s}" for j in (1, 2) for s in STRATEGY_NAMES] + ["coop"]
    freqs = metrics.freqs.mean(axis=0).reshape(metrics.freqs.shape[1], -1)
    coop = metrics.coop.mean(axis=0)
    rows = [[t + 1, *freqs[t], coop[t]] for t in range(len(coop))]
    path = f"{args.timeseries}_{k:03d}.{args.format}"
    _write(path, render(args, columns, rows))


def _sim_dispersals(args) -> np.ndarray:
    if args.command == "simulate":
        if args.r is not None:
            return np.array([dispersal_from_relatedness(args.r, args.N)])
        return np.array([args.d])
    if args.d_values is not None:
        values = np.array(args.d_values)
    elif args.r_values is not None:
        values = np.array([dispersal_from_relatedness(r, args.N) for r in args.r_values])
    elif any(x is not None for x in (args.d_min, args.d_max, args.d_points)):
        values = _grid(
            0.0 if args.d_min is None else args.d_min,
            1.0 if args.d_max is None else args.d_max,
            11 if args.d_points is None else args.d_points,
            "d",
        )
    else:
        rs = _grid(args.r_min, args.r_max, args.r_points, "r")
        values = np.array([dispersal_from_relatedness(r, args.N) for r in rs])
    if np.any((values < 0) | (values > 1)):
        raise ValueError("dispersal values must lie in [0, 1]")
    return values


def cmd_simulate(args) -> int:
    dispersals = _sim_dispersals(args)
    base = _sim_config(args, dispersals[0])
    if args.command == "simulate":
        results = [run(base, threads=args.threads)]
    else:
        results = run_grid(base, dispersals, threads=args.threads)
    if args.timeseries:
        for k, metrics in enumerate(results):
            _write_timeseries(args, k, metrics)
    _write(args.out, render(args, SIM_COLUMNS, [_sim_row(m) for m in results]))
    return 0


def cmd_verify(args) -> int:
    results = run_all(args.draws, args.seed, families=args.families, max_ratio=args.max_ratio)
    columns = ["property", "passed", "checked", "out_of_domain", "failures", "worst_discrepancy"]
    rows = [[p.as_dict()[c] for c in columns] for p in results]
    _write(args.out, render(args, columns, rows))
    return 0 if all(p.passed for p in results) else 1


def _common(parser: argparse.ArgumentParser, seed_default: int = 0) -> None:
    parser.add_argument("--config", help="flat key = value file; command-line flags override it")
    parser.add_argument("--out", default="-", help="output path, '-' for stdout (default)")
    parser.add_argument("--format", choices=("csv", "json"), default="csv")
    parser.add_argument("--seed", type=_seed, default=seed_default)
    parser.add_argument("--threads", type=int, default=1, help="worker processes for replicates")


def _r_grid(parser, lo=0.0, hi=1.0, points=101) -> None:
    parser.add_argument("--r-min", type=float, default=lo)
    parser.add_argument("--r-max", type=float, default=hi)
    parser.add_argument("--r-points", type=int, default=points)


def _sim_options(parser) -> None:
    parser.add_argument("--G", type=int, default=200, help="number of islands")
    parser.add_argument("--N", type=int, default=10, help="individuals per island (even)")
    parser.add_argument("--omega", type=float, default=0.9)
    parser.add_argument("--b1", type=float, default=3.0)
    parser.add_argument("--b2", type=float, default=3.0)
    parser.add_argument("--c1", type=float, default=0.5)
    parser.add_argument("--c2", type=float, default=1.0)
    parser.add_argument("--lam", type=float, default=1.0, help="selection strength")
    parser.add_argument("--mu", type=float, default=0.0, help="per-locus mutation rate")
    parser.add_argument("--T", type=int, default=10_000, help="generations per run")
    parser.add_argument("--runs", type=int, default=100)
    parser.add_argument("--report-window", type=int, default=100)
    parser.add_argument(
        "--init", type=_floats, default=None,
        help="initial AllC,AllD,GRIM frequencies at both loci (default uniform)",
    )
    parser.add_argument("--migration", choices=("backward", "pool"), default="backward")
    parser.add_argument("--mutate-to-other", action="store_true")
    parser.add_argument("--sampled-rounds", action="store_true")
    parser.add_argument("--timeseries", help="prefix for per-point generation-by-generation files")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kinrecip", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"kinrecip {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    games = {
        "spe-pd2": ("2-person donation game", "3,3", "0.5,1"),
        "spe-pdn": ("n-person prisoner's dilemma", B5, "1,1,1,1,1"),
        "spe-pgg": ("n-person public goods game", B5, "1,1,1,1,1"),
    }
    for name, (title, b, c) in games.items():
        p = sub.add_parser(name, help=f"critical omega and equilibrium profile over r, {title}")
        _common(p)
        p.add_argument("--b", type=_floats, default=b, help="benefits, comma-separated")
        p.add_argument("--c", type=_floats, default=c, help="costs, comma-separated")
        if name == "spe-pgg":
            p.add_argument("--v", type=_floats, default=None, help="shares (default equal)")
        p.add_argument("--omega", type=float, default=0.9, help="continuation probability")
        _r_grid(p)
        p.set_defaults(func=cmd_spe)

    p = sub.add_parser("simulate", help="island simulation at a single dispersal rate")
    _common(p)
    _sim_options(p)
    where = p.add_mutually_exclusive_group()
    where.add_argument("--d", type=float, default=1.0, help="dispersal rate")
    where.add_argument("--r", type=float, default=None, help="target relatedness (sets d)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep-sim", help="island simulations over an r or d grid")
    _common(p)
    _sim_options(p)
    _r_grid(p, points=11)
    p.add_argument("--d-min", type=float, default=None)
    p.add_argument("--d-max", type=float, default=None)
    p.add_argument("--d-points", type=int, default=None)
    p.add_argument("--r-values", type=_floats, default=None, help="explicit r grid")
    p.add_argument("--d-values", type=_floats, default=None, help="explicit d grid")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="closed forms against the brute-force oracle")
    _common(p)
    p.add_argument("--draws", type=int, default=1000, help="random draws per suite")
    p.add_argument(
        "--families", type=lambda s: tuple(x.strip().lower() for x in s.split(",")),
        default=("pd2", "pdn", "pgg"),
    )
    p.add_argument(
        "--max-ratio", type=float, default=1.2,
        help="upper bound on drawn c/b; values above 1 exercise the out-of-domain filter",
    )
    p.set_defaults(func=cmd_verify)
    return parser


def _subparser(parser, command):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[command]
    raise KeyError(command)


def _apply_config_file(parser, argv) -> None:
    """Install ``key = value`` pairs from ``--config`` as subcommand defaults."""
    first, _ = parser.parse_known_args(argv)
    path = getattr(first, "config", None)
    if not path:
        return
    sub = _subparser(parser, first.command)
    text = Path(path).read_text(encoding="utf-8")
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    cp.read_string("[config]\n" + text)
    actions = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, value in cp["config"].items():
        dest = key.strip().lstrip("-").replace("-", "_")
        if dest not in actions or dest in ("config", "help"):
            sub.error(f"unknown key {key!r} in {path}")
        action = actions[dest]
        if isinstance(action, argparse._StoreTrueAction):
            state = value.strip().lower()
            if state not in cp.BOOLEAN_STATES:
                sub.error(f"{key} must be true or false in {path}")
            defaults[dest] = cp.BOOLEAN_STATES[state]
        else:
            # argparse applies the option's type to string defaults
            defaults[dest] = value.strip()
    sub.set_defaults(**defaults)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        _apply_config_file(parser, argv)
    except (OSError, configparser.Error) as exc:
        print(f"kinrecip: error: {exc}", file=sys.stderr)
        return 2
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"kinrecip: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
