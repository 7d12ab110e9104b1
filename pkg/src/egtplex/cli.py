"""Command-line entry point: ``egtplex run|compare|stats|weights|export-a``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from egtplex.benchmark import (
    GAMES,
    SOLVERS,
    ConfigError,
    RunConfig,
    build_problem,
    merge_runs,
    merged_csv,
    run_config,
    run_many,
)
from egtplex.dgf import make_weights
from egtplex.efg import GameError
from egtplex.treeplex import compute_stats

EXIT_NUMERIC = 3
EXIT_NOT_CONVERGED = 4


def _game_flags(p: argparse.ArgumentParser, required: bool) -> None:
    g = p.add_argument_group("game")
    g.add_argument("--game", choices=GAMES, required=required)
    g.add_argument("--cards", type=int, help="Leduc: number of ranks k (deck of 2k cards)")
    g.add_argument("--file", help="matrix: builtin name (rps, pennies) or text file; efg: game file")
    g.add_argument("--k", type=int, help="example1: actions per move")
    g.add_argument("--d", type=int, help="example1: moves per player")
    g.add_argument("--seed", type=int, help="example1: payoff seed")


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="egtplex", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="solve one game and write telemetry CSV")
    _game_flags(run, required=False)
    run.add_argument("--config", help="JSON run config; explicit flags override it")
    run.add_argument("--solver", choices=SOLVERS)
    run.add_argument("--weights", help="recurrence:c | new | corollary | corollary-scaled | old")
    run.add_argument("--mu-scale", type=_positive_float)
    run.add_argument("--mu-ratio", type=_positive_float)
    run.add_argument("--dgf-scale", type=_positive_float)
    run.add_argument("--target-eps", type=_positive_float)
    run.add_argument("--max-iters", type=_positive_int)
    run.add_argument("--checkpoint-every", type=_positive_int,
                     help="record every n iterations instead of powers of two")
    run.add_argument("--output", help="CSV path (default: standard output)")
    run.add_argument("--plot", action="store_true", help="also write a log-log PNG next to the CSV")
    run.add_argument("--no-timing", action="store_true", help="write wall_ms as 0 for byte-stable files")

    cmp_ = sub.add_parser("compare", help="run several configs and merge on the traversal axis")
    cmp_.add_argument("configs", nargs="+")
    cmp_.add_argument("--output", help="merged CSV path (default: standard output)")
    cmp_.add_argument("--plot", action="store_true")
    cmp_.add_argument("--no-timing", action="store_true")

    for name, text in (("stats", "treeplex statistics of both players"),
                       ("weights", "dump DGF weights as CSV"),
                       ("export-a", "dump the sequence-form payoff matrix as CSV")):
        p = sub.add_parser(name, help=text)
        _game_flags(p, required=True)
        if name == "weights":
            p.add_argument("--weights", default="new")
            p.add_argument("--player", choices=("x", "y"), default="x")
        p.add_argument("--output")
    return ap


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    if args.config:
        cfg = RunConfig.load(args.config)
    elif args.game is None:
        raise ConfigError("--game is required (or pass --config)")
    else:
        cfg = RunConfig(game=args.game, file=args.file)
    changes = dict(
        game=args.game, cards=args.cards, file=args.file, k=args.k, d=args.d, seed=args.seed,
        solver=args.solver, weights=args.weights, mu_scale=args.mu_scale,
        mu_ratio=args.mu_ratio, dgf_scale=args.dgf_scale, target_eps=args.target_eps,
        max_iters=args.max_iters, checkpoints=args.checkpoint_every, output=args.output,
    )
    return cfg.updated(**changes)


def _write(text: str, path: Optional[str]) -> None:
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _png_for(path: str) -> str:
    return str(Path(path).with_suffix(".png"))


def cmd_run(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    if args.plot and not cfg.output:
        raise ConfigError("--plot needs --output")
    out = run_config(cfg)
    _write(out.csv(timing=not args.no_timing), cfg.output)
    if args.plot:
        from egtplex.plotting import plot_curves

        plot_curves({cfg.name(): out.records}, _png_for(cfg.output), cfg.name())
    print(out.summary(), file=sys.stdout if cfg.output else sys.stderr)
    return EXIT_NOT_CONVERGED if out.converged is False else 0


def cmd_compare(args: argparse.Namespace) -> int:
    if args.plot and not args.output:
        raise ConfigError("--plot needs --output")
    configs = [RunConfig.load(p) for p in args.configs]
    names = [c.name() for c in configs]
    if len(set(names)) != len(names):
        raise ConfigError(f"config labels must be unique, got {names}")
    outcomes = run_many(configs)
    runs = {o.config.name(): o.records for o in outcomes}
    queries, columns = merge_runs(runs)
    _write(merged_csv(queries, columns), args.output)
    log = sys.stdout if args.output else sys.stderr
    if args.output:
        base = Path(args.output)
        for o in outcomes:
            per_run = base.with_name(f"{base.stem}.{o.config.name()}.csv")
            per_run.write_text(o.csv(timing=not args.no_timing), encoding="utf-8")
    if args.plot:
        from egtplex.plotting import plot_curves

        plot_curves(runs, _png_for(args.output), " vs ".join(runs))
    for o in outcomes:
        print(o.summary(), file=log)
    return 0


def _problem_from_args(args: argparse.Namespace):
    cfg = RunConfig(game=args.game, file=args.file).updated(
        cards=args.cards, k=args.k, d=args.d, seed=args.seed)
    return build_problem(cfg)


def cmd_stats(args: argparse.Namespace) -> int:
    problem = _problem_from_args(args)
    lines = ["player,simplexes,variables,M_Q,d_Q,m_max,M_Q_r"]
    for name, t in (("x", problem.X), ("y", problem.Y)):
        st = compute_stats(t)
        mr = " ".join(f"{v:g}" for v in st.M_Q_r)
        lines.append(f"{name},{len(t)},{t.num_variables},{st.M_Q:g},{st.d_Q},{st.m_max},{mr}")
    lines.append(f"# A: {problem.shape[0]}x{problem.shape[1]}, nnz={problem.A.nnz}, "
                 f"max |A_ij|={problem.A_norm:.6g}")
    _write("\n".join(lines) + "\n", args.output)
    return 0


def cmd_weights(args: argparse.Namespace) -> int:
    problem = _problem_from_args(args)
    t = problem.X if args.player == "x" else problem.Y
    _write(make_weights(t, args.weights).to_csv(), args.output)
    return 0


def cmd_export_a(args: argparse.Namespace) -> int:
    _write(_problem_from_args(args).to_csv(), args.output)
    return 0


COMMANDS = {"run": cmd_run, "compare": cmd_compare, "stats": cmd_stats,
            "weights": cmd_weights, "export-a": cmd_export_a}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, GameError, ValueError, OSError) as exc:
        parser.print_usage(sys.stderr)
        print(f"egtplex: error: {exc}", file=sys.stderr)
        return 2
    except FloatingPointError as exc:
        print(f"egtplex: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
