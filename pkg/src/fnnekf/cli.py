"""Command-line front end: simulate, compare, train, infer."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .config import load_config
from .errors import ConfigError, DivergenceError, NumericalFailure
from .fuzzy import infer, load_fis_params, save_fis_params
from .output import write_summary, write_trace
from .simulate import AXES, FilterMode, monte_carlo, run_trial
from .training import TrainConfig, load_training_csv, train


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fnnekf",
        description="Adaptive EKF localization simulator with fuzzy noise tuning.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one trial and write its trace CSV")
    sim.add_argument("--config", required=True, type=Path)
    sim.add_argument("--mode", required=True, choices=[m.value for m in FilterMode])
    sim.add_argument("--out", required=True, type=Path)

    cmp_ = sub.add_parser("compare", help="paired Monte Carlo of both filter modes")
    cmp_.add_argument("--config", required=True, type=Path)
    cmp_.add_argument("--runs", type=int, default=None, help="override run.runs")
    cmp_.add_argument("--seed", type=int, default=None, help="override run.seed")
    cmp_.add_argument("--out", required=True, type=Path)

    tr = sub.add_parser("train", help="fit membership parameters to a CSV dataset")
    tr.add_argument("--data", required=True, type=Path)
    tr.add_argument("--init", required=True, type=Path)
    tr.add_argument("--out", required=True, type=Path)
    tr.add_argument("--eta", type=float, default=0.01)
    tr.add_argument("--epochs", type=int, default=500)
    tr.add_argument("--seed", type=int, default=0)

    inf = sub.add_parser("infer", help="evaluate the fuzzy adjustment at one mismatch")
    inf.add_argument("--fis", required=True, type=Path)
    inf.add_argument("--d", required=True, type=float)
    return parser


def _cmd_simulate(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    fis = load_fis_params(cfg.fis_path)
    trace = run_trial(
        cfg.trajectory, cfg.sim_config(), FilterMode(args.mode), fis, cfg.seed
    )
    args.out.mkdir(parents=True, exist_ok=True)
    out_path = args.out / f"trace_{args.mode}.csv"
    write_trace(trace, out_path)
    print(f"wrote {out_path} ({len(trace)} steps)")
    return 0


def _cmd_compare(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    fis = load_fis_params(cfg.fis_path)
    runs = args.runs if args.runs is not None else cfg.runs
    seed = args.seed if args.seed is not None else cfg.seed
    summary = monte_carlo(
        cfg.trajectory, cfg.sim_config(), list(FilterMode), fis, runs, seed
    )
    summary = replace(summary, config_echo=cfg.echo())
    args.out.mkdir(parents=True, exist_ok=True)
    out_path = args.out / "summary.json"
    write_summary(summary, out_path)
    print(f"wrote {out_path}")
    for name, mode in summary.modes.items():
        means = "  ".join(f"{axis}={mode.run_mean[axis]:.6f}" for axis in AXES)
        print(f"{name:>8s} run-mean RMSE: {means}")
    return 0


def _cmd_train(args: argparse.Namespace) -> int:
    data = load_training_csv(args.data)
    fis = load_fis_params(args.init)
    cfg = TrainConfig(learning_rate=args.eta, epochs=args.epochs, shuffle_seed=args.seed)
    tuned, history = train(fis, data, cfg)
    save_fis_params(tuned, args.out)
    print(f"wrote {args.out} (loss {history[0]:.6g} -> {history[-1]:.6g})")
    return 0


def _cmd_infer(args: argparse.Namespace) -> int:
    fis = load_fis_params(args.fis)
    print(f"{infer(args.d, fis):.9f}")
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "compare": _cmd_compare,
    "train": _cmd_train,
    "infer": _cmd_infer,
}


def cli_dispatch(argv: list[str]) -> int:
    """Parse arguments and run a subcommand; returns the process exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, NumericalFailure, DivergenceError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
