"""Command-line entry point: ``rssibeam <subcommand> --config <path> [options]``.

Exit codes: 0 success, 1 configuration or input error, 2 runtime error.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .config import EXPERIMENTS, ConfigError, ExperimentConfig, load_config
from .experiments import COMMANDS, cmd_replay, cmd_theta
from .feedback import TraceFormatError

EXIT_OK, EXIT_INPUT, EXIT_RUNTIME = 0, 1, 2


def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError(f"seed must be in [0, 2**64), got {v}")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rssibeam", description="RSSI-feedback energy beamforming experiments.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        s = sub.add_parser(name, help=f"run the {name} experiment")
        s.add_argument("--config", help="key = value configuration file")
        s.add_argument("--out", help="CSV output path (default: stdout)")
        s.add_argument("--seed", type=_u64, help="overrides the config seed")
        s.add_argument("--trials", type=_positive, help="overrides the config trial count")
        s.add_argument("--workers", type=_positive, help="worker processes (results do not depend on it)")
    s = sub.add_parser("replay", help="estimate phases from a recorded slot,mini_slot,theta,rssi trace")
    s.add_argument("--trace", required=True, help="trace CSV path, or - for stdin")
    s.add_argument("--out", help="CSV output path (default: stdout)")
    s = sub.add_parser("theta", help="print the equally spaced training phases for N")
    s.add_argument("--n", type=_positive, required=True)
    s.add_argument("--out", help="CSV output path (default: stdout)")
    return p


def _experiment_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    overrides = {k: getattr(args, k) for k in ("seed", "trials", "workers", "out") if getattr(args, k) is not None}
    return replace(cfg, **overrides).resolved(args.command)


def _emit(table, out: str | None) -> None:
    if out:
        table.write(out)
    else:
        sys.stdout.write(table.to_csv())
    for line in table.summary:
        print(line, file=sys.stderr)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = getattr(args, "out", None)
    try:
        if args.command == "theta":
            table = cmd_theta(args.n)
        elif args.command == "replay":
            try:
                source = sys.stdin if args.trace == "-" else args.trace
                table = cmd_replay(source, source_name=args.trace)
            except (TraceFormatError, ValueError, OSError) as exc:
                print(f"rssibeam replay: {exc}", file=sys.stderr)
                return EXIT_INPUT
        else:
            cfg = _experiment_config(args)
            out = cfg.out
            table = COMMANDS[args.command](cfg)
        _emit(table, out)
    except ConfigError as exc:
        print(f"rssibeam {args.command}: config error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001 - top-level reporting
        print(f"rssibeam {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
