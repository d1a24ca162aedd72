"""Run every experiment configuration and write the CSVs into one directory.

    python scripts/run_all.py --out results/ [--workers 4]
"""
import argparse
import sys
from pathlib import Path

from rssibeam.cli import main as cli_main
from rssibeam.config import load_config

CONFIG_DIR = Path(__file__).parent / "configs"


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default="results")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--only", nargs="*", help="config stems to run (default: all)")
    args = p.parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    status = 0
    for cfg_path in sorted(CONFIG_DIR.glob("*.cfg")):
        if args.only and cfg_path.stem not in args.only:
            continue
        command = load_config(cfg_path).experiment
        target = out / f"{cfg_path.stem}.csv"
        print(f"{cfg_path.stem}: {command} -> {target}", file=sys.stderr)
        rc = cli_main([command, "--config", str(cfg_path), "--out", str(target), "--workers", str(args.workers)])
        status = max(status, rc)
    return status


if __name__ == "__main__":
    sys.exit(main())
