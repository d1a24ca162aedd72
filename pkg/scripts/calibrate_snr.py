"""Compare the N = 3 RMSE under both SNR conventions with a reference value.

Prints, for each convention, the RMSE at the requested SNR and the SNR at
which that convention would give the reference RMSE (by bisection on the
Monte Carlo curve with common random numbers).
"""
import argparse
import math

from rssibeam.config import SNR_CONVENTIONS, ExperimentConfig
from rssibeam.experiments import cmd_rmse_sweep


def rmse(conv: str, snr_db: float, trials: int, seed: int, n: int) -> float:
    cfg = ExperimentConfig(seed=seed, trials=trials, n=(n,), snr_db=(snr_db,), snr_convention=conv)
    return cmd_rmse_sweep(cfg).rows[0][4]


def main(argv=None) -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--target-deg", type=float, default=7.88)
    p.add_argument("--snr-db", type=float, default=10.0)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=6)
    args = p.parse_args(argv)
    print(f"target {args.target_deg} deg at N={args.n}, {args.snr_db} dB")
    for conv in SNR_CONVENTIONS:
        at = rmse(conv, args.snr_db, args.trials, args.seed, args.n)
        lo, hi = -10.0, 40.0
        for _ in range(30):
            mid = (lo + hi) / 2
            if rmse(conv, mid, args.trials, args.seed, args.n) > args.target_deg:
                lo = mid
            else:
                hi = mid
        ok = abs(at - args.target_deg) <= 1.5
        print(
            f"{conv:28s} rmse {at:7.3f} deg ({'within' if ok else 'outside'} +-1.5)"
            f"  target reached at {(lo + hi) / 2:6.2f} dB"
        )
    print(f"small-error prediction at this SNR: {math.degrees(math.sqrt(2 / args.n * 10 ** (-args.snr_db / 10))):.3f} deg")


if __name__ == "__main__":
    main()
