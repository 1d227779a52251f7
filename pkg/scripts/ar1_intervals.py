"""Coverage of the AR(1) confidence intervals in both regimes over a kappa grid.

    python scripts/ar1_intervals.py --theta 0.5 --n 2000 --reps 5000
"""

import argparse

from mdlab import ar1, mc


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--theta", type=float, default=0.5)
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--reps", type=int, default=5000)
    ap.add_argument("--seed", type=int, default=3)
    ap.add_argument("--workers", type=int, default=mc.default_workers())
    ap.add_argument("--noise", choices=["uniform", "two_point"], default="uniform")
    args = ap.parse_args()

    noise = ar1.NoiseDistribution(args.noise, 1.0)
    cfg = mc.McConfig(ar1.Ar1Params(args.theta, noise, args.n), args.reps, args.seed, args.workers)
    for kappa in (0.2, 0.1, 0.05, 0.01):
        for regime in ar1.REGIMES:
            est = mc.coverage_experiment(cfg, kappa, regime)
            print(f"kappa={kappa:<5g} {regime:11s} coverage={est.coverage:.4f} "
                  f"[{est.binom_lo:.4f}, {est.binom_hi:.4f}] target>={1 - kappa:g}")


if __name__ == "__main__":
    main()
