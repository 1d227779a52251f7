"""Kolmogorov distance of the normalized ERW martingale against N(0, 1) over n.

Fits d(n) ~ c ln(n) / sqrt(n) and prints c_hat with the DKW noise floor.

    python scripts/berry_esseen_rate.py --p 0.5 --reps 20000
"""

import argparse

from mdlab import erw, mc


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p", type=float, default=0.5)
    ap.add_argument("--reps", type=int, default=20_000)
    ap.add_argument("--seed", type=int, default=11)
    ap.add_argument("--workers", type=int, default=mc.default_workers())
    ap.add_argument("--ns", type=int, nargs="+", default=[50, 100, 300, 1000, 3000])
    ap.add_argument("--normalizer", default="deterministic")
    args = ap.parse_args()

    steps = erw.StepDistribution.two_point(0.5, 1.5, 0.5)
    points = []
    for n in args.ns:
        cfg = mc.McConfig(erw.ErwParams(p=args.p, n=n, steps=steps), args.reps,
                          args.seed, args.workers, statistic_mode=args.normalizer)
        est = mc.berry_esseen_distance(cfg)
        points.append((n, est.d_sup))
        print(f"n={n:<6d} d_sup={est.d_sup:.5f}  dkw={est.dkw_bound:.5f}")
    fit = mc.rate_fit(points)
    print(f"c_hat={fit.c_hat:.4f}")


if __name__ == "__main__":
    main()
