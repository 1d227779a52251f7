"""Tail-ratio sweep for the elephant random walk across memory regimes.

Prints one block per p with upper and lower ratios P(stat >= x) / (1 - Phi(x))
and their Wilson bands, for both normalizers.

    python scripts/erw_regimes.py --n 2000 --reps 20000
"""

import argparse

from mdlab import erw, mc


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--reps", type=int, default=20_000)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--workers", type=int, default=mc.default_workers())
    ap.add_argument("--p", type=float, nargs="+", default=[0.25, 0.5, 0.6, 0.75])
    args = ap.parse_args()

    steps = erw.StepDistribution.two_point(0.5, 1.5, 0.5)
    grid = (0.5, 1.0, 1.5, 2.0, 2.5)
    for p in args.p:
        model = erw.ErwParams(p=p, n=args.n, steps=steps)
        env = erw.theoretical_envelope(p, args.n)
        base = mc.McConfig(model, args.reps, args.seed, args.workers, grid)
        records = mc.replicate_records(base)
        print(f"p={p}  regime={env.regime}  eps_n={env.epsilon_n:.3g}")
        for mode in ("deterministic", "self_normalized"):
            cfg = mc.McConfig(model, args.reps, args.seed, args.workers, grid, mode)
            for e in mc.tail_ratios(mc.statistics_from_records(cfg, records), grid):
                print(f"  {mode:16s} {e.side:5s} x={e.x:<4g} ratio={e.ratio:.3f} "
                      f"[{e.ratio_lo:.3f}, {e.ratio_hi:.3f}]")


if __name__ == "__main__":
    main()
