"""Normalized gap (bound - estimate) / (Phi_bar^{n-1}(u) phi(u)) across levels.

The gap should shrink with u because the bound's error decays exponentially
faster than its crossing term.

    python3 scripts/sharpness_sweep.py --n 2 --reps 1000000
"""
import argparse
import math

from gauss_conjunction import cli


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--levels", type=float, nargs="+", default=[1.0, 1.5, 2.0, 2.5])
    p.add_argument("--reps", type=int, default=1_000_000)
    p.add_argument("--grid-points", type=int, default=2049)
    p.add_argument("--lengthscale", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=2001)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--output", default=None, help="optional CSV report path")
    args = p.parse_args()

    cfg = cli.resolve_config({
        "command": "sweep", "u": args.levels, "reps": args.reps, "grid_points": args.grid_points,
        "seed": args.seed, "plot_data": True,
        "processes": {"T": 1.0, "independent": [{"type": "se", "lengthscale": args.lengthscale}] * args.n},
    })
    report = cli.run(cfg, args.threads)
    if args.output:
        cli.write_report(report, args.output, "csv")

    rows = report.rows
    print(f"{'u':>4} {'gap':>9} {'stderr':>9}  step")
    for k, r in enumerate(rows):
        step = ""
        if k:
            prev = rows[k - 1]
            slack = 2 * math.hypot(r["gap_stderr"], prev["gap_stderr"])
            step = "nonincreasing" if r["gap_normalized"] <= prev["gap_normalized"] + slack else "INCREASE"
        print(f"{r['u']:>4g} {r['gap_normalized']:>9.4f} {r['gap_stderr']:>9.4f}  {step}")


if __name__ == "__main__":
    main()
