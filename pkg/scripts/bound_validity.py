"""MC conjunction probability vs the closed-form bound for 2 and 3 independent SE processes.

Prints one row per (n, u) and writes a CSV report per n via the CLI machinery.

    python3 scripts/bound_validity.py --reps 1000000 --out results
"""
import argparse
import os

from gauss_conjunction import cli

LEVELS = [1.0, 1.5, 2.0, 2.5]


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--reps", type=int, default=1_000_000)
    p.add_argument("--grid-points", type=int, default=2049)
    p.add_argument("--seed", type=int, default=1001)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--out", default="results")
    args = p.parse_args()
    os.makedirs(args.out, exist_ok=True)

    print(f"{'n':>2} {'u':>4} {'bound':>11} {'estimate':>11} {'ci_low':>11} {'ci_high':>11}  ok")
    for offset, n in enumerate((2, 3)):
        cfg = cli.resolve_config({
            "command": "sweep", "u": LEVELS, "reps": args.reps, "grid_points": args.grid_points,
            "seed": args.seed + offset,
            "processes": {"T": 1.0, "independent": [{"type": "se", "lengthscale": 1.0}] * n},
        })
        report = cli.run(cfg, args.threads)
        cli.write_report(report, os.path.join(args.out, f"bound_validity_n{n}.csv"), "csv")
        for r in report.rows:
            ok = r["ci_low"] <= r["bound_total"]
            print(f"{n:>2} {r['u']:>4g} {r['bound_total']:>11.4e} {r['mc_estimate']:>11.4e} "
                  f"{r['ci_low']:>11.4e} {r['ci_high']:>11.4e}  {'yes' if ok else 'NO'}")


if __name__ == "__main__":
    main()
