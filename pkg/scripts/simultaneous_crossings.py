"""Mean number of grid cells in which both of two independent processes cross u.

Two independent processes cross the same level at the same time with
probability zero, so the count should halve with every grid doubling. The
exact expectation (G - 1) p^2, with p the probability that one process
crosses in a given cell, is printed next to the MC mean; at small rep counts
the observed ratios are dominated by Poisson noise.

    python3 scripts/simultaneous_crossings.py --reps 100000
"""
import argparse

from gauss_conjunction.kernels import ProcessSet, SquaredExponential
from gauss_conjunction.montecarlo import simulate
from gauss_conjunction.sampler import Grid
from gauss_conjunction.scalar_stats import orthant_prob, phi_bar


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--u", type=float, default=1.0)
    p.add_argument("--reps", type=int, default=100_000)
    p.add_argument("--grids", type=int, nargs="+", default=[256, 512, 1024, 2048])
    p.add_argument("--seed", type=int, default=1008)
    p.add_argument("--threads", type=int, default=None)
    args = p.parse_args()

    k = SquaredExponential(1.0)
    ps = ProcessSet.independent([k, k], 1.0)
    prev = None
    print(f"{'points':>6} {'cells':>7} {'mean':>11} {'stderr':>10} {'exact':>11} {'ratio':>6}")
    for g in args.grids:
        sim = simulate(ps, [args.u], Grid(1.0, g), args.reps, args.seed, args.threads)
        est = sim.simultaneous(args.u)
        pc = 2.0 * (phi_bar(args.u) - orthant_prob(args.u, k.correlation(0.0, 1.0 / (g - 1))))
        exact = (g - 1) * pc * pc
        ratio = f"{prev / est.estimate:6.2f}" if prev and est.estimate else ""
        print(f"{g:>6} {int(sim.tallies['sim'][0]):>7} {est.estimate:>11.3e} {est.stderr:>10.2e} "
              f"{exact:>11.3e} {ratio:>6}")
        prev = est.estimate


if __name__ == "__main__":
    main()
