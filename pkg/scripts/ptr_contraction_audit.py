#!/usr/bin/env python3
"""Compare the stated PTR contraction constant with what XY reservoirs actually do.

For every grid point and input value this prints the largest sampled ratio
||T(v, rho1) - T(v, rho2)||_2 / ||rho1 - rho2||_2 next to the exact worst
case over density differences (the traceless restricted norm).
"""
import argparse

import numpy as np

from qrcbench import channels as chn
from qrcbench import linalg as la
from qrcbench import verify as vf


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, nargs="+", default=[1, 2, 3])
    parser.add_argument("--epsilon", type=float, default=0.1)
    parser.add_argument("--j-seeds", type=int, nargs="+", default=[0, 1])
    parser.add_argument("--gamma", type=float, nargs="+", default=[0.5, 1.0])
    parser.add_argument("--tau", type=float, nargs="+", default=[1.0, 2.0])
    parser.add_argument("--pairs", type=int, default=500)
    parser.add_argument("--inputs", type=int, default=20)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    r = chn.ptr_contraction(args.epsilon)
    domain = chn.ptr_input_domain(args.epsilon)
    grid = chn.parameter_grid({"j_seed": args.j_seeds, "gamma": args.gamma, "tau": args.tau})
    rng = np.random.default_rng(args.seed)
    print(f"r_PTR({args.epsilon}) = {r:.6f}, D_v = [{domain.lo:.6f}, {domain.hi:.6f}]")
    print(f"{'n':>2} {'j_seed':>6} {'gamma':>6} {'tau':>5} {'sampled':>9} {'exact':>9}  verdict")
    for n in args.n:
        for point, ch in zip(grid, chn.ptr_channels(grid, n, domain)):
            rho1 = np.stack([la.random_density(n, rng) for _ in range(args.pairs)])
            rho2 = np.stack([la.random_density(n, rng) for _ in range(args.pairs)])
            sampled, exact = 0.0, 0.0
            for v in vf.input_grid(domain, args.inputs):
                sampled = max(sampled, float(vf.contraction_ratios(ch, float(v), rho1, rho2).max()))
                exact = max(exact, la.traceless_restricted_norm(vf.probe_superoperator(ch, float(v))))
            verdict = "ok" if exact <= r + vf.SLACK else ("not contractive" if exact >= 1 else "exceeds r")
            print(f"{n:>2} {point['j_seed']:>6} {point['gamma']:>6.2f} {point['tau']:>5.2f} "
                  f"{sampled:>9.6f} {exact:>9.6f}  {verdict}")


if __name__ == "__main__":
    main()
