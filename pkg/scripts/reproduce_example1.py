"""Linear example: recover the square operator under three kinds of input.

    python scripts/reproduce_example1.py [--seed 1]
"""
import argparse

import numpy as np

from kic import bench
from kic.data import build_trio
from kic.estimators import Dither, FitOptions, KicMode, fit_kic

np.set_printoptions(precision=4, suppress=True)


def fit(policy, opts=None, steps=6):
    traj = bench.simulate_linear(bench.LinearExampleParams(0.1, 1.5, 1.0), policy, x0=(5, 2), steps=steps)
    return fit_kic(build_trio(traj, include_future_input=True), KicMode.WITH_INPUT_DYNAMICS, opts)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--dither", type=float, default=1e-3)
    args = ap.parse_args()

    cases = [
        ("random disturbance (gaussian, var 0.01)", bench.InputPolicy.gaussian(0.01, args.seed), None),
        ("state feedback u = -x2, no dither", bench.InputPolicy.feedback(1.0, 1), None),
        ("state feedback u = -x2, dithered",
         bench.InputPolicy.feedback(1.0, 1, dither=args.dither, seed=args.seed),
         FitOptions(dither=Dither(args.dither, args.seed))),
        ("exogenous decay u+ = 0.99 u", bench.InputPolicy.exp_decay(0.01, 1.0), None),
    ]
    for title, policy, opts in cases:
        model = fit(policy, opts)
        d = model.diagnostics
        print(f"== {title}")
        print(model.operator)
        print(f"   rank {d.rank}{' (deficient)' if d.rank_deficient else ''}, "
              f"spectral radius {model.spectral_radius:.4f}\n")


if __name__ == "__main__":
    main()
