"""DMD of a permutation cycle: the spectrum is the m-th roots of unity.

    python scripts/periodic_spectrum.py 3 5 8
"""
import argparse

import numpy as np

from kic import verify
from kic.data import build_pair
from kic.estimators import fit_dmd


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("periods", type=int, nargs="*", default=[3, 5, 8])
    args = ap.parse_args()
    for m in args.periods:
        lam = fit_dmd(build_pair(verify.permutation_cycle(m))).spectral.eigenvalues
        roots = np.exp(2j * np.pi * np.arange(m) / m)
        print(f"m={m}: max |lambda - root| = {np.max(np.abs(lam - roots)):.2e}")
        for v in lam:
            print(f"    {v.real:+.6f} {v.imag:+.6f}i   |{abs(v):.6f}|  arg/(2pi) {np.angle(v) / (2 * np.pi) % 1:.4f}")


if __name__ == "__main__":
    main()
