"""Cocycle table over all basis pairs for each lift kind."""
import argparse

import numpy as np

from xphase.core import Constants
from xphase.group import LiftKind, equivariance_verdict, random_states


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--m", type=float, default=1.0)
    ap.add_argument("--c", type=float, default=1.0)
    ap.add_argument("--samples", type=int, default=20)
    ap.add_argument("--all", action="store_true", help="print every pair, not only the nonzero ones")
    args = ap.parse_args()

    k = Constants(c=args.c)
    samples = random_states(np.random.default_rng(0), args.samples)
    for kind in (LiftKind.galilei_M(), LiftKind.galilei_Me(), LiftKind.alpha_Me(1), LiftKind.alpha_Me(-1)):
        rep = equivariance_verdict(kind, k, args.m, samples=samples)
        print(f"{kind}: {rep.verdict}  max|Q| = {rep.max_abs:.3e}  spread = {rep.max_spread:.1e}")
        for e in rep.entries:
            if args.all or abs(e.value) > rep.tolerance:
                print(f"    Q({e.a}, {e.b}) = {e.value:+.6f}")


if __name__ == "__main__":
    main()
