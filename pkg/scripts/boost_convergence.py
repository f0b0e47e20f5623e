"""Error of K composed infinitesimal boosts against the closed-form finite boost.

    python scripts/boost_convergence.py --speed 0.6 --alpha 1
"""
import argparse

import numpy as np

from xphase.canon import PhasePoint
from xphase.group import boost_map, composed_boost


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--speed", type=float, default=0.6)
    ap.add_argument("--alpha", type=int, choices=(1, -1), default=1)
    ap.add_argument("--scheme", choices=("midpoint", "euler"), default="midpoint")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    V = args.speed * np.array([1.0, 0.0, 0.0])
    z = PhasePoint(rng.uniform(-1, 1, 4), rng.uniform(-1, 1, 4))
    exact = boost_map(V, args.alpha)(z).as_array()
    Ks = np.array([10, 30, 100, 300, 1000, 3000, 10000])
    errs = np.array([np.max(np.abs(composed_boost(V, args.alpha, z, int(K), scheme=args.scheme).as_array() - exact)) for K in Ks])
    print(f"{'K':>6}  {'max error':>10}")
    for K, e in zip(Ks, errs):
        print(f"{K:6d}  {e:10.3e}")
    slope = -np.polyfit(np.log(Ks), np.log(errs), 1)[0]
    print(f"log-log slope: {slope:.3f}")


if __name__ == "__main__":
    main()
