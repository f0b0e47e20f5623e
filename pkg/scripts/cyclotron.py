"""Cyclotron orbit in a uniform magnetic field, compared with the analytic circle.

Writes the trajectory CSV and prints return and energy errors per step size.
"""
import argparse
import math
from pathlib import Path

import numpy as np

from xphase.core import Constants, ExtendedState
from xphase.dynamics import em_rhs, integrate, steps_for
from xphase.fieldexpr import catalog
from xphase.hamiltonians import kinetic


def orbit(B0, ds, method, k):
    H, pot = kinetic(k.m), catalog("uniform-B", B0=B0)
    omega = k.e * B0 / (k.m * k.c)
    r = 1.0 / abs(omega)  # unit speed
    s0 = ExtendedState([0.0, r, 0.0], [k.m, 0.0, 0.0], 0.0, 0.5 * k.m)
    n, ds = steps_for(2 * math.pi / abs(omega), ds)
    traj = integrate(lambda s: em_rhs(H, pot, s, k), s0, ds, n, method, hamiltonian=H, k=k)
    radius = np.hypot(traj.y[:, 0], traj.y[:, 1])
    return traj, float(np.max(np.abs(traj.final.as_array()[[0, 1, 2, 4, 5, 6]] - s0.as_array()[[0, 1, 2, 4, 5, 6]]))), float(np.max(np.abs(radius - r)))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--B0", type=float, default=1.0)
    ap.add_argument("--method", choices=("rk4", "implicit-midpoint"), default="rk4")
    ap.add_argument("--out", type=Path, default=None, help="write the finest trajectory here")
    args = ap.parse_args()

    k = Constants()
    print(f"{'ds':>8}  {'return':>10}  {'radius':>10}  {'|dE|':>10}")
    for ds in (1e-1, 3e-2, 1e-2, 3e-3, 1e-3):
        traj, ret, rad = orbit(args.B0, ds, args.method, k)
        print(f"{ds:8.0e}  {ret:10.3e}  {rad:10.3e}  {abs(traj.y[-1, 7] - traj.y[0, 7]):10.3e}")
    if args.out:
        traj.write_csv(args.out)
        print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
