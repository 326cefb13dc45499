"""Distance of the limiting density from its mean against the initial entropy size.

A fixed density profile gets the zero-entropy velocity plus eps*sin(x1), so the
initial entropy is eps*cos(x1). Each run goes to t_end and the final
|rho - m|_p is compared with K * eps for a least-squares K.
"""
import argparse

import numpy as np
from _common import write_rows

from feas import diagnostics as dg
from feas.model import DensityModes, NullEntropy, make_initial_data
from feas.spectral import Grid
from feas.timestepper import SchemeSpec, integrate


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--eps", default="0,0.01,0.02,0.05,0.1")
    ap.add_argument("--n", type=int, default=128)
    ap.add_argument("--alpha", type=float, default=1.0)
    ap.add_argument("--t-end", type=float, default=25.0)
    ap.add_argument("--out", default="results/limiting_flock.csv")
    args = ap.parse_args()

    shape = DensityModes(1.0, (((1,), 0.3, 0.0), ((2,), 0.0, 0.1)))
    eps = [float(e) for e in args.eps.split(",")]
    rows = []
    for e in eps:
        s0 = make_initial_data(NullEntropy(shape, 0.0, e), Grid.of(args.n), args.alpha)
        traj = integrate(s0, args.alpha, SchemeSpec(t_end=args.t_end, record_every=50))
        end = traj.snapshots[-1].rho
        rows.append([e] + [dg.lp_deviation(end, p) for p in (2, 4)] + [dg.lp_deviation(s0.rho, 2)])
    data = np.array(rows)
    nz = data[:, 0] > 0
    for col, p in ((1, 2), (2, 4)):
        x, y = data[nz, 0], data[nz, col]
        K = float(y @ x / (x @ x))
        print(f"p={p}: K = {K:.5f}, max scatter {np.abs(y / (K * x) - 1).max():.2%}")
    write_rows(args.out, ["eps", "dev_p2", "dev_p4", "dev0_p2"], rows)


if __name__ == "__main__":
    main()
