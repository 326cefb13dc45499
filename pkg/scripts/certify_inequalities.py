"""Table of certified C(q), remainder sweeps and the zero-mean gap battery."""
import argparse

import numpy as np
from _common import write_rows

from feas.inequalities import BoxSweep, certify_fq_min, certify_lowerpoly, zero_mean_gap
from feas.spectral import Grid, random_trig_field


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--q-max", type=int, default=6)
    ap.add_argument("--rho-min", type=float, default=0.5)
    ap.add_argument("--rho-max", type=float, default=2.0)
    ap.add_argument("--m", type=float, default=1.0)
    ap.add_argument("--resolution", type=int, default=2001)
    ap.add_argument("--out-dir", default="results")
    args = ap.parse_args()

    rows = []
    for q in range(1, args.q_max + 1):
        c = certify_fq_min(BoxSweep(q, args.m, args.rho_min, args.rho_max, args.resolution), strict=False)
        rows.append((q, c.min_value, c.argmin[0], c.argmin[1], c.C_q, c.status))
        print(f"q={q}: min f_q = {c.min_value:.12g} at {c.argmin}, C(q) = {c.C_q:.6g} [{c.status}]")
    write_rows(f"{args.out_dir}/fq_minima.csv", ["q", "min", "X", "Y", "C_q", "status"], rows)

    rows = [(r.q, r.l, r.min_value, r.status) for l in (0.5, 1.0, 2.0)
            for r in certify_lowerpoly(args.q_max, l, args.resolution)]
    write_rows(f"{args.out_dir}/remainder_sweep.csv", ["q", "l", "min", "status"], rows)

    gaps = [(s, q, zero_mean_gap(random_trig_field(Grid.of(64), np.random.default_rng(s), 8), q))
            for s in range(100) for q in (1, 2)]
    print(f"zero-mean gap: min {min(g for *_, g in gaps):.3e} over {len(gaps)} fields")
    write_rows(f"{args.out_dir}/zero_mean_gap.csv", ["seed", "q", "gap"], gaps)


if __name__ == "__main__":
    main()
