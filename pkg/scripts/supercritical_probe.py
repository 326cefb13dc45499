"""Probe alpha < 1 (outside the covered range): does the gradient stay bounded?

Runs the same data for several alpha and records max |d1 u| and whether the
run ended in blow-up. Runs below alpha = 1 carry the "no_theory" flag.
"""
import argparse

from _common import write_rows

from feas.diagnostics import grad_sup
from feas.model import TrigPolynomial, make_initial_data
from feas.spectral import Grid
from feas.timestepper import BlowUpError, SchemeSpec, integrate


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--alphas", default="0.3,0.5,0.7,0.9,1.0,1.5")
    ap.add_argument("--n", type=int, default=256)
    ap.add_argument("--t-end", type=float, default=5.0)
    ap.add_argument("--u-amplitude", type=float, default=1.0)
    ap.add_argument("--out", default="results/supercritical_probe.csv")
    args = ap.parse_args()

    rows = []
    for a in (float(x) for x in args.alphas.split(",")):
        s0 = make_initial_data(TrigPolynomial(seed=1, u_amplitude=args.u_amplitude), Grid.of(args.n), a)
        try:
            traj = integrate(s0, a, SchemeSpec(t_end=args.t_end, record_every=10))
            status, t = "completed", traj.snapshots[-1].time
        except BlowUpError as exc:
            traj, status, t = exc.trajectory, "blowup", exc.time
        g = max(grad_sup(s.u) for s in traj.snapshots)
        rows.append((a, status, t, g, ";".join(sorted(traj.flags))))
        print(f"alpha={a:.2f}: {status} at t={t:.4g}, max|grad u| = {g:.4g} {sorted(traj.flags)}")
    write_rows(args.out, ["alpha", "status", "t", "max_grad_u", "flags"], rows)


if __name__ == "__main__":
    main()
