"""Smallest c in D(grad u) >= B|grad u|^2 - c B^3 A^2 over a smooth battery, per grid size."""
import argparse

from _common import write_rows

from feas.diagnostics import c_estimate, smooth_battery
from feas.spectral import Grid


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", default="64,128,256,512")
    ap.add_argument("--ndims", type=int, default=1)
    ap.add_argument("--fields", type=int, default=10)
    ap.add_argument("--out", default="results/max_principle_constant.csv")
    args = ap.parse_args()

    rows = []
    for n in (int(s) for s in args.sizes.split(",")):
        c = c_estimate(smooth_battery(Grid.of(*([n] * args.ndims)), args.fields))
        rows.append((n, c))
        print(f"N={n}: c = {c:.6g}")
    write_rows(args.out, ["N", "c_estimate"], rows)


if __name__ == "__main__":
    main()
