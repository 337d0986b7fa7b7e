"""Quadrature vs spectral discrepancy for a Gaussian vortex over a grid of (n, window) pairs."""
import argparse
import csv

from helmns import flow
from helmns.grid import make_grid
from helmns.helmholtz import quadrature_vs_spectral_report


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scale", type=float, default=0.5)
    ap.add_argument("--n", type=int, nargs="+", default=[12, 24, 48])
    ap.add_argument("--windows", type=float, nargs="+", default=[6, 8, 10, 12],
                    help="window widths in units of the vortex scale")
    ap.add_argument("--out", default="backend_ladder_sweep.csv")
    args = ap.parse_args()

    def field(g):
        return flow.ic_gaussian_vortex(g, scale=args.scale, project=False)

    rows = []
    for n in args.n:
        for wdt in args.windows:
            L = wdt * args.scale
            cmp = quadrature_vs_spectral_report(field, make_grid((n,) * 3, (L,) * 3, "window"),
                                                make_grid((n,) * 3, (L,) * 3))
            h = L / n / args.scale
            rows.append((n, wdt, h, cmp.discrepancy, int(cmp.decay_warning), cmp.runtime_quadrature))
            print(f"n={n:3d} window={wdt:5.1f} h/scale={h:.3f} discrepancy={cmp.discrepancy:.3e}"
                  + ("  decay warning" if cmp.decay_warning else ""))
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "window_over_scale", "h_over_scale", "discrepancy", "decay_warning", "runtime_quadrature"])
        w.writerows(rows)


if __name__ == "__main__":
    main()
