"""delta statistics along a trajectory, and the comparison-PDE summary; writes a CSV."""
import argparse
import csv

from helmns import flow, verify


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ic", choices=sorted(flow.INITIAL_CONDITIONS), default="random_solenoidal")
    ap.add_argument("--n", type=int, default=16)
    ap.add_argument("--t-end", type=float, default=1.0)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--eps-lap", type=float, default=1e-6)
    ap.add_argument("--lambda", dest="with_lambda", action="store_true", help="also integrate the comparison PDE")
    ap.add_argument("--out", default="delta_trends.csv")
    args = ap.parse_args()

    box = flow.periodic_box(args.n)
    fn = flow.INITIAL_CONDITIONS[args.ic]
    u0 = fn(box, seed=args.seed) if args.ic == "random_solenoidal" else fn(box)
    tr = flow.simulate(u0, flow.SimParams(dt=5e-3, steps=round(args.t_end / 5e-3)), 10)
    rep = verify.delta_diagnostic(tr, args.eps_lap)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "masked", "delta_median", "delta_q05", "delta_q95", "median_abs_delta_minus_1"])
        for e, dist in zip(rep.extras["series"], rep.extras["median_distance_to_one"]):
            q = e["delta"].get("quantiles", {})
            w.writerow([e["t"], e["masked"], e["delta"].get("median"), q.get("0.05"), q.get("0.95"), dist])
    print(rep.notes)
    if args.with_lambda:
        print(verify.lambda_compare(tr, args.eps_lap).notes)


if __name__ == "__main__":
    main()
