"""RMSE of the ensemble mean over RMSE of a single deterministic run, per ensemble size and lead.

    python scripts/ensemble_ratio.py --sizes 3 15 50
"""
import argparse

from s2sverif.experiments import ratio_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[3, 15, 50])
    ap.add_argument("--leads", type=int, nargs="+", default=[1, 8, 15, 22, 29, 36, 44])
    ap.add_argument("--inits", type=int, default=3)
    ap.add_argument("--cutoff", type=float, default=40)
    args = ap.parse_args()
    out = ratio_experiment(args.sizes, args.leads, args.inits, args.cutoff)
    print("lead," + ",".join(f"n{n}" for n in args.sizes))
    for t in args.leads:
        print(f"{t}," + ",".join(f"{out[n][t]:.4f}" for n in args.sizes))


if __name__ == "__main__":
    main()
