"""SpecDiv of a low-pass filtered power-law field against the original, per cutoff.

    python scripts/blur_sweep.py --q 0.9 --cutoffs 122 125 128 131 134
    python scripts/blur_sweep.py --q 0 --cutoffs 10 20 40 80 120
"""
import argparse

from s2sverif.experiments import blur_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--q", type=float, default=0.9)
    ap.add_argument("--slope", type=float, default=2.0)
    ap.add_argument("--cutoffs", type=float, nargs="+", default=[122, 125, 128, 131, 134])
    args = ap.parse_args()
    vals = blur_sweep(args.cutoffs, q=args.q, slope=args.slope)
    print("cutoff,spec_div")
    for k, v in zip(args.cutoffs, vals):
        print(f"{k:g},{v:.6f}")


if __name__ == "__main__":
    main()
