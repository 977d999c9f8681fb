"""Calibrated Gaussian ensemble: spread, member RMSE and CRPSS vs an independent Monte-Carlo oracle.

    python scripts/calibration.py --members 50 --side 100
"""
import argparse

from s2sverif.experiments import calibration_experiment, calibration_oracle


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--members", type=int, default=50)
    ap.add_argument("--side", type=int, default=100)
    ap.add_argument("--sigma", type=float, default=1.0)
    ap.add_argument("--signal", type=float, default=2.0)
    args = ap.parse_args()
    res = calibration_experiment(args.members, args.side, args.sigma, args.signal)
    ora = calibration_oracle(args.members, res["shape"], args.sigma, res["weights"])
    print("quantity,package,oracle,rel_diff")
    for k in ("spread", "ens_rmse"):
        print(f"{k},{res[k]:.5f},{ora[k]:.5f},{abs(res[k] / ora[k] - 1):.4f}")
    print(f"crps_forecast,{res['crps_forecast']:.5f},,")
    print(f"crps_climatology,{res['crps_climatology']:.5f},,")
    print(f"crpss,{res['crpss']:.5f},,")
    print(f"ssr,{res['spread'] / res['ens_rmse']:.5f},,")


if __name__ == "__main__":
    main()
