"""Mean absolute heading error of every criterion versus range noise and dropout.

    python scripts/noise_sweep.py --trials 300 --sigmas 0,0.01,0.02,0.05 --dropouts 0,0.2
"""
import argparse
import csv
import math
import sys

from hullpose.baselines import Criterion
from hullpose.cli import synth_samples
from hullpose.evaluation import make_report, run_benchmark
from hullpose.synth import ScanConfig


def floats(text):
    return [float(x) for x in text.split(",") if x.strip()]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--trials", type=int, default=300)
    ap.add_argument("--sigmas", type=floats, default=[0.0, 0.01, 0.02, 0.05, 0.1])
    ap.add_argument("--dropouts", type=floats, default=[0.0])
    ap.add_argument("--delta-deg", type=float, default=0.5)
    ap.add_argument("--seed", type=int, default=42)
    args = ap.parse_args(argv)

    methods = [c.value for c in Criterion]
    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["noise_sigma", "dropout", "method", "mean_abs_deg", "std_abs_deg", "count"])
    for dropout in args.dropouts:
        for sigma in args.sigmas:
            samples = synth_samples(args.trials, args.seed, ScanConfig(noise_sigma=sigma, dropout=dropout))
            run = run_benchmark(samples, methods, math.radians(args.delta_deg), timing=False)
            for m in make_report(run, timing=False).methods:
                out.writerow([sigma, dropout, m.method, f"{m.absolute.mean:.4f}", f"{m.absolute.std:.4f}",
                              m.absolute.count])


if __name__ == "__main__":
    main()
