"""Run the gate-crossing experiment sweep and print the per-cell statistics.

Repeats each (cruise speed, start position) cell, with perception noise
calibrated to the measured distance-estimation error, and reports the
Euclidean offset between each crossing point and the gate center.

Usage:
    python scripts/run_crossing_protocol.py                # 5x3x3 = 45 runs
    python scripts/run_crossing_protocol.py --runs 10 --distance-mae 0
"""

import argparse

import numpy as np

from gatesim.guidance import (
    PerceptionNoise,
    crossing_stats,
    format_crossing_table,
    run_protocol,
)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--speeds", default="0.5,1,2")
    parser.add_argument("--starts", default="left,centre,right")
    parser.add_argument("--runs", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--pixel-sigma", type=float, default=5.0)
    parser.add_argument("--distance-mae", type=float, default=0.660)
    args = parser.parse_args()

    speeds = [float(v) for v in args.speeds.split(",")]
    starts = [s.strip() for s in args.starts.split(",")]
    noise = PerceptionNoise(pixel_sigma=args.pixel_sigma, distance_mae=args.distance_mae)

    runs = run_protocol(speeds=speeds, starts=starts, runs=args.runs,
                        master_seed=args.seed, noise=noise)
    stats = crossing_stats(runs)
    print(format_crossing_table(stats))
    print()
    for speed in speeds:
        errors = [r.crossing_error for r in runs if r.cruise == speed and r.crossing_error is not None]
        if errors:
            print(f"speed {speed:>4} m/s: mean offset {np.mean(errors):.3f} m over {len(errors)} crossings")


if __name__ == "__main__":
    main()
