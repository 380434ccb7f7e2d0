"""Rerun the real-line power study and print it next to the published powers."""

import argparse
import time

from metrictest.sim_harness import PUBLISHED_ENERGY, PUBLISHED_KS, PowerStudyConfig, run_power_study


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--mode", choices=("quick", "full"), default="full")
    p.add_argument("--seed", type=int, default=20240601)
    p.add_argument("--scale-as", choices=("sd", "variance"), default="sd",
                   help="read the grid as the sd (default) or the variance of Y")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", help="also write the CSV here")
    args = p.parse_args()

    cfg = PowerStudyConfig.for_mode(args.mode, seed=args.seed, scale_as=args.scale_as, workers=args.workers)
    t0 = time.perf_counter()
    table = run_power_study(cfg)
    print(f"{args.mode} mode, {time.perf_counter() - t0:.1f}s\n")
    print("| grid | KS | published | energy | published |")
    print("|---|---|---|---|---|")
    for row, ks, en in zip(table.rows, PUBLISHED_KS, PUBLISHED_ENERGY):
        print(f"| {row.sigma_sq:.1f} | {row.ks_power:.3f} | {ks:.2f} | {row.energy_power:.3f} | {en:.2f} |")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(table.to_csv())


if __name__ == "__main__":
    main()
