"""Exact size of the row test's rejection rule under continuous i.i.d. data.

With m distances per side the statistic lives on the lattice k/m, so the
rule T > c * sqrt(2/m) rejects exactly when T >= ceil(c * sqrt(2m)) / m.
The exact two-sample null distribution (scipy's exact method) gives the
size of that event, next to the nominal level and the Monte-Carlo rate.
"""

import argparse
import math

import numpy as np
from scipy.stats import ks_2samp

from metrictest.metric_core import line_distances
from metrictest.sim_harness import seeded_substream
from metrictest.two_sample import ks_critical, ks_row_test


def exact_tail(m, k):
    # two samples of size m separated by a shift of k positions have D = k/m
    a = np.arange(m) + 0.5
    return ks_2samp(a, np.arange(m) + k, method="exact").pvalue


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--sizes", default="20,40,80,160,500")
    p.add_argument("--n-mc", type=int, default=2000)
    p.add_argument("--seed", type=int, default=20240608)
    args = p.parse_args()

    print("n  m  crit  k_min  exact_size  mc_rate")
    for n in (int(v) for v in args.sizes.split(",")):
        m = n - 1
        crit = ks_critical(m, m)
        k_min = math.floor(crit * m) + 1
        rejects = 0
        for r in range(args.n_mc):
            rng = seeded_substream(args.seed, (n, r))
            rejects += ks_row_test(line_distances(rng.standard_normal(n)),
                                   line_distances(rng.standard_normal(n))).reject
        print(f"{n} {m} {crit:.5f} {k_min} {exact_tail(m, k_min):.4f} {rejects / args.n_mc:.4f}")


if __name__ == "__main__":
    main()
