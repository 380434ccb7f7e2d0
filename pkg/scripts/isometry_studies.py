"""Power against isometries and against a genuine scale change, off the real line.

Gaussian space: sigma ~ Exp(1) against 1/sigma (an isometry) and against
k * sigma (also an isometry of the zero-mean subspace).  Tree space:
random 5-leaf trees against a fixed relabelling (an isometry) and against
trees whose edge weights are multiplied by k (not one).
"""

import argparse

from metrictest.sim_harness import (
    PermutedTreeSampler,
    PowerStudyConfig,
    SigmaSampler,
    TreeSampler,
    run_gaussian_power_study,
    run_tree_power_study,
)


def show(label, table):
    for r in table.rows:
        print(f"{label:<34} param={r.sigma_sq:<4} KS {r.ks_power:.3f} (se {r.ks_se:.3f})"
              f"  energy {r.energy_power:.3f} (se {r.energy_se:.3f})")


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n", type=int, default=40)
    p.add_argument("--n-mc", type=int, default=200)
    p.add_argument("--B", type=int, default=200)
    p.add_argument("--seed", type=int, default=20240607)
    p.add_argument("--leaves", type=int, default=5)
    p.add_argument("--workers", type=int, default=1)
    args = p.parse_args()

    base = dict(n=args.n, n_mc=args.n_mc, B=args.B, seed=args.seed, workers=args.workers)
    null = PowerStudyConfig(alternative_grid=(1.0,), **base)
    show("gaussian: sigma vs 1/sigma", run_gaussian_power_study(null, SigmaSampler(), SigmaSampler(reciprocal=True)))
    scaled = PowerStudyConfig(alternative_grid=(1.0, 2.0, 4.0), **base)
    show("gaussian: sigma vs k*sigma", run_gaussian_power_study(scaled, SigmaSampler(), SigmaSampler(scale_with_param=True)))

    trees = TreeSampler(args.leaves, scale_with_param=False)
    perm = tuple(list(range(2, args.leaves + 1)) + [1])
    show("trees: relabelled leaves", run_tree_power_study(null, trees, PermutedTreeSampler(trees, perm)))
    show("trees: weights times k", run_tree_power_study(scaled, trees, TreeSampler(args.leaves)))


if __name__ == "__main__":
    main()
