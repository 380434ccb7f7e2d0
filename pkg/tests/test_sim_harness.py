import math

import numpy as np
import pytest

from metrictest.gauss_space import GaussianParam
from metrictest.sim_harness import (
    MODES,
    PUBLISHED_GRID,
    NormalSampler,
    PermutedTreeSampler,
    PowerStudyConfig,
    SigmaSampler,
    TreeSampler,
    run_gaussian_power_study,
    run_generator_study,
    run_power_study,
    run_tree_power_study,
    seeded_substream,
)


def test_substream_determinism():
    a = seeded_substream(7, 3).random(16)
    b = seeded_substream(7, 3).random(16)
    assert np.array_equal(a, b)
    for other in [(7, 4), (8, 3)]:
        c = seeded_substream(*other).random(16)
        assert np.all(a != c)
    assert np.array_equal(seeded_substream(7, (3,)).random(4), a[:4])
    assert not np.array_equal(seeded_substream(7, (3, 0)).random(4), a[:4])


def test_substreams_pairwise_distinct():
    heads = {tuple(seeded_substream(1, i).integers(0, 2**63, 2)) for i in range(2000)}
    assert len(heads) == 2000


def test_config_validation_and_modes():
    cfg = PowerStudyConfig.for_mode("quick")
    assert (cfg.n_mc, cfg.B, cfg.n) == (200, 200, 40)
    assert PowerStudyConfig.for_mode("full").n_mc == 1000 == MODES["full"][0]
    assert cfg.alternative_grid == PUBLISHED_GRID
    for bad in [dict(n=1), dict(n_mc=0), dict(B=0), dict(alpha=1.0), dict(space="sphere"),
                dict(scale_as="log"), dict(tests=()), dict(tests=("t",)), dict(mode="slow")]:
        with pytest.raises(ValueError):
            PowerStudyConfig(**bad)
    assert "seed=20240601" in cfg.header_lines()


SMALL = PowerStudyConfig(n=12, n_mc=30, B=49, alternative_grid=(1.0, 3.0), seed=5)


def test_study_shape_and_errors():
    table = run_power_study(SMALL)
    assert [r.sigma_sq for r in table.rows] == [1.0, 3.0]
    for r in table.rows:
        for p, se in [(r.ks_power, r.ks_se), (r.energy_power, r.energy_se)]:
            assert 0 <= p <= 1
            assert se == pytest.approx(math.sqrt(p * (1 - p) / 30))
            assert (p * 30) == pytest.approx(round(p * 30))
    csv = table.to_csv()
    assert "sigma_sq,ks_power,ks_se,energy_power,energy_se" in csv
    assert csv.count("\n") == len(SMALL.header_lines()) + 3
    md = table.to_markdown()
    assert "| sigma_sq | T-test power | D-test power |" in md
    with pytest.raises(ValueError):
        run_power_study(PowerStudyConfig(space="bhv"))


def test_study_determinism_across_workers():
    a = run_power_study(SMALL)
    b = run_power_study(SMALL)
    c = run_power_study(PowerStudyConfig(**{**SMALL.__dict__, "workers": 3}))
    assert a.to_csv() == b.to_csv() == c.to_csv()
    d = run_power_study(PowerStudyConfig(**{**SMALL.__dict__, "seed": 6}))
    assert d.to_csv() != a.to_csv()


def test_single_test_selection():
    t = run_power_study(PowerStudyConfig(**{**SMALL.__dict__, "tests": ("ks",)}))
    assert t.rows[0].energy_power is None and t.rows[0].ks_power is not None
    assert ",," in t.to_csv()


def test_common_random_numbers():
    # with the same substream per grid value, X is identical across the grid
    gen = NormalSampler("sd", null=True)
    x1 = gen(seeded_substream(1, 0), 5, 1.2)
    x2 = gen(seeded_substream(1, 0), 5, 2.4)
    assert np.array_equal(x1, x2)
    y = NormalSampler("variance")(seeded_substream(1, 0), 4, 4.0)
    assert np.array_equal(y, seeded_substream(1, 0).standard_normal(4) * 2.0)


def test_power_increases_along_grid():
    cfg = PowerStudyConfig(n=30, n_mc=150, B=99, alternative_grid=(1.2, 1.8, 2.4), seed=11)
    t = run_power_study(cfg)
    for a, b in zip(t.rows, t.rows[1:]):
        assert b.ks_power >= a.ks_power - 2 * max(a.ks_se, 1e-9)
        assert b.energy_power >= a.energy_power - 2 * max(a.energy_se, 1e-9)
    assert t.rows[-1].ks_power > 0.5


# -- other spaces


def test_tree_study_power_grows_with_n():
    null, alt = TreeSampler(4, scale_with_param=False), TreeSampler(4)
    powers = []
    for n in (20, 40):
        cfg = PowerStudyConfig(n=n, n_mc=40, B=99, alternative_grid=(2.0,), seed=3, tests=("ks",))
        powers.append(run_tree_power_study(cfg, null, alt).rows[0].ks_power)
    assert powers[1] >= powers[0]
    assert powers[1] > 0.5


def test_tree_study_null_and_permutation():
    base = TreeSampler(5, scale_with_param=False)
    cfg = PowerStudyConfig(n=10, n_mc=40, B=49, alternative_grid=(1.0,), seed=4)
    perm = PermutedTreeSampler(base, (2, 1, 3, 5, 4))
    t = run_tree_power_study(cfg, base, perm)
    assert t.rows[0].ks_power <= 0.25 and t.rows[0].energy_power <= 0.25
    assert t.config.space == "bhv"


def test_tree_study_leaf_mismatch():
    cfg = PowerStudyConfig(n=4, n_mc=2, B=9, alternative_grid=(1.0,))
    with pytest.raises(ValueError, match="leaf-count mismatch"):
        run_tree_power_study(cfg, TreeSampler(4), TreeSampler(5))


def test_gaussian_samplers_and_study():
    rng = seeded_substream(0, 0)
    pts = SigmaSampler(reciprocal=True)(rng, 3, 1.0)
    ref = 1.0 / seeded_substream(0, 0).standard_exponential(3)
    assert [p.sigma for p in pts] == list(ref)
    assert all(isinstance(p, GaussianParam) and p.mean == 0 for p in pts)
    cfg = PowerStudyConfig(n=15, n_mc=30, B=49, alternative_grid=(1.0, 4.0), seed=2)
    t = run_gaussian_power_study(cfg, SigmaSampler(), SigmaSampler(scale_with_param=True))
    # sigma -> k sigma preserves every Hellinger distance between zero-mean
    # normals, so the row test sees the same Y matrix at both grid values
    assert t.rows[1].ks_power == t.rows[0].ks_power
    assert t.rows[1].energy_power > 0.6 > 0.2 > t.rows[0].energy_power


def test_generator_study_with_callables():
    # plain functions work too when run in-process.  A translation is an
    # isometry of the line, so the row test cannot see it while the energy
    # test, which uses cross-sample distances, always does.
    cfg = PowerStudyConfig(n=8, n_mc=10, B=19, alternative_grid=(1.0,), seed=1)
    t = run_generator_study(cfg, lambda r, n, p: r.normal(size=n), lambda r, n, p: r.normal(size=n) + 100)
    assert t.rows[0].ks_power == 0.0 and t.rows[0].energy_power == 1.0
