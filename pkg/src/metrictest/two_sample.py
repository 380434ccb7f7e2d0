"""Two-sample tests built on distance matrices.

``ks_row_test`` compares the medoid rows of the two within-sample distance
matrices with a two-sample Kolmogorov-Smirnov test.  The energy test needs
cross-sample distances and so works on the pooled matrix; its critical
value comes from random equal re-splits of the pooled sample.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import kolmogi, kolmogorov

from .metric_core import DistanceMatrix, medoid_index, row_distances

# Asymptotic two-sample KS constants c(alpha).
KS_CONSTANTS = {0.10: 1.22, 0.05: 1.36, 0.01: 1.63}


@dataclass
class TestResult:
    test: str
    statistic: float
    critical_value: float
    p_value: float | None
    reject: bool
    alpha: float
    sample_x: np.ndarray = field(repr=False)
    sample_y: np.ndarray = field(repr=False)
    seed: int | None = None
    replicates: np.ndarray | None = field(default=None, repr=False)

    __test__ = False  # keep pytest from collecting this class

    def to_dict(self) -> dict:
        return {
            "test": self.test,
            "statistic": float(self.statistic),
            "critical_value": float(self.critical_value),
            "p_value": None if self.p_value is None else float(self.p_value),
            "reject": bool(self.reject),
            "alpha": float(self.alpha),
            "n_x": int(len(self.sample_x)),
            "n_y": int(len(self.sample_y)),
            "seed": self.seed,
            "samples_x": [float(v) for v in self.sample_x],
            "samples_y": [float(v) for v in self.sample_y],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def ks_statistic(a, b) -> float:
    """sup_s |F_a(s) - F_b(s)| with right-continuous empirical CDFs."""
    a = np.sort(np.asarray(a, dtype=float).ravel())
    b = np.sort(np.asarray(b, dtype=float).ravel())
    if a.size == 0 or b.size == 0:
        raise ValueError("KS statistic needs two nonempty samples")
    pooled = np.concatenate([a, b])
    fa = np.searchsorted(a, pooled, side="right") / a.size
    fb = np.searchsorted(b, pooled, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


def ks_critical(n1: int, n2: int, alpha: float = 0.05, *, asymptotic_inverse: bool = False) -> float:
    """``c(alpha) * sqrt(1/n1 + 1/n2)``.

    ``c`` comes from the usual table (1.22, 1.36, 1.63) unless
    ``asymptotic_inverse`` is set, in which case it is the exact inverse of
    the Kolmogorov limiting distribution at ``alpha``.
    """
    if n1 < 1 or n2 < 1:
        raise ValueError("sample sizes must be positive")
    if asymptotic_inverse:
        if not 0 < alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        c = float(kolmogi(alpha))
    else:
        try:
            c = KS_CONSTANTS[alpha]
        except KeyError:
            raise ValueError(
                f"alpha={alpha} not tabulated; use one of {sorted(KS_CONSTANTS)} or asymptotic_inverse=True"
            ) from None
    return c * math.sqrt(1.0 / n1 + 1.0 / n2)


def ks_pvalue(statistic: float, n1: int, n2: int) -> float:
    """Asymptotic Kolmogorov tail probability at the size-scaled statistic."""
    scale = math.sqrt(n1 * n2 / (n1 + n2))
    return float(kolmogorov(scale * statistic))


def ks_samples_test(a, b, alpha: float = 0.05, *, name: str = "ks") -> TestResult:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    stat = ks_statistic(a, b)
    crit = ks_critical(a.size, b.size, alpha, asymptotic_inverse=alpha not in KS_CONSTANTS)
    return TestResult(
        test=name,
        statistic=stat,
        critical_value=crit,
        p_value=ks_pvalue(stat, a.size, b.size),
        reject=stat > crit,
        alpha=alpha,
        sample_x=a,
        sample_y=b,
    )


def ks_row_test(DX: DistanceMatrix, DY: DistanceMatrix, alpha: float = 0.05) -> TestResult:
    """KS test on the distances from each sample's medoid to the rest of its sample.

    Samples may differ in size; the critical value then uses
    ``sqrt(1/(nX-1) + 1/(nY-1))``.  Degenerate samples (all distances
    equal) are not special-cased: the CDFs are point masses and the
    statistic is 0 or 1.
    """
    if DX.n < 2 or DY.n < 2:
        raise ValueError("each sample needs at least two points")
    rx = row_distances(DX, medoid_index(DX))
    ry = row_distances(DY, medoid_index(DY))
    return ks_samples_test(rx, ry, alpha, name="ks")


def _check_labels(labels, n_total):
    labels = np.asarray(labels).astype(bool).ravel()
    if labels.size != n_total:
        raise ValueError(f"{labels.size} labels for {n_total} points")
    n_y = int(labels.sum())
    if n_y * 2 != n_total:
        raise ValueError("energy statistic needs two groups of equal size")
    return labels


def _energy_from_indicator(d, ind, n):
    """Vectorised statistic for each row of a 0/1 membership matrix.

    With ``S`` the sum of all entries of ``d``, ``Sxx`` and ``Syy`` the
    within-group sums, the cross sum is ``(S - Sxx - Syy) / 2``.
    """
    total = d.sum()
    row_x = ind @ d
    sxx = np.einsum("bi,bi->b", row_x, ind)
    # Syy = S - 2 * sum_{i in X} rowsum_i + Sxx
    rowsum = d.sum(axis=1)
    sx_all = ind @ rowsum
    syy = total - 2 * sx_all + sxx
    sxy = (total - sxx - syy) / 2
    return (2 * sxy - sxx - syy) / n ** 2


def energy_statistic(D_pooled: DistanceMatrix, labels) -> float:
    """Energy statistic with equal group sizes; ``labels`` is True for the Y group.

    All ordered pairs enter the double sums, diagonal terms included.  It
    is not clipped at zero.
    """
    d = D_pooled.d
    labels = _check_labels(labels, d.shape[0])
    ind = (~labels).astype(float)[None, :]
    return float(_energy_from_indicator(d, ind, d.shape[0] // 2)[0])


def random_equal_splits(rng: np.random.Generator, n_total: int, B: int) -> np.ndarray:
    """``B x n_total`` 0/1 matrix; each row marks a uniform random half."""
    keys = rng.random((B, n_total))
    ranks = np.argsort(np.argsort(keys, axis=1), axis=1)
    return (ranks < n_total // 2).astype(float)


def energy_permutation_test(
    D_pooled: DistanceMatrix,
    labels,
    B: int = 1000,
    alpha: float = 0.05,
    rng: np.random.Generator | int | None = None,
) -> TestResult:
    """Energy test with a re-split critical value.

    Each replicate assigns a uniformly random half of the pooled points to
    one group (sampling without replacement).  The critical value is the
    empirical ``1 - alpha`` quantile of the replicates and the decision is
    ``statistic > critical``.  The p-value uses the add-one convention
    ``(1 + #{rep >= stat}) / (B + 1)``; because the quantile is
    interpolated the two can disagree at the boundary, and the decision
    follows the quantile rule.
    """
    d = D_pooled.d
    n_total = d.shape[0]
    if n_total % 2:
        raise ValueError("pooled sample size must be even")
    if B < 1:
        raise ValueError("B must be at least 1")
    seed = rng if isinstance(rng, (int, np.integer)) else None
    rng = np.random.default_rng(rng)
    labels = _check_labels(labels, n_total)
    n = n_total // 2
    stat = energy_statistic(D_pooled, labels)
    ind = random_equal_splits(rng, n_total, B)
    reps = _energy_from_indicator(d, ind, n)
    crit = float(np.quantile(reps, 1 - alpha))
    p = (1 + int(np.count_nonzero(reps >= stat))) / (B + 1)
    # medoid rows of each group, kept for CDF plots alongside the KS test
    xi = np.flatnonzero(~labels)
    yi = np.flatnonzero(labels)
    DX, DY = D_pooled.submatrix(xi), D_pooled.submatrix(yi)
    return TestResult(
        test="energy",
        statistic=stat,
        critical_value=crit,
        p_value=p,
        reject=stat > crit,
        alpha=alpha,
        sample_x=row_distances(DX, medoid_index(DX)) if n > 1 else np.zeros(0),
        sample_y=row_distances(DY, medoid_index(DY)) if n > 1 else np.zeros(0),
        seed=None if seed is None else int(seed),
        replicates=reps,
    )


def split_half_self_test(D: DistanceMatrix, alpha: float = 0.05) -> TestResult:
    """KS row test between the first and second halves of one sample."""
    n = D.n
    if n < 4:
        raise ValueError("self-test needs at least four points")
    m = n // 2
    res = ks_row_test(D.submatrix(range(m)), D.submatrix(range(m, n)), alpha)
    res.test = "selftest"
    return res
