"""Normal densities under the Hellinger distance.

The zero-mean subspace is parametrised by the standard deviation alone;
``sigma -> 1/sigma`` is a distance-preserving bijection of it, which is
what makes this space a convenient illustration of isometry blindness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class GaussianParam:
    mean: float
    sigma: float

    def __post_init__(self):
        if not math.isfinite(self.mean):
            raise ValueError(f"mean must be finite, got {self.mean}")
        if not (math.isfinite(self.sigma) and self.sigma > 0):
            raise ValueError(f"sigma must be positive and finite, got {self.sigma}")


def hellinger_sq(g1: GaussianParam, g2: GaussianParam) -> float:
    v = g1.sigma ** 2 + g2.sigma ** 2
    bc = math.sqrt(2 * (g1.sigma * g2.sigma) / v) * math.exp(-0.25 * (g1.mean - g2.mean) ** 2 / v)
    return max(0.0, 1.0 - bc)


def hellinger_distance(g1: GaussianParam, g2: GaussianParam) -> float:
    """Hellinger distance between two univariate normals; lies in [0, 1]."""
    if g1 == g2:
        return 0.0
    return math.sqrt(hellinger_sq(g1, g2))


def hellinger_matrix(params) -> np.ndarray:
    """Vectorised pairwise Hellinger distances for a sequence of GaussianParam."""
    mu = np.array([g.mean for g in params], dtype=float)
    sd = np.array([g.sigma for g in params], dtype=float)
    v = sd[:, None] ** 2 + sd[None, :] ** 2
    bc = np.sqrt(2 * sd[:, None] * sd[None, :] / v) * np.exp(-0.25 * (mu[:, None] - mu[None, :]) ** 2 / v)
    d = np.sqrt(np.clip(1.0 - bc, 0.0, None))
    d = np.triu(d, 1)
    return d + d.T


def reciprocal_isometry(g: GaussianParam) -> GaussianParam:
    if g.mean != 0:
        raise ValueError("isometry defined on zero-mean subspace")
    return GaussianParam(0.0, 1.0 / g.sigma)


def _check_ball_args(x, t):
    if not (x > 0 and math.isfinite(x)):
        raise ValueError(f"centre sigma must be positive, got {x}")
    if not 0 < t < 1:
        raise ValueError(f"radius must lie in (0, 1), got {t}")
    s = 1.0 - t * t
    assert 0 < s < 1
    return s


def ball_mass_interval(x: float, t: float) -> tuple[float, float]:
    """The sigma interval whose exponential mass ``ball_mass_exponential`` reports.

    Centre ``x/s^2`` and half-width ``x*sqrt(1/s^2 - 1)`` with ``s = 1 - t^2``.
    """
    s = _check_ball_args(x, t)
    c = x / (s * s)
    h = x * math.sqrt(1.0 / (s * s) - 1.0)
    return c - h, c + h


def ball_mass_exponential(x: float, t: float) -> float:
    """``2 exp(-x/s^2) sinh(x sqrt(1/s^2 - 1))`` for standard-exponential sigma.

    Evaluated as ``exp(h - c) * (-expm1(-2h))`` so that small radii do not
    lose precision to cancellation.

    Note this is the closed form as usually quoted for this example; it is
    the exponential mass of :func:`ball_mass_interval`, which is not the
    Hellinger ball of radius ``t`` around ``N(0, x^2)``.  The exact ball
    mass is :func:`hellinger_ball_mass_exponential`.
    """
    s = _check_ball_args(x, t)
    c = x / (s * s)
    h = x * math.sqrt(1.0 / (s * s) - 1.0)
    mass = math.exp(h - c) * -math.expm1(-2.0 * h)
    assert 0.0 <= mass <= 1.0
    return mass


def ball_interval(sigma0: float, u: float) -> tuple[float, float]:
    """Open interval of sigma with ``2 sigma0 sigma / (sigma0^2 + sigma^2) > u``."""
    if not (sigma0 > 0 and math.isfinite(sigma0)):
        raise ValueError(f"sigma0 must be positive, got {sigma0}")
    if not 0 < u < 1:
        raise ValueError(f"u must lie in (0, 1), got {u}")
    h = sigma0 * math.sqrt(1.0 / (u * u) - 1.0)
    hi = sigma0 / u + h
    # lo * hi = sigma0^2; the product form avoids cancellation as u -> 1
    return sigma0 * sigma0 / hi, hi


def hellinger_ball_mass_exponential(x: float, t: float) -> float:
    """Standard-exponential probability that ``d(N(0, sigma^2), N(0, x^2)) <= t``."""
    s = _check_ball_args(x, t)
    lo, hi = ball_interval(x, s * s)
    return math.exp(-lo) - math.exp(-hi)


def sample_gaussians(
    rng: np.random.Generator,
    n: int,
    sigma_sampler: Callable[[np.random.Generator, int], np.ndarray] | None = None,
    mean: float = 0.0,
) -> list[GaussianParam]:
    """``n`` normals with common mean and i.i.d. sigma (standard exponential by default)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if sigma_sampler is None:
        sigmas = rng.standard_exponential(n)
    else:
        sigmas = np.asarray(sigma_sampler(rng, n), dtype=float)
    return [GaussianParam(float(mean), float(s)) for s in sigmas]


def read_gaussian_csv(fh, *, zero_mean: bool = False) -> list[GaussianParam]:
    """CSV with a ``mean,sigma`` header (header optional)."""
    out = []
    for lineno, line in enumerate(fh, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        toks = [tok.strip() for tok in line.split(",")]
        if toks == ["mean", "sigma"]:
            continue
        if len(toks) != 2:
            raise ValueError(f"line {lineno}: expected 'mean,sigma'")
        try:
            g = GaussianParam(float(toks[0]), float(toks[1]))
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from exc
        if zero_mean and g.mean != 0:
            raise ValueError(f"line {lineno}: nonzero mean with --zero-mean")
        out.append(g)
    return out
