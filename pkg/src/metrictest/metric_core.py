"""Distance matrices, medoid rows and empirical ball processes.

Everything downstream (the two-sample tests, the simulation harness, the
CLI) talks to a metric space only through a :class:`DistanceMatrix`, so
the same machinery serves the real line, the Hellinger space of normals
and BHV tree space.
"""

from __future__ import annotations

import io
import math
import warnings
from collections import namedtuple
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

TRIANGLE_TOL = 1e-9
# Exhaustive O(n^3) triangle audit up to this size, random triples above.
_EXHAUSTIVE_TRIANGLE_MAX_N = 200
_SAMPLED_TRIPLES = 20000


class DistanceMatrixError(ValueError):
    """A matrix violates the hard invariants (shape, symmetry, diagonal, sign)."""


class TriangleInequalityWarning(UserWarning):
    pass


class TriangleInequalityError(DistanceMatrixError):
    pass


class MetricEvaluationError(ValueError):
    """Raised when the metric fails on a specific pair of points."""

    def __init__(self, i, j, cause):
        super().__init__(f"metric failed on points ({i}, {j}): {cause}")
        self.pair = (i, j)
        self.cause = cause


TriangleAudit = namedtuple("TriangleAudit", ["triples_checked", "violations", "worst_excess"])


def _triangle_audit(d, tol=TRIANGLE_TOL, rng=None):
    n = d.shape[0]
    if n < 3:
        return TriangleAudit(0, 0, 0.0)
    if n <= _EXHAUSTIVE_TRIANGLE_MAX_N:
        worst = 0.0
        violations = 0
        for j in range(n):
            # d[i,k] - (d[i,j] + d[j,k]) over all i, k for this pivot j
            excess = d - (d[:, j, None] + d[None, j, :])
            violations += int(np.count_nonzero(excess > tol))
            worst = max(worst, float(excess.max()))
        return TriangleAudit(n ** 3, violations, max(worst, 0.0))
    rng = np.random.default_rng(0) if rng is None else rng
    i, j, k = rng.integers(0, n, size=(3, _SAMPLED_TRIPLES))
    excess = d[i, k] - (d[i, j] + d[j, k])
    return TriangleAudit(
        _SAMPLED_TRIPLES, int(np.count_nonzero(excess > tol)), max(float(excess.max()), 0.0)
    )


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    """Symmetric, nonnegative, zero-diagonal matrix of pairwise distances.

    Hard invariants are enforced on construction. The triangle inequality
    is audited and reported through :class:`TriangleInequalityWarning`
    unless ``strict=True``, in which case a violation raises.
    """

    d: np.ndarray
    audit: TriangleAudit | None = None

    def __init__(self, d, *, strict: bool = False, check_triangle: bool = True):
        arr = np.array(d, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
            raise DistanceMatrixError(f"expected a nonempty square matrix, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise DistanceMatrixError("distances must be finite")
        if np.any(np.diag(arr) != 0):
            raise DistanceMatrixError("diagonal must be exactly zero")
        if not np.array_equal(arr, arr.T):
            raise DistanceMatrixError("matrix must be exactly symmetric")
        if np.any(arr < 0):
            raise DistanceMatrixError("distances must be nonnegative")
        arr.setflags(write=False)
        object.__setattr__(self, "d", arr)
        audit = None
        if check_triangle:
            audit = _triangle_audit(arr)
            if audit.violations:
                msg = (
                    f"triangle inequality violated in {audit.violations} of "
                    f"{audit.triples_checked} triples (worst excess {audit.worst_excess:.3g})"
                )
                if strict:
                    raise TriangleInequalityError(msg)
                warnings.warn(msg, TriangleInequalityWarning, stacklevel=2)
        object.__setattr__(self, "audit", audit)

    @classmethod
    def _trusted(cls, arr):
        # Skip validation for matrices derived from an already valid one.
        obj = object.__new__(cls)
        arr = np.asarray(arr, dtype=float)
        arr.setflags(write=False)
        object.__setattr__(obj, "d", arr)
        object.__setattr__(obj, "audit", None)
        return obj

    @property
    def n(self) -> int:
        return self.d.shape[0]

    def __len__(self):
        return self.n

    def __getitem__(self, idx):
        return self.d[idx]

    def submatrix(self, indices) -> "DistanceMatrix":
        idx = np.asarray(indices, dtype=int)
        return DistanceMatrix._trusted(self.d[np.ix_(idx, idx)])

    def permuted(self, perm) -> "DistanceMatrix":
        """Relabel points so that new point ``k`` is old point ``perm[k]``."""
        return self.submatrix(perm)

    def to_csv(self) -> str:
        buf = io.StringIO()
        write_matrix_csv(self, buf)
        return buf.getvalue()


def pairwise_distances(points: Sequence, metric: Callable) -> DistanceMatrix:
    """Evaluate ``metric`` once per unordered pair and mirror the result."""
    n = len(points)
    if n < 1:
        raise ValueError("need at least one point")
    d = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            try:
                v = float(metric(points[i], points[j]))
            except Exception as exc:  # surfaced with the offending pair
                raise MetricEvaluationError(i, j, exc) from exc
            d[i, j] = d[j, i] = v
    return DistanceMatrix(d)


def line_distances(x) -> DistanceMatrix:
    """Vectorised ``|x_i - x_j|`` matrix for points on the real line."""
    x = np.asarray(x, dtype=float).ravel()
    d = np.abs(x[:, None] - x[None, :])
    # |a-b| and |b-a| are bitwise equal, so symmetry is exact.
    return DistanceMatrix._trusted(d)


def euclidean_distances(x) -> DistanceMatrix:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        return line_distances(x)
    diff = x[:, None, :] - x[None, :, :]
    d = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    d = np.triu(d, 1)
    return DistanceMatrix(d + d.T)


def medoid_index(D: DistanceMatrix) -> int:
    """Index of the point with the smallest row sum; ties go to the lowest index."""
    if D.n < 2:
        raise ValueError("medoid undefined for fewer than two points")
    # np.argmin returns the first minimiser
    return int(np.argmin(D.d.sum(axis=1)))


def row_distances(D: DistanceMatrix, i: int) -> np.ndarray:
    """Row ``i`` without its diagonal entry, in index order."""
    n = D.n
    if n < 2:
        raise ValueError("row distances need at least two points")
    if not 0 <= i < n:
        raise IndexError(f"row index {i} out of range for {n} points")
    return np.delete(D.d[i], i)


@dataclass(frozen=True)
class BallProcessPath:
    center_index: int
    grid: np.ndarray
    values: np.ndarray


def _check_grid(grid):
    grid = np.asarray(grid, dtype=float).ravel()
    if grid.size == 0:
        raise ValueError("radius grid is empty")
    if np.any(grid < 0) or np.any(np.diff(grid) <= 0):
        raise ValueError("radius grid must be nonnegative and strictly increasing")
    return grid


def empirical_ball_process(D: DistanceMatrix, i: int, grid) -> BallProcessPath:
    """Fraction of the other points inside the closed ball of each radius around point ``i``."""
    grid = _check_grid(grid)
    row = np.sort(row_distances(D, i))
    counts = np.searchsorted(row, grid, side="right")
    return BallProcessPath(int(i), grid, counts / row.size)


MomentEstimates = namedtuple("MomentEstimates", ["ball_average", "indicator_average"])


def moment_diagnostic(D: DistanceMatrix, thresholds, powers) -> MomentEstimates:
    """Estimate ``E prod_j S(t_j)^{r_j}`` two ways.

    ``ball_average`` averages products of empirical ball masses over all
    centres.  ``indicator_average`` is the U-statistic that averages
    ``prod 1{d(x_i, x_k) <= t}`` over tuples of pairwise distinct indices,
    one index slot per unit of power.  Closed balls around one centre are
    nested, so the tuple count for a centre is a falling product and never
    needs explicit enumeration.
    """
    thresholds = np.asarray(thresholds, dtype=float).ravel()
    powers = np.asarray(powers, dtype=int).ravel()
    if thresholds.size == 0 or thresholds.size != powers.size:
        raise ValueError("thresholds and powers must be nonempty and of equal length")
    if np.any(powers < 0):
        raise ValueError("powers must be nonnegative")
    n = D.n
    total = int(powers.sum())
    if n < 1 + total or n < 2:
        raise ValueError(f"need at least {max(1 + total, 2)} points for powers {powers.tolist()}")

    rows = np.sort(np.where(np.eye(n, dtype=bool), np.inf, D.d), axis=1)[:, : n - 1]
    counts = np.stack([np.searchsorted(r, thresholds, side="right") for r in rows])

    masses = counts / (n - 1)
    ball_avg = float(np.mean(np.prod(masses ** powers, axis=1)))

    slots = np.repeat(thresholds, powers)
    slot_counts = np.repeat(counts, powers, axis=1)
    order = np.argsort(slots, kind="stable")
    slot_counts = slot_counts[:, order]
    offsets = np.arange(total)
    injective = np.prod(np.clip(slot_counts - offsets, 0, None).astype(float), axis=1)
    n_tuples = math.prod(range(n - 1, n - 1 - total, -1))
    ind_avg = float(np.mean(injective / n_tuples))
    return MomentEstimates(ball_avg, ind_avg)


def write_matrix_csv(D: DistanceMatrix, fh, header_lines: Sequence[str] = ()) -> None:
    for line in header_lines:
        fh.write(f"# {line}\n")
    for row in D.d:
        fh.write(",".join(repr(float(v)) for v in row))
        fh.write("\n")


def read_matrix_csv(fh, *, strict: bool = False) -> DistanceMatrix:
    rows = []
    for lineno, line in enumerate(fh, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            rows.append([float(tok) for tok in line.split(",")])
        except ValueError as exc:
            raise DistanceMatrixError(f"line {lineno}: {exc}") from exc
    if not rows:
        raise DistanceMatrixError("no matrix rows found")
    if any(len(r) != len(rows) for r in rows):
        raise DistanceMatrixError(f"expected {len(rows)} values on every row")
    return DistanceMatrix(rows, strict=strict)
