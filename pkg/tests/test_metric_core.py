import io
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from metrictest.metric_core import (
    DistanceMatrix,
    DistanceMatrixError,
    MetricEvaluationError,
    TriangleInequalityError,
    TriangleInequalityWarning,
    empirical_ball_process,
    euclidean_distances,
    line_distances,
    medoid_index,
    moment_diagnostic,
    pairwise_distances,
    read_matrix_csv,
    row_distances,
    write_matrix_csv,
)

from oracles import brute_moment_indicator

LINE = [0.0, 1.0, 3.0]


def absdiff(a, b):
    return abs(a - b)


@pytest.fixture
def line3():
    return pairwise_distances(LINE, absdiff)


def test_single_point_is_zero_matrix():
    D = pairwise_distances([5.0], absdiff)
    assert D.n == 1
    assert D.d.tolist() == [[0.0]]


def test_line_points(line3):
    assert line3.d.tolist() == [[0, 1, 3], [1, 0, 2], [3, 2, 0]]


def test_normal_draws_pass_invariants():
    x = np.random.default_rng(0).standard_normal(40)
    D = pairwise_distances(list(x), absdiff)
    assert np.array_equal(D.d, D.d.T)
    assert np.all(np.diag(D.d) == 0)
    assert np.all(D.d >= 0)
    assert D.audit.violations == 0
    assert D.audit.triples_checked == 40 ** 3
    np.testing.assert_array_equal(D.d, line_distances(x).d)


def test_metric_failure_names_pair():
    def bad(a, b):
        if {a, b} == {1.0, 3.0}:
            raise ValueError("boom")
        return abs(a - b)

    with pytest.raises(MetricEvaluationError) as exc:
        pairwise_distances(LINE, bad)
    assert exc.value.pair == (1, 2)


@pytest.mark.parametrize(
    "bad",
    [
        [[0, 1], [2, 0]],
        [[1, 0], [0, 0]],
        [[0, -1], [-1, 0]],
        [[0, 1, 2]],
    ],
)
def test_hard_invariants_rejected(bad):
    with pytest.raises(DistanceMatrixError):
        DistanceMatrix(bad)


def test_triangle_violation_warns_or_raises():
    d = [[0, 1, 5], [1, 0, 1], [5, 1, 0]]
    with pytest.warns(TriangleInequalityWarning):
        D = DistanceMatrix(d)
    assert D.audit.violations > 0
    with pytest.raises(TriangleInequalityError):
        DistanceMatrix(d, strict=True)


def test_rounding_noise_within_tolerance_is_silent():
    d = np.array([[0, 1, 2 + 5e-10], [1, 0, 1], [2 + 5e-10, 1, 0]])
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        DistanceMatrix(d, strict=True)


def test_csv_round_trip(line3):
    x = np.random.default_rng(3).standard_normal((7, 3))
    D = euclidean_distances(x)
    buf = io.StringIO()
    write_matrix_csv(D, buf, ["seed=3"])
    text = buf.getvalue()
    assert text.startswith("# seed=3\n")
    back = read_matrix_csv(io.StringIO(text))
    assert np.array_equal(back.d, D.d)
    assert line3.to_csv() == "0.0,1.0,3.0\n1.0,0.0,2.0\n3.0,2.0,0.0\n"


def test_csv_ragged_rejected():
    with pytest.raises(DistanceMatrixError):
        read_matrix_csv(io.StringIO("0,1\n1,0,2\n"))


# -- medoid and rows


def test_medoid_line(line3):
    sums = line3.d.sum(axis=1).tolist()
    assert sums == [4, 3, 5]
    assert medoid_index(line3) == int(np.argmin(sums)) == 1


def test_medoid_ties_lowest_index():
    d = np.ones((5, 5)) - np.eye(5)
    assert medoid_index(DistanceMatrix(d)) == 0
    assert medoid_index(DistanceMatrix([[0, 2], [2, 0]])) == 0


def test_medoid_undefined_for_one_point():
    with pytest.raises(ValueError, match="medoid undefined"):
        medoid_index(DistanceMatrix([[0.0]]))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 25))
def test_medoid_follows_relabelling(seed, n):
    rng = np.random.default_rng(seed)
    D = line_distances(rng.standard_normal(n))
    perm = rng.permutation(n)
    P = D.permuted(perm)
    # new point k is old point perm[k]; with tied row sums any minimiser may win
    sums = D.d.sum(axis=1)
    assert sums[perm[medoid_index(P)]] <= sums.min() + 1e-12
    if np.sum(sums <= sums.min() + 1e-12) == 1:
        assert perm[medoid_index(P)] == medoid_index(D)


def test_row_distances(line3):
    assert row_distances(line3, 1).tolist() == [1, 2]
    m = medoid_index(line3)
    r = row_distances(line3, m)
    assert len(r) == 2 and np.all(r >= 0)
    assert row_distances(DistanceMatrix(np.zeros((4, 4))), 2).tolist() == [0, 0, 0]
    with pytest.raises(IndexError):
        row_distances(line3, 3)


# -- ball process


def test_ball_process_worked_example(line3):
    # distances from point 0 are {1, 3}
    path = empirical_ball_process(line3, 0, [0.5, 1.5, 3.5])
    assert path.values.tolist() == [0, 0.5, 1]


def test_ball_process_edges(line3):
    assert empirical_ball_process(line3, 2, [0.0]).values.tolist() == [0.0]
    path = empirical_ball_process(line3, 1, [0.0, 2.0])
    assert path.values[-1] == 1.0
    # closed balls: a point at exactly distance t counts
    assert empirical_ball_process(line3, 0, [1.0]).values.tolist() == [0.5]
    with pytest.raises(ValueError):
        empirical_ball_process(line3, 0, [])
    with pytest.raises(ValueError):
        empirical_ball_process(line3, 0, [1.0, 0.5])


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 30))
def test_ball_process_nondecreasing_and_duplicate(seed, n):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n)
    D = line_distances(x)
    grid = np.linspace(0, 6, 25)
    i = int(rng.integers(n))
    path = empirical_ball_process(D, i, grid)
    assert np.all(np.diff(path.values) >= 0)
    assert np.all((0 <= path.values) & (path.values <= 1))
    # a duplicate of point i sits at distance 0: count +1, denominator +1
    dup = line_distances(np.append(x, x[i]))
    path2 = empirical_ball_process(dup, i, grid)
    counts = np.rint(path.values * (n - 1))
    np.testing.assert_allclose(path2.values, (counts + 1) / n, rtol=0, atol=1e-15)


# -- moment diagnostic


def test_moment_full_and_empty(line3):
    assert moment_diagnostic(line3, [10.0], [1]) == (1.0, 1.0)
    assert moment_diagnostic(line3, [0.0], [1]) == (0.0, 0.0)


def test_moment_insufficient_points(line3):
    with pytest.raises(ValueError):
        moment_diagnostic(line3, [1.0], [3])


@pytest.mark.parametrize(
    "thresholds,powers",
    [([1.5], [2]), ([0.5, 2.5], [1, 1]), ([2.5, 0.7], [1, 2]), ([1.0, 1.2, 3.0], [1, 1, 1])],
)
def test_moment_indicator_form_matches_enumeration(thresholds, powers):
    x = np.random.default_rng(5).uniform(0, 3, 7)
    D = line_distances(x)
    est = moment_diagnostic(D, thresholds, powers)
    assert est.indicator_average == pytest.approx(brute_moment_indicator(D.d, thresholds, powers), abs=1e-12)


def test_moment_forms_agree_for_single_power():
    x = np.random.default_rng(8).standard_normal(30)
    D = line_distances(x)
    for t in np.sort(row_distances(D, 0)):
        a, b = moment_diagnostic(D, [t], [1])
        assert a == pytest.approx(b, abs=1e-15)


def test_moment_forms_converge():
    x = np.random.default_rng(2024).uniform(0, 1, 200)
    a, b = moment_diagnostic(line_distances(x), [0.25], [2])
    assert abs(a - b) < 0.05
