"""Brute-force reference computations used only by the test suite.

None of these share code paths with the package beyond the PhyloTree
container; they enumerate rather than optimise.
"""

import itertools
import math
from fractions import Fraction


def _compat(a, b):
    x = a & b
    return x == 0 or x == a or x == b


def _subsets(items):
    for r in range(len(items) + 1):
        for combo in itertools.combinations(items, r):
            yield combo


def brute_bhv_distance(t1, t2):
    """Geodesic length by minimising over every valid ordered support.

    Shared clades contribute (w1 - w2)^2.  All other clades of both trees
    are placed into an ordered sequence of pairs (A_i, B_i) (one side may
    be empty, not both) such that every later A is compatible with every
    earlier B and the ratios |A_i|/|B_i| are nondecreasing; each such
    support is realised by a path of length sqrt(sum (|A_i|+|B_i|)^2).
    """
    wa, wb = t1.clades, t2.clades
    shared = wa.keys() & wb.keys()
    common = sum((wa[c] - wb[c]) ** 2 for c in shared)
    A = tuple(sorted(c for c in wa if c not in shared))
    B = tuple(sorted(c for c in wb if c not in shared))
    best = math.inf

    def norm(w, items):
        return math.sqrt(sum(w[c] ** 2 for c in items))

    def rec(rem_a, rem_b, last_ratio, acc):
        nonlocal best
        if acc >= best:
            return
        if not rem_a and not rem_b:
            best = acc
            return
        for sa in _subsets(rem_a):
            left_a = tuple(c for c in rem_a if c not in sa)
            for sb in _subsets(rem_b):
                if not sa and not sb:
                    continue
                # later A clades must be compatible with this B block
                if any(not _compat(a, b) for a in left_a for b in sb):
                    continue
                na, nb = norm(wa, sa), norm(wb, sb)
                ratio = na / nb if nb > 0 else math.inf
                if ratio < last_ratio:
                    continue
                left_b = tuple(c for c in rem_b if c not in sb)
                rec(left_a, left_b, ratio, acc + (na + nb) ** 2)

    rec(A, B, 0.0, 0.0)
    return math.sqrt(common + best)


def brute_vertex_cover(a_w, b_w, edges):
    """Enumerate all vertex subsets; return (weight, c_a, c_b) of the lightest cover."""
    na, nb = len(a_w), len(b_w)
    best = (math.inf, None, None)
    for mask in range(1 << (na + nb)):
        ca = [i for i in range(na) if mask >> i & 1]
        cb = [j for j in range(nb) if mask >> (na + j) & 1]
        if all(i in ca or j in cb for i, j in edges):
            w = sum(a_w[i] for i in ca) + sum(b_w[j] for j in cb)
            if w < best[0]:
                best = (w, ca, cb)
    return best


def brute_ks(a, b):
    """sup |F_a - F_b| over the pooled points, counting with <=, plain floats."""
    n1, n2 = len(a), len(b)
    best = 0.0
    for s in list(a) + list(b):
        ca = sum(1 for v in a if v <= s)
        cb = sum(1 for v in b if v <= s)
        best = max(best, abs(ca / n1 - cb / n2))
    return best


def brute_energy(D, labels):
    """The n^-2 double-sum energy statistic with explicit loops."""
    xs = [i for i, l in enumerate(labels) if not l]
    ys = [i for i, l in enumerate(labels) if l]
    n = len(xs)
    xy = sum(D[i][j] for i in xs for j in ys)
    xx = sum(D[i][j] for i in xs for j in xs)
    yy = sum(D[i][j] for i in ys for j in ys)
    return (2 * xy - xx - yy) / n ** 2


def brute_moment_indicator(D, thresholds, powers):
    """Average indicator products over all tuples of distinct indices."""
    n = len(D)
    slots = [t for t, r in zip(thresholds, powers) for _ in range(r)]
    total = Fraction(0)
    count = 0
    for i in range(n):
        others = [k for k in range(n) if k != i]
        for tup in itertools.permutations(others, len(slots)):
            count += 1
            if all(D[i][k] <= t for k, t in zip(tup, slots)):
                total += 1
    return float(total / count)


def count_rooted_binary_topologies(n):
    return math.prod(range(1, 2 * n - 2, 2))
