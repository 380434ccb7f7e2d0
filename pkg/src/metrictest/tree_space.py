"""BHV tree space: rooted trees as weighted clade sets and their geodesics.

A clade is stored as an ``int`` bitmask over the leaf labels ``1..n``
(label ``k`` is bit ``k - 1``).  The root acts as an implicit extra leaf,
so a clade is the label set on the non-root side of an internal edge and
two clades can coexist in one tree iff they are nested or disjoint.

The geodesic distance follows the iterative support refinement of Owen
and Provan: common clades contribute coordinatewise, the remaining clades
split into independent subproblems, and inside each subproblem the cone
path is refined by minimum-weight vertex covers of the bipartite
incompatibility graph until no pair of the support can be split.
"""

from __future__ import annotations

import math
import warnings
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

SPLIT_TOL = 1e-10
_FLOW_EPS = 1e-14


class NewickError(ValueError):
    def __init__(self, message, position=None):
        where = f" at position {position}" if position is not None else ""
        super().__init__(message + where)
        self.position = position


class LeafBranchLengthWarning(UserWarning):
    pass


# --------------------------------------------------------------------------
# clades


def clade(*labels: int) -> int:
    """Bitmask for the clade containing ``labels``."""
    if len(labels) == 1 and not isinstance(labels[0], (int, np.integer)):
        labels = tuple(labels[0])
    mask = 0
    for lab in labels:
        if lab < 1:
            raise ValueError(f"leaf labels start at 1, got {lab}")
        mask |= 1 << (int(lab) - 1)
    return mask


def clade_members(mask: int) -> tuple[int, ...]:
    out = []
    k = 1
    while mask:
        if mask & 1:
            out.append(k)
        mask >>= 1
        k += 1
    return tuple(out)


def _as_mask(c) -> int:
    if isinstance(c, (int, np.integer)):
        return int(c)
    return clade(*c)


def compatible(a, b, n_leaves: int | None = None) -> bool:
    """True iff the two clades are nested or disjoint.

    Clades may be bitmasks or iterables of labels.  When ``n_leaves`` is
    given, both clades must lie inside ``1..n_leaves``.
    """
    a, b = _as_mask(a), _as_mask(b)
    if n_leaves is not None:
        full = (1 << n_leaves) - 1
        if a & ~full or b & ~full:
            raise ValueError(f"clade uses labels outside 1..{n_leaves}")
    both = a & b
    return both == 0 or both == a or both == b


# --------------------------------------------------------------------------
# trees


@dataclass(frozen=True, eq=True)
class PhyloTree:
    """A point of BHV_n: a rooted tree given by its weighted internal clades.

    ``clades`` maps clade bitmasks to nonnegative branch lengths.  Zero
    weights are dropped, so a topology is canonical and the cone point is
    the empty map.
    """

    n_leaves: int
    clades: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self):
        n = int(self.n_leaves)
        if n < 3:
            raise ValueError("BHV trees need at least three leaves")
        full = (1 << n) - 1
        cleaned = {}
        for c, w in dict(self.clades).items():
            c = _as_mask(c)
            w = float(w)
            if not math.isfinite(w) or w < 0:
                raise ValueError(f"clade {clade_members(c)} has invalid weight {w}")
            if c & ~full:
                raise ValueError(f"clade {clade_members(c)} uses labels outside 1..{n}")
            size = c.bit_count()
            if size < 2 or size > n - 1:
                raise ValueError(f"clade {clade_members(c)} is not an internal edge")
            if w > 0:
                cleaned[c] = w
        masks = list(cleaned)
        for i, a in enumerate(masks):
            for b in masks[i + 1:]:
                if not compatible(a, b):
                    raise ValueError(
                        f"clades {clade_members(a)} and {clade_members(b)} are incompatible"
                    )
        object.__setattr__(self, "n_leaves", n)
        object.__setattr__(self, "clades", cleaned)

    __hash__ = None

    @classmethod
    def from_labels(cls, n_leaves: int, clades: Mapping[Iterable[int], float]) -> "PhyloTree":
        return cls(n_leaves, {clade(*c): w for c, w in clades.items()})

    def labelled_clades(self) -> dict[tuple[int, ...], float]:
        return {clade_members(c): w for c, w in self.clades.items()}

    def __repr__(self):
        return f"PhyloTree({self.n_leaves}, {self.labelled_clades()!r})"


def permute_leaves(t: PhyloTree, perm) -> PhyloTree:
    """Relabel leaves; ``perm`` maps label ``k`` to ``perm[k]``.

    ``perm`` is either a mapping on ``1..n`` or a sequence whose
    ``(k-1)``-th entry is the image of ``k``.
    """
    n = t.n_leaves
    if isinstance(perm, Mapping):
        image = {int(k): int(v) for k, v in perm.items()}
    else:
        image = {k + 1: int(v) for k, v in enumerate(perm)}
    if sorted(image) != list(range(1, n + 1)) or sorted(image.values()) != list(range(1, n + 1)):
        raise ValueError(f"not a permutation of 1..{n}")
    new = {}
    for c, w in t.clades.items():
        new[clade(*(image[k] for k in clade_members(c)))] = w
    return PhyloTree(n, new)


def random_tree(
    rng: np.random.Generator,
    n_leaves: int,
    weight_sampler: Callable[[np.random.Generator, int], np.ndarray] | None = None,
) -> PhyloTree:
    """Uniform rooted binary topology with i.i.d. internal edge weights.

    Leaves are attached one at a time to a uniformly chosen edge of the
    current tree, the edge above the root included; this yields each of
    the ``(2n-3)!!`` rooted binary topologies with equal probability.
    """
    if n_leaves < 3:
        raise ValueError("random_tree needs at least three leaves")
    root = 0b11
    nodes = [0b01, 0b10, root]
    for k in range(3, n_leaves + 1):
        bit = 1 << (k - 1)
        v = nodes[int(rng.integers(len(nodes)))]
        if v == root:
            root = root | bit
            nodes.append(root)
        else:
            nodes = [m | bit if (m & v) == v and m != v else m for m in nodes]
            root |= bit
            nodes.append(v | bit)
        nodes.append(bit)
    internal = [m for m in nodes if m != root and m.bit_count() >= 2]
    if weight_sampler is None:
        weights = rng.standard_exponential(len(internal))
    else:
        weights = np.asarray(weight_sampler(rng, len(internal)), dtype=float)
    return PhyloTree(n_leaves, dict(zip(internal, weights.tolist())))


# --------------------------------------------------------------------------
# Newick


class _NewickParser:
    def __init__(self, text):
        self.text = text
        self.pos = 0
        self.leaf_lengths = 0

    def error(self, msg):
        raise NewickError(msg, self.pos)

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self):
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def length(self):
        if self.peek() != ":":
            return None
        self.pos += 1
        self.skip_ws()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos] in "0123456789.eE+-":
            self.pos += 1
        tok = self.text[start:self.pos]
        try:
            value = float(tok)
        except ValueError:
            self.pos = start
            self.error(f"invalid branch length {tok!r}")
        if not math.isfinite(value) or value < 0:
            self.pos = start
            self.error(f"negative or non-finite branch length {tok!r}")
        return value

    def subtree(self, out_clades, leaves):
        """Parse one subtree; returns its leaf bitmask."""
        ch = self.peek()
        if ch == "(":
            open_pos = self.pos
            self.pos += 1
            masks = [self.subtree(out_clades, leaves)]
            while self.peek() == ",":
                self.pos += 1
                masks.append(self.subtree(out_clades, leaves))
            if self.peek() != ")":
                self.error("expected ',' or ')'")
            self.pos += 1
            if len(masks) < 2:
                self.pos = open_pos
                self.error("internal node with a single child")
            mask = 0
            for m in masks:
                mask |= m
            if self.peek() not in ":,);":
                self.error("internal node labels are not supported")
            w = self.length()
            out_clades.append((mask, 0.0 if w is None else w, open_pos))
            return mask
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        tok = self.text[start:self.pos]
        if not tok:
            self.error("expected '(' or an integer leaf label")
        label = int(tok)
        if label < 1:
            self.pos = start
            self.error(f"leaf label {label} outside 1..n")
        if label in leaves:
            self.pos = start
            self.error(f"duplicate leaf label {label}")
        leaves[label] = start
        if self.length() is not None:
            self.leaf_lengths += 1
        return 1 << (label - 1)


def parse_newick(text: str, n_leaves: int | None = None) -> PhyloTree:
    """Parse a rooted Newick string with integer leaf labels ``1..n``.

    Internal branch lengths become clade weights (missing ones are 0 and
    therefore dropped); leaf branch lengths are discarded with a
    :class:`LeafBranchLengthWarning`.
    """
    p = _NewickParser(text)
    nodes: list = []
    leaves: dict = {}
    if p.peek() != "(":
        p.error("a tree must start with '('")
    root_mask = p.subtree(nodes, leaves)
    if p.peek() != ";":
        p.error("expected ';'")
    p.pos += 1
    if p.peek() != "":
        p.error("trailing characters after ';'")
    n = len(leaves) if n_leaves is None else n_leaves
    for label, pos in leaves.items():
        if label > n:
            raise NewickError(f"leaf label {label} outside 1..{n}", pos)
    if len(leaves) != n:
        missing = sorted(set(range(1, n + 1)) - set(leaves))
        raise NewickError(f"missing leaf labels {missing}")
    if p.leaf_lengths:
        warnings.warn(
            f"discarded {p.leaf_lengths} leaf branch lengths", LeafBranchLengthWarning, stacklevel=2
        )
    clades = {}
    for mask, w, _ in nodes:
        if mask == root_mask:
            continue
        clades[mask] = w
    return PhyloTree(n, clades)


def write_newick(t: PhyloTree) -> str:
    """Canonical Newick: children ordered by smallest leaf label."""
    n = t.n_leaves
    full = (1 << n) - 1
    masks = sorted(t.clades, key=lambda m: m.bit_count())
    children: dict[int, list[int]] = {full: []}
    for m in masks:
        children[m] = []
    for i, m in enumerate(masks):
        parent = full
        for big in masks[i + 1:]:
            if big & m == m and big != m:
                parent = big
                break
        children[parent].append(m)
    for node in children:
        covered = 0
        for c in children[node]:
            covered |= c
        leftover = node & ~covered
        children[node].extend(1 << (k - 1) for k in clade_members(leftover))

    def lowest(m):
        return (m & -m).bit_length()

    def emit(m):
        if m.bit_count() == 1:
            return str(lowest(m))
        inner = ",".join(emit(c) for c in sorted(children[m], key=lowest))
        if m == full:
            return f"({inner})"
        return f"({inner}):{t.clades[m]!r}"

    return emit(full) + ";"


def read_tree_list(fh, n_leaves: int | None = None) -> list[PhyloTree]:
    """One Newick string per line; blank and ``#`` lines are skipped."""
    trees = []
    for lineno, line in enumerate(fh, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            trees.append(parse_newick(line, n_leaves))
        except NewickError as exc:
            raise NewickError(f"line {lineno}: {exc}") from exc
    return trees


# --------------------------------------------------------------------------
# min-weight vertex cover via max-flow


def _max_flow_min_cut(cap, s, t):
    """Edmonds-Karp on a dense capacity matrix; returns (flow, source side)."""
    m = len(cap)
    res = [row[:] for row in cap]
    nbrs = [[j for j in range(m) if cap[i][j] > 0 or cap[j][i] > 0] for i in range(m)]
    flow = 0.0
    while True:
        parent = [-1] * m
        parent[s] = s
        q = deque([s])
        while q and parent[t] < 0:
            u = q.popleft()
            for v in nbrs[u]:
                if parent[v] < 0 and res[u][v] > _FLOW_EPS:
                    parent[v] = u
                    q.append(v)
        if parent[t] < 0:
            break
        bottleneck = math.inf
        v = t
        while v != s:
            u = parent[v]
            bottleneck = min(bottleneck, res[u][v])
            v = u
        v = t
        while v != s:
            u = parent[v]
            res[u][v] -= bottleneck
            res[v][u] += bottleneck
            v = u
        flow += bottleneck
    reach = [False] * m
    reach[s] = True
    q = deque([s])
    while q:
        u = q.popleft()
        for v in nbrs[u]:
            if not reach[v] and res[u][v] > _FLOW_EPS:
                reach[v] = True
                q.append(v)
    return flow, reach


def min_weight_vertex_cover(a_weights: Sequence[float], b_weights: Sequence[float], edges):
    """Minimum-weight vertex cover of a bipartite graph.

    Parameters
    ----------
    a_weights, b_weights : sequences of nonnegative floats, each summing to 1
    edges : iterable of ``(i, j)`` pairs joining ``a[i]`` to ``b[j]``

    Returns
    -------
    (cover_weight, c_a, c_b) with ``c_a``/``c_b`` sorted index lists.
    """
    a_weights = [float(w) for w in a_weights]
    b_weights = [float(w) for w in b_weights]
    na, nb = len(a_weights), len(b_weights)
    if any(w < 0 for w in a_weights + b_weights):
        raise ValueError("vertex weights must be nonnegative")
    for side, ws in (("a", a_weights), ("b", b_weights)):
        if ws and abs(sum(ws) - 1.0) > 1e-9:
            raise ValueError(f"{side}-side weights must sum to 1")
    edges = list(edges)
    for i, j in edges:
        if not (0 <= i < na and 0 <= j < nb):
            raise ValueError(f"edge ({i}, {j}) has an invalid endpoint")
    if not edges:
        return 0.0, [], []
    s, t = 0, na + nb + 1
    big = sum(a_weights) + sum(b_weights) + 1.0
    cap = [[0.0] * (t + 1) for _ in range(t + 1)]
    for i, w in enumerate(a_weights):
        cap[s][1 + i] = w
    for j, w in enumerate(b_weights):
        cap[1 + na + j][t] = w
    for i, j in edges:
        cap[1 + i][1 + na + j] = big
    _, reach = _max_flow_min_cut(cap, s, t)
    c_a = [i for i in range(na) if not reach[1 + i]]
    c_b = [j for j in range(nb) if reach[1 + na + j]]
    weight = sum(a_weights[i] for i in c_a) + sum(b_weights[j] for j in c_b)
    return weight, c_a, c_b


# --------------------------------------------------------------------------
# geodesics


@dataclass(frozen=True)
class SupportPair:
    a_side: frozenset
    b_side: frozenset
    a_norm: float
    b_norm: float

    @property
    def ratio(self) -> float:
        return self.a_norm / self.b_norm if self.b_norm > 0 else math.inf


@dataclass(frozen=True)
class GeodesicResult:
    distance: float
    common_contribution: float
    support: tuple


@dataclass(frozen=True)
class Decomposition:
    """Common clades and independent subproblems of a tree pair.

    ``shared`` holds clades present in both trees.  ``free`` holds clades
    of one tree compatible with every clade of the other; they behave as
    common clades of weight zero in the other tree.  Every remaining clade
    belongs to exactly one subproblem.
    """

    shared: frozenset
    free_a: frozenset
    free_b: frozenset
    subproblems: tuple


def _check_pair(t1, t2):
    if t1.n_leaves != t2.n_leaves:
        raise ValueError(f"leaf-count mismatch: {t1.n_leaves} vs {t2.n_leaves}")


def common_split_decomposition(t1: PhyloTree, t2: PhyloTree) -> Decomposition:
    _check_pair(t1, t2)
    shared = frozenset(t1.clades.keys() & t2.clades.keys())
    a_rest = [c for c in t1.clades if c not in shared]
    b_rest = [c for c in t2.clades if c not in shared]
    free_a = frozenset(a for a in a_rest if all(compatible(a, b) for b in b_rest))
    free_b = frozenset(b for b in b_rest if all(compatible(a, b) for a in a_rest))
    full = (1 << t1.n_leaves) - 1
    by_size = sorted(shared, key=lambda m: m.bit_count())

    def region(c):
        # smallest shared clade strictly above c; the root otherwise
        for s in by_size:
            if s & c == c and s != c:
                return s
        return full

    groups: dict[int, tuple[list, list]] = {}
    for a in a_rest:
        if a not in free_a:
            groups.setdefault(region(a), ([], []))[0].append(a)
    for b in b_rest:
        if b not in free_b:
            groups.setdefault(region(b), ([], []))[1].append(b)
    subs = tuple(
        (tuple(sorted(ga)), tuple(sorted(gb))) for _, (ga, gb) in sorted(groups.items())
    )
    return Decomposition(shared, free_a, free_b, subs)


def _norm(ws, items):
    return math.sqrt(sum(ws[c] ** 2 for c in items))


def _refine(wa, wb, a_items, b_items):
    """Split the cone-path support of one subproblem until no pair splits."""
    pairs = [(tuple(a_items), tuple(b_items))]
    i = 0
    while i < len(pairs):
        A, B = pairs[i]
        na2 = sum(wa[a] ** 2 for a in A)
        nb2 = sum(wb[b] ** 2 for b in B)
        edges = [
            (x, y)
            for x, a in enumerate(A)
            for y, b in enumerate(B)
            if not compatible(a, b)
        ]
        weight, c_a, c_b = min_weight_vertex_cover(
            [wa[a] ** 2 / na2 for a in A], [wb[b] ** 2 / nb2 for b in B], edges
        )
        if weight < 1 - SPLIT_TOL:
            ca = set(c_a)
            cb = set(c_b)
            first = (tuple(a for x, a in enumerate(A) if x in ca),
                     tuple(b for y, b in enumerate(B) if y not in cb))
            second = (tuple(a for x, a in enumerate(A) if x not in ca),
                      tuple(b for y, b in enumerate(B) if y in cb))
            if not all(first) or not all(second):
                raise RuntimeError("support refinement produced an empty side")
            pairs[i:i + 1] = [first, second]
        else:
            i += 1
    return [
        SupportPair(frozenset(A), frozenset(B), _norm(wa, A), _norm(wb, B)) for A, B in pairs
    ]


def gtp_geodesic(t1: PhyloTree, t2: PhyloTree) -> GeodesicResult:
    """Exact BHV geodesic between two rooted trees, with its support."""
    dec = common_split_decomposition(t1, t2)
    wa, wb = t1.clades, t2.clades
    common = sum((wa[c] - wb[c]) ** 2 for c in dec.shared)
    common += sum(wa[c] ** 2 for c in dec.free_a)
    common += sum(wb[c] ** 2 for c in dec.free_b)
    support = []
    for a_items, b_items in dec.subproblems:
        support.extend(_refine(wa, wb, a_items, b_items))
    # pairs from different subproblems never conflict, so order them by ratio
    support.sort(key=lambda p: p.ratio)
    total = common + sum((p.a_norm + p.b_norm) ** 2 for p in support)
    return GeodesicResult(math.sqrt(total), common, tuple(support))


def bhv_distance(t1: PhyloTree, t2: PhyloTree) -> float:
    return gtp_geodesic(t1, t2).distance
