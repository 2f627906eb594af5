"""Permutation cycle structure, set partitions and the counting formulas.

A permutation is an int array ``perm`` with ``perm[a]`` the image of ``a``
(0-based).  Cycle notation ``(a b c)`` means a -> b -> c -> a.  Acting on a
sequence, the element at position ``a`` moves to position ``perm[a]``
(see :func:`apply_permutation`); with this convention ``(1 2 3)(4 5)``
sends ``(x1, ..., x7)`` to ``(x3, x1, x2, x5, x4, x6, x7)``.

Counts are exact Python integers; bounds that are not integral are
returned as :class:`fractions.Fraction`.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .graph import check_permutation, inverse, ut_index, ut_size


@dataclass(frozen=True)
class CycleSignature:
    """(m, c, i_1..i_c): m fixed points and c non-trivial cycles with sorted lengths."""

    n: int
    m: int
    lengths: tuple[int, ...]

    def __post_init__(self):
        lengths = tuple(sorted(int(x) for x in self.lengths))
        if any(x < 2 for x in lengths):
            raise ValueError("non-trivial cycles have length >= 2")
        if self.m < 0 or sum(lengths) + self.m != self.n:
            raise ValueError("cycle lengths plus fixed points must sum to n")
        object.__setattr__(self, "lengths", lengths)

    @property
    def c(self) -> int:
        return len(self.lengths)


def apply_permutation(perm, seq) -> np.ndarray:
    """Move the element at position a to position perm[a]."""
    perm = np.asarray(perm)
    seq = np.asarray(seq)
    out = np.empty_like(seq)
    out[..., perm] = seq
    return out


def from_image(image, one_based: bool = False) -> np.ndarray:
    """Permutation that sends the sequence (0, 1, ..., n-1) to ``image``."""
    image = np.asarray(image, dtype=np.int64) - (1 if one_based else 0)
    check_permutation(image)
    # apply(perm, id) == image  <=>  perm[image[j]] == j
    return inverse(image)


def compose(p, q) -> np.ndarray:
    """The map a -> p[q[a]]."""
    return np.asarray(p)[np.asarray(q)]


def cycle_decompose(perm) -> tuple[CycleSignature, list[tuple[int, ...]]]:
    """Disjoint non-trivial cycles (each starting at its smallest element) and the signature."""
    perm = check_permutation(perm)
    n = perm.size
    seen = np.zeros(n, dtype=bool)
    cycles = []
    for start in range(n):
        if seen[start]:
            continue
        cyc = [start]
        seen[start] = True
        a = int(perm[start])
        while a != start:
            cyc.append(a)
            seen[a] = True
            a = int(perm[a])
        if len(cyc) > 1:
            cycles.append(tuple(cyc))
    m = n - sum(len(c) for c in cycles)
    return CycleSignature(n, m, tuple(len(c) for c in cycles)), cycles


def from_cycles(n: int, cycles) -> np.ndarray:
    perm = np.arange(n)
    for cyc in cycles:
        for a, b in zip(cyc, cyc[1:] + cyc[:1]):
            perm[a] = b
    return check_permutation(perm, n)


def standard_permutation(sig: CycleSignature | None = None, *, m: int | None = None,
                         lengths=None) -> np.ndarray:
    """Consecutive-block cycles of the given lengths followed by m fixed points.

    Pass either a CycleSignature (lengths in sorted order) or explicit ``m``
    and ``lengths`` to keep a specific cycle order.
    """
    if sig is not None:
        m, lengths = sig.m, sig.lengths
    if m is None or lengths is None:
        raise ValueError("need a signature or both m and lengths")
    lengths = [int(x) for x in lengths]
    if any(x < 2 for x in lengths) or m < 0:
        raise ValueError("invalid cycle signature")
    n = sum(lengths) + m
    cycles, start = [], 0
    for length in lengths:
        cycles.append(tuple(range(start, start + length)))
        start += length
    return from_cycles(n, cycles)


def all_signatures(n: int):
    """Every CycleSignature on [n]: partitions of n with parts >= 2 plus fixed points."""
    def parts(total, smallest):
        if total == 0:
            yield ()
            return
        for first in range(smallest, total + 1):
            for rest in parts(total - first, first):
                yield (first,) + rest

    for moved in range(n + 1):
        for p in parts(moved, 2):
            yield CycleSignature(n, n - moved, p)


# -- counting ---------------------------------------------------------------

@lru_cache(maxsize=None)
def derangement_count(n: int) -> int:
    """!n via !n = (n - 1)(!(n-1) + !(n-2))."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n == 0:
        return 1
    if n == 1:
        return 0
    return (n - 1) * (derangement_count(n - 1) + derangement_count(n - 2))


class CountWithBounds(NamedTuple):
    exact: int
    lower: Fraction
    upper: int

    @property
    def log2_lower(self) -> float:
        return math.log2(self.lower) if self.lower > 0 else -math.inf

    @property
    def log2_upper(self) -> float:
        return math.log2(self.upper) if self.upper > 0 else -math.inf


def count_fixed_point_perms(n: int, m: int) -> CountWithBounds:
    """Permutations of [n] with exactly m fixed points: C(n, m) * !(n - m).

    Bounds: n! / (m! (n - m)) <= N_m <= n^(n - m).  The lower bound rests on
    !x >= (x - 1)!, which fails at x = 1, so for m = n - 1 (where N_m = 0)
    and m = n (division by zero) the exact value is returned as the lower
    bound instead.
    """
    if not 0 <= m <= n:
        raise ValueError("need 0 <= m <= n")
    exact = math.comb(n, m) * derangement_count(n - m)
    if n - m >= 2:
        lower = Fraction(math.factorial(n), math.factorial(m) * (n - m))
    else:
        lower = Fraction(exact)
    return CountWithBounds(exact, lower, n ** (n - m))


def k_fold_derangement_bounds(n: int, k: int) -> tuple[int, int]:
    """((n-k+1)!)^(k-1) <= d_k(n) <= (!n)^(k-1), for 1 <= k <= n."""
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= n")
    return math.factorial(n - k + 1) ** (k - 1), derangement_count(n) ** (k - 1)


@lru_cache(maxsize=None)
def k_fold_derangement_count(n: int, k: int) -> int:
    """d_k(n): k-tuples (id, pi_2, ..., pi_k) with pi_l(i) pairwise distinct for every i.

    Exact count by backtracking over Latin-rectangle rows; meant for small n.
    """
    if k < 1 or n < 0:
        raise ValueError("need k >= 1 and n >= 0")
    if n == 0 or k == 1:
        return 1
    if k > n:
        return 0
    rows = [tuple(range(n))]

    def extend(depth):
        if depth == k:
            return 1
        total = 0
        for row in _rows_avoiding(n, rows):
            rows.append(row)
            total += extend(depth + 1)
            rows.pop()
        return total

    return extend(1)


def _rows_avoiding(n, rows):
    used = [set(r[i] for r in rows) for i in range(n)]
    row = [0] * n
    taken = [False] * n

    def rec(i):
        if i == n:
            yield tuple(row)
            return
        for v in range(n):
            if not taken[v] and v not in used[i]:
                taken[v] = True
                row[i] = v
                yield from rec(i + 1)
                taken[v] = False

    yield from rec(0)


# -- set partitions and Bell permutation vectors -----------------------------

@lru_cache(maxsize=None)
def set_partitions(k: int) -> tuple[tuple[tuple[int, ...], ...], ...]:
    """All partitions of {0..k-1}, ordered by block count (descending), then by
    restricted-growth string.  The finest partition comes first and the
    single-set partition last, e.g. for k = 3:
    {0}{1}{2}, {01}{2}, {02}{1}, {0}{12}, {012}.
    """
    if k < 1:
        raise ValueError("k must be positive")
    strings = []

    def rgs(prefix, top):
        if len(prefix) == k:
            strings.append(tuple(prefix))
            return
        for v in range(top + 2):
            rgs(prefix + [v], max(top, v))

    rgs([0], 0)
    strings.sort(key=lambda s: (-(max(s) + 1), s))
    return tuple(_blocks(s) for s in strings)


def _blocks(rgs_string) -> tuple[tuple[int, ...], ...]:
    nb = max(rgs_string) + 1
    return tuple(tuple(i for i, b in enumerate(rgs_string) if b == blk) for blk in range(nb))


def _canonical_rgs(values) -> tuple[int, ...]:
    seen = {}
    return tuple(seen.setdefault(v, len(seen)) for v in values)


def bell_number(k: int) -> int:
    return len(set_partitions(k))


def partition_index(k: int) -> dict[tuple[tuple[int, ...], ...], int]:
    return {p: j for j, p in enumerate(set_partitions(k))}


def partition_meet(p, q) -> tuple[tuple[int, ...], ...]:
    """Coarsest common refinement {A & B : A in p, B in q, A & B nonempty}."""
    k = sum(len(b) for b in p)
    label_p = {x: i for i, b in enumerate(p) for x in b}
    label_q = {x: i for i, b in enumerate(q) for x in b}
    return _blocks(_canonical_rgs([(label_p[x], label_q[x]) for x in range(k)]))


@dataclass(frozen=True)
class BellSignature:
    """Counts of indices per partition of [k], in :func:`set_partitions` order."""

    k: int
    counts: tuple[int, ...]

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        if len(counts) != bell_number(self.k) or min(counts) < 0:
            raise ValueError("need one nonnegative count per partition of [k]")
        object.__setattr__(self, "counts", counts)

    @property
    def n(self) -> int:
        return sum(self.counts)


def index_partitions(perms) -> np.ndarray:
    """Partition index of every position: l, l' share a block iff pi_l^-1(i) == pi_l'^-1(i)."""
    perms = [check_permutation(p) for p in perms]
    k = len(perms)
    n = perms[0].size
    if any(p.size != n for p in perms):
        raise ValueError("permutations must act on the same [n]")
    pre = np.stack([inverse(p) for p in perms])
    lookup = {_canonical_rgs(_blocks_to_rgs(p, k)): j
              for j, p in enumerate(set_partitions(k))}
    return np.array([lookup[_canonical_rgs(pre[:, i].tolist())] for i in range(n)], dtype=np.int64)


def _blocks_to_rgs(partition, k):
    out = [0] * k
    for b, block in enumerate(partition):
        for x in block:
            out[x] = b
    return out


def bell_signature(perms) -> BellSignature:
    k = len(perms)
    idx = index_partitions(perms)
    return BellSignature(k, tuple(np.bincount(idx, minlength=bell_number(k)).tolist()))


def bell_count_bounds(sig: BellSignature, exact_limit: int = 6) -> tuple[int, int]:
    """Bounds on the number of Bell permutation vectors (first permutation the identity).

    lower = multinomial * prod_j d_{|P_j|}(i_j), upper = multinomial * n^(sum |P_j| i_j - n).
    d is computed exactly when i_j <= exact_limit, otherwise replaced by its
    k-fold derangement lower bound (0 when |P_j| > i_j).
    """
    parts = set_partitions(sig.k)
    n = sig.n
    multinomial = math.factorial(n)
    for c in sig.counts:
        multinomial //= math.factorial(c)
    lower = multinomial
    for part, c in zip(parts, sig.counts):
        size = len(part)
        if c <= exact_limit:
            d = k_fold_derangement_count(c, size)
        elif size > c:
            d = 0
        else:
            d = k_fold_derangement_bounds(c, size)[0]
        lower *= d
    exponent = sum(len(p) * c for p, c in zip(parts, sig.counts)) - n
    return lower, multinomial * n ** exponent


def brute_force_bell_counts(n: int, k: int) -> dict[tuple[int, ...], int]:
    """Number of (id, pi_2, .., pi_k) per Bell signature, by exhaustive enumeration."""
    counts: dict[tuple[int, ...], int] = {}
    ident = np.arange(n)
    for rest in itertools.product(itertools.permutations(range(n)), repeat=k - 1):
        sig = bell_signature([ident, *[np.array(r) for r in rest]]).counts
        counts[sig] = counts.get(sig, 0) + 1
    return counts


# -- induced action on upper-triangle positions ------------------------------

def induced_edge_permutation(perm) -> np.ndarray:
    """Permutation of the n(n-1)/2 upper-triangle positions induced by a vertex permutation.

    Position of pair {a, b} maps to the position of {perm[a], perm[b]}.  The
    fixed positions are the pairs of fixed vertices plus one per 2-cycle.
    """
    perm = check_permutation(perm)
    n = perm.size
    i, j = ut_index(n)
    pos = np.full((n, n), -1, dtype=np.int64)
    pos[i, j] = np.arange(ut_size(n))
    a, b = perm[i], perm[j]
    return pos[np.minimum(a, b), np.maximum(a, b)]
