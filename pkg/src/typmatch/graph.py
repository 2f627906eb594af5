"""Attributed graphs, labelings and community structure.

Vertices are 0-based.  A labeling ``sigma`` is an integer array with
``sigma[v]`` the label of vertex ``v``.  Upper-triangle positions are
ordered row-major over label pairs ``(i, j)``, ``i < j`` (the order of
``numpy.triu_indices(n, 1)``); every matcher relies on both graphs using
this same order.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


def check_permutation(perm, n: int | None = None) -> np.ndarray:
    """Return ``perm`` as an int array, raising ValueError unless it is a bijection on [n]."""
    arr = np.asarray(perm, dtype=np.int64)
    if arr.ndim != 1:
        raise ValueError("permutation must be one-dimensional")
    if n is not None and arr.size != n:
        raise ValueError(f"permutation has length {arr.size}, expected {n}")
    if arr.size and (arr.min() < 0 or arr.max() >= arr.size
                     or np.bincount(arr, minlength=arr.size).max() != 1):
        raise ValueError("not a bijection on [n]")
    return arr


def inverse(perm) -> np.ndarray:
    perm = np.asarray(perm, dtype=np.int64)
    inv = np.empty_like(perm)
    inv[perm] = np.arange(perm.size)
    return inv


def ut_size(n: int) -> int:
    return n * (n - 1) // 2


def ut_index(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Row-major (i, j), i < j, position order of an n-vertex upper triangle."""
    return np.triu_indices(n, 1)


@dataclass(frozen=True)
class AttributedGraph:
    """Undirected graph where every unordered vertex pair carries one attribute in [0, l-1]."""

    attr: np.ndarray
    l: int = 2

    def __post_init__(self):
        a = np.array(self.attr, dtype=np.int64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("attribute matrix must be square")
        if self.l < 2:
            raise ValueError("attribute alphabet needs at least 2 symbols")
        if not np.array_equal(a, a.T):
            raise ValueError("attribute matrix must be symmetric (directed graphs are not supported)")
        if np.any(np.diag(a) != 0):
            raise ValueError("self-loops are not allowed")
        if a.size and (a.min() < 0 or a.max() >= self.l):
            raise ValueError(f"attributes must lie in [0, {self.l - 1}]")
        a.setflags(write=False)
        object.__setattr__(self, "attr", a)

    @property
    def n(self) -> int:
        return self.attr.shape[0]

    @classmethod
    def from_upper_triangle(cls, n: int, seq, l: int = 2) -> "AttributedGraph":
        """Build the graph whose vertex-indexed upper triangle is ``seq``."""
        seq = np.asarray(seq, dtype=np.int64)
        if seq.size != ut_size(n):
            raise ValueError("upper triangle has the wrong length")
        a = np.zeros((n, n), dtype=np.int64)
        i, j = ut_index(n)
        a[i, j] = seq
        a[j, i] = seq
        return cls(a, l)

    def to_json(self) -> dict:
        i, j = ut_index(self.n)
        vals = self.attr[i, j]
        keep = vals != 0
        edges = [[int(u), int(v), int(x)] for u, v, x in zip(i[keep], j[keep], vals[keep])]
        return {"n": self.n, "l": self.l, "edges": edges}

    @classmethod
    def from_json(cls, obj: dict) -> "AttributedGraph":
        n, l = int(obj["n"]), int(obj["l"])
        a = np.zeros((n, n), dtype=np.int64)
        for u, v, x in obj.get("edges", []):
            if not 0 <= u < v < n:
                raise ValueError(f"edge ({u}, {v}) must satisfy 0 <= u < v < n")
            a[u, v] = a[v, u] = x
        return cls(a, l)


@dataclass(frozen=True)
class CommunityStructure:
    """Community membership shared by both graphs of a pair."""

    membership: np.ndarray
    c: int = field(default=0)

    def __post_init__(self):
        m = np.array(self.membership, dtype=np.int64)
        c = self.c or (int(m.max()) + 1 if m.size else 0)
        if m.size and (m.min() < 0 or m.max() >= c):
            raise ValueError("membership values must lie in [0, c-1]")
        if np.any(np.bincount(m, minlength=c) == 0):
            raise ValueError("every community must be nonempty")
        m.setflags(write=False)
        object.__setattr__(self, "membership", m)
        object.__setattr__(self, "c", c)

    @property
    def n(self) -> int:
        return self.membership.size

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.membership, minlength=self.c)

    @classmethod
    def from_sizes(cls, sizes) -> "CommunityStructure":
        sizes = [int(s) for s in sizes]
        return cls(np.repeat(np.arange(len(sizes)), sizes), len(sizes))

    def members(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.membership == i)


def upper_triangle(g: AttributedGraph, sigma) -> np.ndarray:
    """Attribute sequence over label pairs (i, j), i < j, under labeling ``sigma``.

    Position (i, j) holds the attribute between the vertices labeled i and j.
    """
    sigma = check_permutation(sigma, g.n)
    inv = inverse(sigma)
    i, j = ut_index(g.n)
    return g.attr[inv[i], inv[j]]


def block_views(g: AttributedGraph, sigma, comm: CommunityStructure) -> dict[tuple[int, int], np.ndarray]:
    """Per community-pair attribute sequences.

    For i < j the full cross block (length n_i * n_j); for i == j the
    within-block upper triangle (length n_i (n_i - 1) / 2).  Vertices of a
    block are taken in increasing label order, so both graphs of a pair
    line up when their labelings agree.
    """
    if comm.n != g.n:
        raise ValueError("community structure does not match the graph size")
    sigma = check_permutation(sigma, g.n)
    out = {}
    blocks = []
    for i in range(comm.c):
        verts = comm.members(i)
        blocks.append(verts[np.argsort(sigma[verts])])
    for i in range(comm.c):
        vi = blocks[i]
        a, b = np.triu_indices(vi.size, 1)
        out[(i, i)] = g.attr[vi[a], vi[b]]
        for j in range(i + 1, comm.c):
            vj = blocks[j]
            out[(i, j)] = g.attr[np.ix_(vi, vj)].ravel()
    return out


def accuracy(truth, estimate) -> float:
    """Fraction of vertices whose estimated label equals the true label."""
    truth = np.asarray(truth)
    estimate = np.asarray(estimate)
    if truth.shape != estimate.shape:
        raise ValueError("labelings have different sizes")
    if truth.size == 0:
        return 1.0
    return float(np.mean(truth == estimate))


def load_graph(path) -> AttributedGraph:
    return AttributedGraph.from_json(json.loads(Path(path).read_text()))


def save_graph(g: AttributedGraph, path) -> None:
    Path(path).write_text(json.dumps(g.to_json()))


def load_labeling(path) -> np.ndarray:
    return check_permutation(json.loads(Path(path).read_text()))
