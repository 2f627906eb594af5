"""Samplers for correlated graph pairs, community-structured pairs, collections and seeded pairs.

Labels index the matched edge process: the attribute pair carried by label
pair (i, j) in the two graphs is one draw from the joint pmf.  The first
graph's labeling is revealed (the identity unless given), the others are
hidden and drawn uniformly.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .graph import AttributedGraph, CommunityStructure, check_permutation, inverse, ut_index
from .rng import stream
from .typicality import JointDistribution


@dataclass(frozen=True)
class CorrelatedPair:
    g1: AttributedGraph
    g2: AttributedGraph
    sigma1: np.ndarray
    sigma2: np.ndarray
    model: str
    joint: JointDistribution | None = None
    # community-structured pairs: label membership and per-block joints
    comm: CommunityStructure | None = None
    joints: dict | None = None

    @property
    def n(self) -> int:
        return self.g1.n

    def comm_of_g2(self) -> CommunityStructure:
        """Membership of g2's vertices (labels carry their community)."""
        return CommunityStructure(self.comm.membership[self.sigma2], self.comm.c)

    def comm_of_g1(self) -> CommunityStructure:
        return CommunityStructure(self.comm.membership[self.sigma1], self.comm.c)


@dataclass(frozen=True)
class SeededPair:
    pair: CorrelatedPair
    seeds: np.ndarray           # g2 vertices whose labels are revealed

    @property
    def seed_labels(self) -> np.ndarray:
        return self.pair.sigma2[self.seeds]

    @property
    def reverse_seeds(self) -> np.ndarray:
        """g1 vertices carrying the same labels as the seeds, in seed order."""
        return inverse(self.pair.sigma1)[self.seed_labels]


@dataclass(frozen=True)
class GraphCollection:
    graphs: tuple
    sigmas: tuple               # sigmas[0] revealed, the rest hidden
    joint: JointDistribution

    @property
    def m(self) -> int:
        return len(self.graphs)

    @property
    def n(self) -> int:
        return self.graphs[0].n


def _draw_cells(rng, pmf: np.ndarray, size: int) -> tuple[np.ndarray, ...]:
    cells = rng.choice(pmf.size, size=size, p=pmf.ravel())
    return np.unravel_index(cells, pmf.shape)


def _place(n: int, labels_seq, sigma, l: int) -> AttributedGraph:
    """Graph whose label-pair upper triangle (under sigma) is labels_seq."""
    inv = inverse(sigma)
    i, j = ut_index(n)
    a = np.zeros((n, n), dtype=np.int64)
    u, v = inv[i], inv[j]
    a[u, v] = labels_seq
    a[v, u] = labels_seq
    return AttributedGraph(a, l)


def _alphabet(P: JointDistribution) -> int:
    return max(2, max(P.alphabets))


def gen_cper(n: int, P: JointDistribution, seed: int, sigma1=None) -> CorrelatedPair:
    """Correlated Erdos-Renyi pair: matched edge pairs iid from P, hidden labeling uniform."""
    if n < 2:
        raise ValueError("n must be at least 2")
    if P.k != 2:
        raise ValueError("pairwise joint distribution required")
    sigma1 = np.arange(n) if sigma1 is None else check_permutation(sigma1, n)
    sigma2 = stream(seed, "hidden-labeling").permutation(n)
    x, y = _draw_cells(stream(seed, "edges"), P.pmf, n * (n - 1) // 2)
    l = _alphabet(P)
    return CorrelatedPair(_place(n, x, sigma1, l), _place(n, y, sigma2, l),
                          sigma1, sigma2, "cer", joint=P)


def erasure_joint(p: float, s: float) -> JointDistribution:
    """Edge kept in the second graph with probability s: (0,0):1-p, (1,0):p(1-s), (1,1):ps."""
    if not (0 <= p <= 1 and 0 <= s <= 1):
        raise ValueError("p and s must lie in [0, 1]")
    return JointDistribution(np.array([[1 - p, 0.0], [p * (1 - s), p * s]]))


def gen_erasure(n: int, p: float, s: float, seed: int) -> CorrelatedPair:
    pair = gen_cper(n, erasure_joint(p, s), seed)
    return CorrelatedPair(pair.g1, pair.g2, pair.sigma1, pair.sigma2, "erasure", joint=pair.joint)


def normalize_joints(joints: dict, c: int) -> dict:
    """Key every block by (i, j) with i <= j, checking symmetric entries agree."""
    out = {}
    for (i, j), P in joints.items():
        key = (min(i, j), max(i, j))
        if key in out and not np.allclose(out[key].pmf, P.pmf):
            raise ValueError(f"joints for blocks ({i},{j}) and ({j},{i}) differ")
        out[key] = P
    missing = [(i, j) for i in range(c) for j in range(i, c) if (i, j) not in out]
    if missing:
        raise ValueError(f"missing joints for blocks {missing}")
    return out


def block_of_positions(labcomm: np.ndarray) -> tuple[np.ndarray, list]:
    """Block id of every label-pair UT position, plus the (i, j) key of each id."""
    c = int(labcomm.max()) + 1
    i, j = ut_index(labcomm.size)
    a, b = labcomm[i], labcomm[j]
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    keys = [(p, q) for p in range(c) for q in range(p, c)]
    index = {k: t for t, k in enumerate(keys)}
    ids = np.array([index[(p, q)] for p, q in zip(lo, hi)], dtype=np.int64)
    return ids, keys


def gen_cpcs(n: int, comm: CommunityStructure, joints: dict, seed: int) -> CorrelatedPair:
    """Community-structured pair; ``comm`` assigns each label a community."""
    if comm.n != n:
        raise ValueError("community structure does not match n")
    joints = normalize_joints(joints, comm.c)
    ids, keys = block_of_positions(comm.membership)
    rng = stream(seed, "edges")
    x = np.zeros(ids.size, dtype=np.int64)
    y = np.zeros(ids.size, dtype=np.int64)
    for t, key in enumerate(keys):
        where = np.flatnonzero(ids == t)
        if where.size:
            x[where], y[where] = _draw_cells(rng, joints[key].pmf, where.size)
    sigma1 = np.arange(n)
    sigma2 = stream(seed, "hidden-labeling").permutation(n)
    l = max(_alphabet(P) for P in joints.values())
    return CorrelatedPair(_place(n, x, sigma1, l), _place(n, y, sigma2, l),
                          sigma1, sigma2, "sbm", comm=comm, joints=joints)


def gen_collection(n: int, m: int, P: JointDistribution, seed: int) -> GraphCollection:
    if P.k != m or m < 2:
        raise ValueError("joint distribution arity must equal m >= 2")
    seqs = _draw_cells(stream(seed, "edges"), P.pmf, n * (n - 1) // 2)
    sigmas = [np.arange(n)] + [stream(seed, "hidden-labeling", r).permutation(n) for r in range(1, m)]
    l = _alphabet(P)
    graphs = tuple(_place(n, s, sig, l) for s, sig in zip(seqs, sigmas))
    return GraphCollection(graphs, tuple(sigmas), P)


def gen_seeded(n: int, P: JointDistribution, n_seeds: int, seed: int) -> SeededPair:
    if not 0 <= n_seeds <= n:
        raise ValueError("seed count must lie in [0, n]")
    pair = gen_cper(n, P, seed)
    seeds = np.sort(stream(seed, "seed-set").choice(n, size=n_seeds, replace=False))
    return SeededPair(pair, seeds.astype(np.int64))


def truth_json(pair: CorrelatedPair, seeds=None) -> dict:
    out = {"sigma1": pair.sigma1.tolist(), "sigma2": pair.sigma2.tolist(),
           "seeds": [] if seeds is None else np.asarray(seeds).tolist()}
    if pair.comm is not None:
        out["communities"] = pair.comm.membership.tolist()
    return out


def save_truth(path, pair: CorrelatedPair, seeds=None) -> None:
    Path(path).write_text(json.dumps(truth_json(pair, seeds)))
