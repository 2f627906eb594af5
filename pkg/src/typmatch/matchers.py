"""Typicality matching: exhaustive TM (pairs, communities, collections) and seeded STM.

Candidates are enumerated as tau = inverse of the candidate labeling
(label -> vertex), in chunks, and each chunk is type-checked with numpy.
"""
from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field, fields

import numpy as np

from .generators import (CorrelatedPair, GraphCollection, SeededPair, block_of_positions,
                         normalize_joints)
from .graph import accuracy, inverse, upper_triangle, ut_index
from .rng import stream
from .typicality import JointDistribution, typical_mask

DEFAULT_LIMIT = math.factorial(9)
CHUNK = 20000


class GuardError(ValueError):
    """The requested enumeration exceeds its size guard."""


@dataclass
class MatchReport:
    labeling: np.ndarray | list | None
    status: str                         # "ok" | "empty" | "partial"
    ambiguity_size: int | None = None
    accuracy: float | None = None
    truth_in_set: bool | None = None
    mean_set_accuracy: float | None = None
    eps: float | None = None
    trace: list = field(default_factory=list)
    wall_time: float = 0.0
    seed: int = 0
    unresolved: list = field(default_factory=list)
    # the full ambiguity set; kept out of the JSON form
    candidates: list | None = field(default=None, repr=False)

    @property
    def failed(self) -> bool:
        return self.status == "empty"

    def to_json(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self) if f.name != "candidates"}
        lab = self.labeling
        if isinstance(lab, np.ndarray):
            d["labeling"] = lab.tolist()
        elif isinstance(lab, list):
            d["labeling"] = [np.asarray(x).tolist() for x in lab]
        return d


def tm_default_eps(n: int) -> float:
    """N^-0.9 for the UT length N = n(n-1)/2, i.e. omega(1/N)."""
    return max(n * (n - 1) // 2, 1) ** -0.9


def stm_default_eps(n_seeds: int) -> float:
    """Lambda^-0.4, i.e. omega(1/sqrt(Lambda))."""
    return n_seeds ** -0.4


def _perm_chunks(n: int, chunk: int = CHUNK):
    it = itertools.permutations(range(n))
    while True:
        block = list(itertools.islice(it, chunk))
        if not block:
            return
        yield np.array(block, dtype=np.int64).reshape(len(block), n)


def _type_counts(codes: np.ndarray, cells: int) -> np.ndarray:
    """Row-wise histograms of integer codes in [0, cells)."""
    rows = codes.shape[0]
    flat = codes + cells * np.arange(rows)[:, None]
    return np.bincount(flat.ravel(), minlength=rows * cells).reshape(rows, cells)


def typical_rows(codes: np.ndarray, pmf_flat: np.ndarray, eps: float) -> np.ndarray:
    """Strong typicality of each row of cell codes, touching only the cells that occur.

    Equivalent to :func:`typical_mask` on the row histograms, but memory
    scales with the sequence length instead of the alphabet product.
    """
    rows, length = codes.shape
    cells = pmf_flat.size
    if rows * cells <= 1 << 22:
        return typical_mask(_type_counts(codes, cells) / length, pmf_flat, eps)
    flat = (codes + cells * np.arange(rows, dtype=np.int64)[:, None]).ravel()
    keys, counts = np.unique(flat, return_counts=True)
    row, cell = np.divmod(keys, cells)
    p = pmf_flat[cell]
    bad = (p == 0) | (np.abs(counts / length - p) > eps + 1e-12)
    ok = np.ones(rows, dtype=bool)
    ok[row[bad]] = False
    # a cell that never occurs is typical only if its mass is within eps of 0
    big = pmf_flat > eps + 1e-12
    need = int(big.sum())
    if need:
        seen = np.bincount(row[big[cell]], minlength=rows)
        ok &= seen == need
    return ok


def _pick(rng, members):
    return members[int(rng.integers(len(members)))]


def _finish(report: MatchReport, members: list, truth, t0: float, rng) -> MatchReport:
    report.ambiguity_size = len(members)
    report.candidates = members
    if not members:
        report.status = "empty"
    else:
        report.labeling = _pick(rng, members)
        if truth is not None:
            accs = [_acc(truth, m) for m in members]
            report.accuracy = _acc(truth, report.labeling)
            report.mean_set_accuracy = float(np.mean(accs))
            report.truth_in_set = any(a == 1.0 for a in accs)
    if truth is not None and report.accuracy is None:
        report.accuracy = 0.0
    report.wall_time = time.perf_counter() - t0
    return report


def _acc(truth, est):
    if isinstance(truth, list):
        return float(np.mean([accuracy(t, e) for t, e in zip(truth, est)]))
    return accuracy(truth, est)


def tm_candidates(u1: np.ndarray, attr2: np.ndarray, P: JointDistribution, eps: float,
                  limit: int = DEFAULT_LIMIT) -> list[np.ndarray]:
    """Every labeling sigma (vertex -> label) of g2 whose UT is eps-typical with u1."""
    n = attr2.shape[0]
    if math.factorial(n) > limit:
        raise GuardError(f"{n}! candidate labelings exceed the limit {limit}")
    ny = P.alphabets[1]
    i, j = ut_index(n)
    base = u1 * ny
    members = []
    for taus in _perm_chunks(n):
        u2 = attr2[taus[:, i], taus[:, j]]
        ok = typical_rows(base[None, :] + u2, P.pmf.ravel(), eps)
        members.extend(inverse(t) for t in taus[ok])
    return members


def tm_match_exhaustive(pair: CorrelatedPair, eps: float | None = None, limit: int = DEFAULT_LIMIT,
                        seed: int = 0, P: JointDistribution | None = None) -> MatchReport:
    """Uniform draw from all labelings making the two upper triangles jointly typical."""
    t0 = time.perf_counter()
    P = P or pair.joint
    eps = tm_default_eps(pair.n) if eps is None else eps
    u1 = upper_triangle(pair.g1, pair.sigma1)
    members = tm_candidates(u1, pair.g2.attr, P, eps, limit)
    return _finish(MatchReport(None, "ok", eps=eps, seed=seed), members, pair.sigma2, t0,
                   stream(seed, "tm-pick"))


def _block_typical(codes, ids, keys, pmfs, eps):
    """Row mask: every block's type typical w.r.t. its (padded, flattened) joint."""
    ok = np.ones(codes.shape[0], dtype=bool)
    for t, key in enumerate(keys):
        where = ids == t
        if not where.any():
            continue
        ok &= typical_rows(codes[:, where], pmfs[key], eps)
        if not ok.any():
            break
    return ok


def _padded(joints, l):
    out = {}
    for key, P in joints.items():
        pad = np.zeros((l, l))
        pad[:P.alphabets[0], :P.alphabets[1]] = P.pmf
        out[key] = pad.ravel()
    return out


def _sbm_alphabet(joints) -> int:
    return max(max(P.alphabets) for P in joints.values())


def tm_match_sbm(pair: CorrelatedPair, eps: float | None = None, limit: int = DEFAULT_LIMIT,
                 seed: int = 0, comm2=None) -> MatchReport:
    """TM restricted to community-preserving labelings, each block typical w.r.t. its joint.

    ``comm2`` gives g2's vertex memberships; by default they are read off
    the pair (labels carry their community).
    """
    t0 = time.perf_counter()
    n = pair.n
    eps = tm_default_eps(n) if eps is None else eps
    labcomm = pair.comm.membership
    comm2 = pair.comm_of_g2().membership if comm2 is None else np.asarray(comm2)
    joints = normalize_joints(pair.joints, pair.comm.c)
    groups = [(np.flatnonzero(labcomm == c), np.flatnonzero(comm2 == c)) for c in range(pair.comm.c)]
    total = math.prod(math.factorial(len(v)) for _, v in groups)
    if total > limit:
        raise GuardError(f"{total} community-preserving labelings exceed the limit {limit}")
    l = _sbm_alphabet(joints)
    pmfs = _padded(joints, l)
    u1 = upper_triangle(pair.g1, pair.sigma1)
    ids, keys = block_of_positions(labcomm)
    i, j = ut_index(n)
    members = []
    per_group = [list(itertools.permutations(v)) for _, v in groups]
    combos = itertools.product(*per_group)
    while True:
        block = list(itertools.islice(combos, CHUNK))
        if not block:
            break
        taus = np.empty((len(block), n), dtype=np.int64)
        for g, (labels, _) in enumerate(groups):
            taus[:, labels] = np.array([b[g] for b in block], dtype=np.int64).reshape(len(block), -1)
        codes = u1[None, :] * l + pair.g2.attr[taus[:, i], taus[:, j]]
        ok = _block_typical(codes, ids, keys, pmfs, eps)
        members.extend(inverse(t) for t in taus[ok])
    return _finish(MatchReport(None, "ok", eps=eps, seed=seed), members, pair.sigma2, t0,
                   stream(seed, "tm-pick"))


def _multiset_perms(sizes):
    """Distinct arrangements of a multiset without enumerating all n! orders."""
    def rec(remaining, prefix):
        if sum(remaining) == 0:
            yield np.array(prefix)
            return
        for c, r in enumerate(remaining):
            if r:
                remaining[c] -= 1
                yield from rec(remaining, prefix + [c])
                remaining[c] += 1
    yield from rec(list(sizes), [])


def tm_match_sbm_blind(pair: CorrelatedPair, sizes=None, eps: float | None = None,
                       limit: int = 10 ** 8, seed: int = 0) -> MatchReport:
    """TM without side information: union over all label-community assignments of the given sizes.

    The candidate labeling must carry g2's assignment onto g1's, so one
    assignment on labels fixes both graphs' memberships.
    """
    t0 = time.perf_counter()
    n = pair.n
    eps = tm_default_eps(n) if eps is None else eps
    joints = normalize_joints(pair.joints, pair.comm.c)
    sizes = list(pair.comm.sizes if sizes is None else sizes)
    if sum(sizes) != n:
        raise ValueError("community sizes must sum to n")
    assigns = list(_multiset_perms(sizes))
    if len(assigns) * math.factorial(n) > limit:
        raise GuardError("assignment sweep exceeds the limit")
    l = _sbm_alphabet(joints)
    pmfs = _padded(joints, l)
    u1 = upper_triangle(pair.g1, pair.sigma1)
    i, j = ut_index(n)
    blocks = [block_of_positions(a) for a in assigns]
    members = []
    for taus in _perm_chunks(n):
        codes = u1[None, :] * l + pair.g2.attr[taus[:, i], taus[:, j]]
        ok = np.zeros(len(taus), dtype=bool)
        for ids, keys in blocks:
            rest = ~ok
            if not rest.any():
                break
            ok[rest] |= _block_typical(codes[rest], ids, keys, pmfs, eps)
        members.extend(inverse(t) for t in taus[ok])
    report = MatchReport(None, "ok", eps=eps, seed=seed, trace=[{"assignments": len(assigns)}])
    return _finish(report, members, pair.sigma2, t0, stream(seed, "tm-pick"))


def tm_match_collection(coll: GraphCollection, eps: float | None = None, limit: int = 10 ** 6,
                        seed: int = 0) -> MatchReport:
    """Every (m-1)-tuple of labelings whose m upper triangles are jointly typical; uniform pick."""
    t0 = time.perf_counter()
    n, m = coll.n, coll.m
    eps = tm_default_eps(n) if eps is None else eps
    total = math.factorial(n) ** (m - 1)
    if total > limit:
        raise GuardError(f"{total} labeling tuples exceed the limit {limit}")
    P = coll.joint
    shape = P.alphabets
    u1 = upper_triangle(coll.graphs[0], coll.sigmas[0])
    i, j = ut_index(n)
    taus = np.array(list(itertools.permutations(range(n))), dtype=np.int64).reshape(-1, n)
    uts = [g.attr[taus[:, i], taus[:, j]] for g in coll.graphs[1:]]
    radix = [int(np.prod(shape[r + 1:])) for r in range(m)]
    base = u1 * radix[0]
    members = []
    idx_iter = itertools.product(range(len(taus)), repeat=m - 1)
    while True:
        block = np.array(list(itertools.islice(idx_iter, CHUNK)), dtype=np.int64)
        if not block.size:
            break
        codes = np.broadcast_to(base, (len(block), i.size)).copy()
        for r in range(m - 1):
            codes += uts[r][block[:, r]] * radix[r + 1]
        ok = typical_rows(codes, P.pmf.ravel(), eps)
        members.extend([inverse(taus[k]) for k in row] for row in block[ok])
    truth = [np.asarray(s) for s in coll.sigmas[1:]]
    return _finish(MatchReport(None, "ok", eps=eps, seed=seed), members, truth, t0,
                   stream(seed, "tm-pick"))


# -- seeded matching -------------------------------------------------------------

def fingerprint(vertex: int, anchors, attr: np.ndarray) -> np.ndarray:
    """Attributes from ``vertex`` to each anchor vertex, in anchor order."""
    anchors = np.asarray(anchors, dtype=np.int64)
    if vertex in set(anchors.tolist()):
        raise ValueError("vertex belongs to the seed set")
    return attr[vertex, anchors]


def _typical_pairs(f1: np.ndarray, f2: np.ndarray, P: JointDistribution, eps: float) -> np.ndarray:
    """Boolean matrix: fingerprint row a of f1 jointly typical with row b of f2."""
    lam = f1.shape[1]
    nx, ny = P.alphabets
    ok = np.ones((f1.shape[0], f2.shape[0]), dtype=bool)
    for x in range(nx):
        a = (f1 == x).astype(np.float64)
        for y in range(ny):
            b = (f2 == y).astype(np.float64)
            freq = (a @ b.T) / lam
            p = P.pmf[x, y]
            ok &= (freq == 0) if p == 0 else (np.abs(freq - p) <= eps + 1e-12)
    return ok


def stm_match(sp: SeededPair, eps: float | None = None, passes: int = 2, seed: int = 0,
              P: JointDistribution | None = None) -> MatchReport:
    """Seeded typicality matching by fingerprints toward the (reverse) seed set.

    Pass 1 matches each unseeded g2 vertex with the unique g1 vertex whose
    fingerprint is jointly typical with its own; several g2 vertices
    claiming one g1 vertex all go to the ambiguity set.  Later passes add
    the matches to the seed set, recompute eps (unless fixed) and retry the
    ambiguity set.  Leftovers receive the remaining labels at random so the
    output stays a bijection; ``status`` is "ok" only if nothing was left.
    """
    t0 = time.perf_counter()
    pair = sp.pair
    P = P or pair.joint
    n = pair.n
    if len(sp.seeds) < 1:
        raise ValueError("seeded matching needs at least one seed")
    sigma1 = pair.sigma1
    a1, a2 = pair.g1.attr, pair.g2.attr
    anchor2 = list(sp.seeds)
    anchor1 = list(sp.reverse_seeds)
    est = np.full(n, -1, dtype=np.int64)
    est[sp.seeds] = sp.seed_labels
    used1 = np.zeros(n, dtype=bool)
    used1[anchor1] = True
    pending = np.flatnonzero(est < 0)
    trace = []
    fixed_eps = eps
    for p in range(passes):
        if not pending.size:
            break
        lam = len(anchor2)
        e = stm_default_eps(lam) if fixed_eps is None else fixed_eps
        cand1 = np.flatnonzero(~used1)
        typ = _typical_pairs(a1[np.ix_(cand1, anchor1)], a2[np.ix_(pending, anchor2)], P, e)
        unique = typ.sum(axis=0) == 1
        choice = np.where(unique, typ.argmax(axis=0), -1)
        claimed = np.bincount(choice[unique], minlength=cand1.size)
        good = unique & (claimed[np.maximum(choice, 0)] == 1)
        v2 = pending[good]
        v1 = cand1[choice[good]]
        est[v2] = sigma1[v1]
        used1[v1] = True
        anchor2.extend(v2.tolist())
        anchor1.extend(v1.tolist())
        pending = pending[~good]
        trace.append({"pass": p + 1, "eps": e, "seeds": lam, "matched": int(good.sum()),
                      "ambiguous": int(pending.size)})
    status = "ok" if not pending.size else "partial"
    if pending.size:
        free = np.setdiff1d(np.arange(n), est[est >= 0])
        est[pending] = stream(seed, "stm-fill").permutation(free)
    report = MatchReport(est, status, eps=fixed_eps, trace=trace, seed=seed,
                         accuracy=accuracy(pair.sigma2, est), unresolved=pending.tolist())
    report.wall_time = time.perf_counter() - t0
    return report
