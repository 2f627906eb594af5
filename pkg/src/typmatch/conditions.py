"""Achievability and converse conditions as finite-n predicates with margins.

Every margin is RHS - LHS in bits, so ``satisfied`` is ``margin >= 0``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .perms import partition_meet, set_partitions
from .typicality import (JointDistribution, correction_terms, exponent_E_alpha,
                         exponent_Ehat, exponent_Eprime_alpha, kl_divergence, kl_rows,
                         max_log_ratio, mutual_information)


@dataclass
class ConditionReport:
    satisfied: bool
    margin: float
    argmin: object = None
    resolution: float = 0.0
    terms: dict = field(default_factory=dict)


def _alpha_grid(lo: float, hi: float, step: float) -> np.ndarray:
    k = int(math.floor((hi - lo) / step + 1e-9))
    return np.round(lo + step * np.arange(k + 1), 12)


def _report(margins, points, resolution, **terms) -> ConditionReport:
    margins = np.asarray(margins, dtype=float)
    i = int(np.argmin(margins))
    m = float(margins[i])
    return ConditionReport(m >= 0, m, points[i], resolution, terms)


def cer_margin(P: JointDistribution, n: int, alpha: float, eps: float = 0.0,
               tol: float = 1e-4, need_both: bool = False) -> dict:
    """Terms of the pairwise condition at one alpha.

    margin = max(E_{a^2}, E'_{a^2}) - zeta''_N - delta_eps - 2 (1 - a) log n / (n - 1),
    with N = n(n-1)/2 and zeta'' = max(zeta_N, zeta'_N).  E' is only
    computed when E alone leaves the margin negative (or ``need_both``).
    """
    N = n * (n - 1) // 2
    a2 = alpha * alpha
    corr = correction_terms(N, P, eps, a2)
    lhs = 2 * (1 - alpha) * math.log2(n) / (n - 1)
    penalty = max(corr.zeta, corr.zeta_prime) + corr.delta
    e = exponent_E_alpha(P, a2, tol).value
    ep = math.nan
    if need_both or e - penalty - lhs < 0:
        ep = exponent_Eprime_alpha(P, a2, tol).value
    best = e if math.isnan(ep) else max(e, ep)
    return {"alpha": alpha, "E_alpha": e, "Eprime_alpha": ep, "Ehat": exponent_Ehat(P, a2),
            "lhs": lhs, "penalty": penalty, "margin": best - penalty - lhs}


def cer_achievable(P: JointDistribution, n: int, alpha_max: float = 0.99, step: float = 0.01,
                   eps: float = 0.0, tol: float = 1e-4, lo: float = 0.0) -> ConditionReport:
    """Sufficient condition for matching a correlated Erdos-Renyi pair, on an alpha grid."""
    if not 0 < alpha_max < 1:
        raise ValueError("alpha_max must lie in (0, 1)")
    grid = _alpha_grid(lo, alpha_max, step)
    rows = [cer_margin(P, n, a, eps, tol) for a in grid]
    rep = _report([r["margin"] for r in rows], grid, step)
    # the o(log n) side condition is reported, never gated
    rep.terms["side_ratio"] = max_log_ratio(P) / math.log2(n)
    return rep


def partial_matching_achievable(P: JointDistribution, n: int, beta: float, step: float = 0.01,
                                eps: float = 0.0, tol: float = 1e-4) -> ConditionReport:
    """Same inequality with alpha restricted to [0, beta]; beta = 0 asks for nothing."""
    if not 0 <= beta < 1:
        raise ValueError("beta must lie in [0, 1)")
    if beta == 0:
        return ConditionReport(True, math.inf, None, step, {"vacuous": True})
    grid = _alpha_grid(0.0, beta, step)
    rows = [cer_margin(P, n, a, eps, tol) for a in grid]
    return _report([r["margin"] for r in rows], grid, step)


def bound_rows(P: JointDistribution, n: int, alpha_max: float = 0.99, step: float = 0.01,
               eps: float = 0.0, tol: float = 1e-4) -> list[dict]:
    """Per-alpha terms of the pairwise condition (for CSV output)."""
    return [cer_margin(P, n, a, eps, tol, need_both=True) for a in _alpha_grid(0, alpha_max, step)]


# -- community structure ---------------------------------------------------------

def _block_kl(P: JointDistribution, beta: np.ndarray) -> np.ndarray:
    """D(P || (1 - b) P_X P_Y + b P) for every b in beta."""
    p = P.pmf.ravel()
    q = P.product_of_marginals().ravel()
    mix = (1 - beta)[:, None] * q[None, :] + beta[:, None] * p[None, :]
    return kl_rows(np.broadcast_to(p, mix.shape), mix)


def _sbm_inner_points(alpha, fracs, step):
    """alpha_i on a step grid with alpha_i <= n_i / n and sum alpha_i = alpha."""
    c = len(fracs)
    axes = []
    for f in fracs[:-1]:
        ax = np.arange(0, f + 1e-12, step)
        axes.append(np.unique(np.append(ax, f)))
    if c == 1:
        pts = np.array([[alpha]])
    else:
        head = np.array(list(itertools.product(*axes))).reshape(-1, c - 1)
        last = alpha - head.sum(1, keepdims=True)
        pts = np.concatenate([head, last], 1)
    ok = np.all(pts >= -1e-12, 1) & np.all(pts <= np.asarray(fracs) + 1e-12, 1)
    return np.clip(pts[ok], 0, None)


def sbm_rhs(joints: dict, sizes, n: int, alpha_i: np.ndarray) -> np.ndarray:
    """Weighted block divergences for each row of alpha_i (fractions of n)."""
    sizes = np.asarray(sizes, dtype=float)
    c = sizes.size
    total = np.zeros(len(alpha_i))
    for i in range(c):
        for j in range(i, c):
            P = joints[(i, j)]
            if i < j:
                beta = n * n * alpha_i[:, i] * alpha_i[:, j] / (sizes[i] * sizes[j])
                w = sizes[i] * sizes[j] / n ** 2
            else:
                if sizes[i] < 2:
                    continue
                k = n * alpha_i[:, i]
                beta = k * (k - 1) / (sizes[i] * (sizes[i] - 1))
                w = sizes[i] * (sizes[i] - 1) / (2 * n ** 2)
            total = total + w * _block_kl(P, np.clip(beta, 0, 1))
    return total


def sbm_achievable(joints: dict, sizes, n: int, alpha_max: float = 0.99, step: float = 0.01,
                   inner_step: float = 0.02) -> ConditionReport:
    """3 (1 - alpha) log n / n <= min over admissible alpha_i of the weighted block divergences."""
    sizes = [int(s) for s in sizes]
    if sum(sizes) != n or min(sizes) < 1:
        raise ValueError("community sizes must be positive and sum to n")
    c = len(sizes)
    joints = {(min(i, j), max(i, j)): P for (i, j), P in joints.items()}
    fracs = [s / n for s in sizes]
    margins, points = [], []
    for a in _alpha_grid(0, alpha_max, step):
        pts = _sbm_inner_points(a, fracs, inner_step)
        if not len(pts):
            continue
        rhs = sbm_rhs(joints, sizes, n, pts)
        k = int(np.argmin(rhs))
        margins.append(rhs[k] - 3 * (1 - a) * math.log2(n) / n)
        points.append((float(a), pts[k].tolist()))
    return _report(margins, points, step, inner_step=inner_step, communities=c)


# -- collections -------------------------------------------------------------------

def meet_table(m: int) -> dict:
    """(k', k'') -> index of the common refinement of partitions k' and k''."""
    parts = set_partitions(m)
    index = {p: i for i, p in enumerate(parts)}
    return {(a, b): index[partition_meet(parts[a], parts[b])]
            for a in range(len(parts)) for b in range(len(parts))}


def mixed_weights(alpha: np.ndarray, table: dict) -> np.ndarray:
    """alpha'_k = sum over ordered pairs (k', k'') whose meet is k of alpha_k' alpha_k''."""
    out = np.zeros_like(alpha)
    for (a, b), k in table.items():
        out[..., k] += alpha[..., a] * alpha[..., b]
    return out


def _simplex_grid(dim: int, step: float) -> np.ndarray:
    units = int(round(1 / step))
    pts = [c for c in itertools.product(range(units + 1), repeat=dim - 1) if sum(c) <= units]
    head = np.array(pts, dtype=float).reshape(-1, dim - 1)
    return np.concatenate([head, units - head.sum(1, keepdims=True)], 1) / units


def collection_achievable(P: JointDistribution, n: int, step: float = 0.05,
                          alpha_max: float = 0.99) -> ConditionReport:
    """(sum_k |P_k| alpha_k - 1) log n / n <= D(P || sum alpha'_k P_{X_{P_k}}) / (2 (b_m - 1)(m(m-1)+1))."""
    m = P.k
    if m < 2:
        raise ValueError("need at least two graphs")
    parts = set_partitions(m)
    b = len(parts)
    table = meet_table(m)
    grid = _simplex_grid(b, step)
    grid = grid[grid[:, -1] <= alpha_max + 1e-12]
    sizes = np.array([len(p) for p in parts])
    lhs = (grid @ sizes - 1) * math.log2(n) / n
    mixw = mixed_weights(grid, table)
    prods = np.stack([P.block_product(p).ravel() for p in parts])
    mix = mixw @ prods
    pflat = P.pmf.ravel()
    rhs = kl_rows(np.broadcast_to(pflat, mix.shape), mix) / (2 * (b - 1) * (m * (m - 1) + 1))
    rep = _report(rhs - lhs, [tuple(g) for g in grid], step)
    rep.terms["meet_table"] = {f"{a},{c}": k for (a, c), k in table.items()}
    return rep


# -- converse and seeded region ----------------------------------------------------

def converse_necessary(joints: dict, sizes, n: int) -> ConditionReport:
    """log n / n <= sum_{i<j} n_i n_j / n^2 I_ij + sum_i n_i (n_i - 1) / (2 n^2) I_i."""
    sizes = [int(s) for s in sizes]
    if sum(sizes) != n:
        raise ValueError("community sizes must sum to n")
    joints = {(min(i, j), max(i, j)): P for (i, j), P in joints.items()}
    rhs = 0.0
    for i, j in itertools.combinations_with_replacement(range(len(sizes)), 2):
        w = sizes[i] * sizes[j] / n ** 2 if i < j else sizes[i] * (sizes[i] - 1) / (2 * n ** 2)
        rhs += w * mutual_information(joints[(i, j)])
    margin = rhs - math.log2(n) / n
    return ConditionReport(margin >= 0, margin, None, 0.0, {"weighted_information": rhs})


def converse_cer(P: JointDistribution, n: int) -> ConditionReport:
    """Single-community form: 2 log n / n <= I(X; X')."""
    info = mutual_information(P)
    margin = info - 2 * math.log2(n) / n
    return ConditionReport(margin >= 0, margin, None, 0.0, {"information": info})


@dataclass(frozen=True)
class SeededRegion:
    matchable: bool
    lambda_min: int | None
    information: float
    side_ratio: float | None      # I * sqrt(Lambda_min)


def seeded_lambda_min(n: int, info: float) -> int:
    """ceil(2 log n / I), tolerant of float noise just above an integer."""
    return math.ceil(2 * math.log2(n) / info - 1e-9)


def seeded_region(P: JointDistribution, n: int) -> SeededRegion:
    """Smallest seed count ceil(2 log n / I); I = 0 is unmatchable."""
    info = mutual_information(P)
    if info <= 1e-15:
        return SeededRegion(False, None, info, None)
    lam = seeded_lambda_min(n, info)
    return SeededRegion(True, lam, info, info * math.sqrt(lam))


# -- erasure model ------------------------------------------------------------------

@dataclass
class ErasureScan:
    s: float
    p: float
    min_ratio: float
    argmin_alpha: float
    exceeds: bool
    min_ratio_prime: float | None
    rows: list


def erasure_ratio_scan(s: float, alpha0: float = 0.8, n_ref: float = 1e6, theta: float = 1.0,
                       step: float = 0.01, alpha_max: float | None = None,
                       rel_tol: float = 1e-4) -> ErasureScan:
    """min over alpha in [0, alpha0] of E_{a^2} / (2 (1 - a) p) against s / 2.

    p = theta ln n / n at the reference n.  The ratio is in nats: the
    exponent (bits) is multiplied by ln 2.  With ``alpha_max`` the E'
    ratio on [alpha0, alpha_max] is reported too.
    """
    import warnings
    from .generators import erasure_joint

    if not 0.25 < s < 0.5:
        warnings.warn("s outside (1/4, 1/2); the scan is still computed")
    p = theta * math.log(n_ref) / n_ref
    P = erasure_joint(p, s)
    tol = rel_tol * p
    rows = []
    for a in _alpha_grid(0, alpha0, step):
        e = exponent_E_alpha(P, a * a, tol).value
        rows.append({"alpha": float(a), "ratio": e * math.log(2) / (2 * (1 - a) * p)})
    k = int(np.argmin([r["ratio"] for r in rows]))
    prime = None
    if alpha_max is not None:
        vals = []
        for a in _alpha_grid(alpha0, alpha_max, step):
            ep = exponent_Eprime_alpha(P, a * a, tol).value
            vals.append(ep * math.log(2) / (2 * (1 - a) * p))
            rows.append({"alpha": float(a), "ratio_prime": vals[-1]})
        prime = min(vals)
    r = rows[k]["ratio"]
    return ErasureScan(s, p, r, rows[k]["alpha"], r > s / 2, prime, rows)
