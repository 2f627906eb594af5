"""Joint types, strong typicality, divergences and the permutation error exponents.

All logarithms are base 2.  An infinite divergence is returned as
``math.inf``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize

from .perms import apply_permutation, set_partitions

PMF_ATOL = 1e-12


@dataclass(frozen=True)
class JointDistribution:
    """Dense pmf over the product of k finite alphabets (k = pmf.ndim)."""

    pmf: np.ndarray

    def __post_init__(self):
        p = np.array(self.pmf, dtype=float)
        if p.ndim < 1:
            raise ValueError("pmf needs at least one axis")
        if np.any(p < 0) or abs(p.sum() - 1.0) > PMF_ATOL * max(1, p.size):
            raise ValueError("pmf entries must be nonnegative and sum to 1")
        p.setflags(write=False)
        object.__setattr__(self, "pmf", p)

    @property
    def k(self) -> int:
        return self.pmf.ndim

    @property
    def alphabets(self) -> tuple[int, ...]:
        return self.pmf.shape

    def marginal(self, axes) -> np.ndarray:
        """Marginal over ``axes`` (in the given order)."""
        axes = tuple(axes)
        other = tuple(a for a in range(self.k) if a not in axes)
        m = self.pmf.sum(axis=other)
        order = np.argsort(np.argsort(axes))
        return np.transpose(m, order) if m.ndim > 1 else m

    def block_product(self, partition) -> np.ndarray:
        """prod over blocks D of the marginal on D, as a full k-dimensional table."""
        out = np.ones(self.pmf.shape)
        for block in partition:
            other = tuple(a for a in range(self.k) if a not in block)
            out = out * self.pmf.sum(axis=other, keepdims=True)
        return out

    def product_of_marginals(self) -> np.ndarray:
        return self.block_product([(a,) for a in range(self.k)])

    def conditional(self) -> np.ndarray:
        """P_{Y|X} rows for a pairwise distribution (zero rows where P_X = 0)."""
        px = self.pmf.sum(axis=1)
        return np.divide(self.pmf, px[:, None], out=np.zeros_like(self.pmf), where=px[:, None] > 0)

    def to_json(self) -> dict:
        return {"alphabets": list(self.alphabets), "pmf": self.pmf.ravel().tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "JointDistribution":
        """{"pmf": nested lists} or {"alphabets": [...], "pmf": flat row-major list}."""
        pmf = np.asarray(obj["pmf"], dtype=float)
        if "alphabets" in obj:
            pmf = pmf.reshape(obj["alphabets"])
        return cls(pmf)

    @classmethod
    def load(cls, path) -> "JointDistribution":
        return cls.from_json(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class TypeVector:
    """Empirical joint type: symbol-tuple counts of k equal-length sequences."""

    counts: np.ndarray

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    @property
    def freq(self) -> np.ndarray:
        return self.counts / self.n


def joint_type(seqs, alphabets=None) -> TypeVector:
    arrs = [np.asarray(s, dtype=np.int64) for s in seqs]
    if not arrs or len({a.size for a in arrs}) != 1 or arrs[0].size == 0:
        raise ValueError("need one or more nonempty sequences of equal length")
    if alphabets is None:
        alphabets = tuple(int(a.max()) + 1 for a in arrs)
    for a, size in zip(arrs, alphabets):
        if a.min() < 0 or a.max() >= size:
            raise ValueError("symbol outside its alphabet")
    flat = np.ravel_multi_index(arrs, alphabets)
    counts = np.bincount(flat, minlength=int(np.prod(alphabets))).reshape(alphabets)
    return TypeVector(counts)


def typical_mask(freq, pmf, eps: float) -> np.ndarray:
    """Cell-wise strong typicality of type frequencies (last axes match pmf)."""
    pmf = np.asarray(pmf)
    freq = np.asarray(freq)
    axes = tuple(range(freq.ndim - pmf.ndim, freq.ndim))
    ok = np.all(np.abs(freq - pmf) <= eps + 1e-12, axis=axes)
    null = pmf == 0
    if null.any():
        ok &= np.all(np.where(null, freq, 0) == 0, axis=axes)
    return ok


def is_strongly_typical(seqs, P: JointDistribution, eps: float) -> bool:
    """Every cell within eps of P, and exactly zero wherever P is zero."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    t = seqs if isinstance(seqs, TypeVector) else joint_type(seqs, P.alphabets)
    return bool(typical_mask(t.freq, P.pmf, eps))


def _as_array(p):
    if isinstance(p, JointDistribution):
        return p.pmf
    if isinstance(p, TypeVector):
        return p.freq
    return np.asarray(p, dtype=float)


def kl_rows(p, q) -> np.ndarray:
    """D(p || q) in bits over the trailing axis; inf where p charges a q-null cell."""
    p = np.asarray(p, dtype=float)
    q = np.broadcast_to(np.asarray(q, dtype=float), p.shape)
    pos = p > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(pos, p * (np.log2(np.where(pos, p, 1)) - np.log2(np.where(q > 0, q, 1))), 0.0)
    out = np.maximum(terms.sum(axis=-1), 0.0)     # round-off can dip below zero
    bad = np.any(pos & (q <= 0), axis=-1)
    return np.where(bad, np.inf, out)


def kl_divergence(p, q) -> float:
    p, q = _as_array(p), _as_array(q)
    if p.shape != q.shape:
        raise ValueError("alphabets do not match")
    return float(kl_rows(p.ravel(), q.ravel()))


def entropy(p) -> float:
    p = _as_array(p).ravel()
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def mutual_information(P: JointDistribution) -> float:
    if P.k != 2:
        raise ValueError("mutual information needs a pairwise distribution")
    return kl_divergence(P.pmf, P.product_of_marginals())


# -- exponents ----------------------------------------------------------------

@dataclass
class ExponentResult:
    value: float
    argmin: np.ndarray | None = None
    resolution: float = 0.0
    corrections: dict = field(default_factory=dict)


def _check_alpha(alpha):
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")


def _box_simplex_min(f, lo, hi, tol=1e-4, anchors=(), coarse=51, fine=11, max_levels=60):
    """Minimise a vectorised f over {t : lo <= t <= hi, sum t = 1}.

    The first d-1 coordinates are gridded inside their boxes (``coarse``
    points per axis, fewer if the grid would get too large), the last is
    implied.  The grid is then recentred and shrunk around the incumbent
    until the value moves by less than ``tol``.  Points in ``anchors`` are
    always evaluated.  Above three free coordinates the grid is replaced by
    SLSQP started from the best anchor.
    """
    lo = np.asarray(lo, float)
    hi = np.asarray(hi, float)
    d = lo.size
    anchors = [np.asarray(a, float) for a in anchors]

    def feasible(pts):
        return np.all((pts >= lo - 1e-12) & (pts <= hi + 1e-12), axis=1) & (np.abs(pts.sum(1) - 1) < 1e-9)

    def evaluate(pts):
        pts = pts[feasible(pts)]
        if not len(pts):
            return None, np.inf
        vals = f(np.clip(pts, 0, None))
        i = int(np.argmin(vals))
        return pts[i], float(vals[i])

    best, best_val = evaluate(np.array(anchors)) if anchors else (None, np.inf)
    if d == 1:
        pt, val = evaluate(np.ones((1, 1)))
        return pt, val, 0.0
    free = d - 1
    if free > 3:
        start = best if best is not None else np.clip((lo + hi) / 2, lo, hi)
        res = minimize(lambda t: float(f(np.clip(t, 0, None)[None])[0]), start, method="SLSQP",
                       bounds=list(zip(lo, hi)),
                       constraints=[{"type": "eq", "fun": lambda t: t.sum() - 1}],
                       options={"ftol": tol * 1e-2, "maxiter": 500})
        pt, val = evaluate(res.x[None])
        if val < best_val:
            best, best_val = pt, val
        return best, best_val, tol

    g = max(3, min(coarse, int(2e5 ** (1 / free))))
    cur_lo, cur_hi = lo[:free].copy(), hi[:free].copy()
    step = (cur_hi - cur_lo) / (g - 1)
    prev = np.inf
    for level in range(max_levels):
        axes = [np.linspace(a, b, g) if b > a else np.array([a]) for a, b in zip(cur_lo, cur_hi)]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, free)
        pts = np.concatenate([mesh, 1 - mesh.sum(1, keepdims=True)], axis=1)
        pt, val = evaluate(pts)
        if val < best_val:
            best, best_val = pt, val
        if best is None:
            # the slice sum = 1 missed the grid; densify
            g = min(2 * g, 2001)
            step = (cur_hi - cur_lo) / (g - 1)
            continue
        if level > 0 and abs(prev - best_val) < tol and np.max(step) < max(tol, 1e-9):
            break
        prev = best_val
        span = 2 * step
        cur_lo = np.maximum(lo[:free], best[:free] - span)
        cur_hi = np.minimum(hi[:free], best[:free] + span)
        g = fine
        step = (cur_hi - cur_lo) / (g - 1)
        if np.max(step) == 0:
            break
    return best, best_val, float(np.max(step)) if np.size(step) else 0.0


def exponent_E_alpha(P: JointDistribution, alpha: float, tol: float = 1e-4) -> ExponentResult:
    """Fixed-point exponent minimised over the marginal type of the non-fixed positions.

    Objective (bits), with t'' = (P_X - (1-alpha) t') / alpha and
    P_Y'' = sum_x t'(x) P_{Y|X}(.|x):
        1/2 [(1-alpha) D(t'||P_X) + alpha D(t''||P_X)
             + D(P_XY || (1-alpha) P_X P_Y'' + alpha P_XY)]
    over t'(x) in [(P_X(x) - alpha) / (1-alpha), P_X(x) / (1-alpha)].
    """
    _check_alpha(alpha)
    if alpha == 1.0:
        return ExponentResult(0.0, P.marginal([0]).copy())
    pxy = P.pmf
    px = P.marginal([0])
    cond = P.conditional()

    def objective(t1):
        pieces = (1 - alpha) * kl_rows(t1, px)
        if alpha > 0:
            t2 = np.clip((px - (1 - alpha) * t1) / alpha, 0, None)
            pieces = pieces + alpha * kl_rows(t2, px)
        py2 = t1 @ cond
        mix = (1 - alpha) * px[None, :, None] * py2[:, None, :] + alpha * pxy[None]
        pieces = pieces + kl_rows(np.broadcast_to(pxy.ravel(), (len(t1), pxy.size)),
                                  mix.reshape(len(t1), -1))
        return 0.5 * pieces

    lo = np.clip((px - alpha) / (1 - alpha), 0, 1)
    hi = np.clip(px / (1 - alpha), 0, 1)
    t, val, res = _box_simplex_min(objective, lo, hi, tol, anchors=[px])
    return ExponentResult(max(val, 0.0), t, res)


def exponent_Eprime_alpha(P: JointDistribution, alpha: float, tol: float = 1e-4) -> ExponentResult:
    """Joint-type exponent: min ((1-alpha)/3) D(t'||P_X P_Y) + alpha D(t''||P_XY).

    t'' = (P_XY - (1-alpha) t') / alpha, with t'(x,y) boxed in
    [(P(x,y) - alpha) / (1-alpha), P(x,y) / (1-alpha)].
    """
    _check_alpha(alpha)
    p = P.pmf.ravel()
    if alpha == 1.0:
        return ExponentResult(0.0, p.copy())
    q = P.product_of_marginals().ravel()

    def objective(t1):
        val = (1 - alpha) / 3 * kl_rows(t1, q)
        if alpha > 0:
            t2 = np.clip((p - (1 - alpha) * t1) / alpha, 0, None)
            val = val + alpha * kl_rows(t2, p)
        return val

    lo = np.clip((p - alpha) / (1 - alpha), 0, 1)
    hi = np.clip(p / (1 - alpha), 0, 1)
    t, val, res = _box_simplex_min(objective, lo, hi, tol, anchors=[p])
    return ExponentResult(max(val, 0.0), None if t is None else t.reshape(P.alphabets), res)


def exponent_Ehat(P: JointDistribution, alpha: float) -> float:
    """(1/3) D(P_XY || (1-alpha) P_X P_Y + alpha P_XY), no optimisation."""
    _check_alpha(alpha)
    mix = (1 - alpha) * P.product_of_marginals() + alpha * P.pmf
    return kl_divergence(P.pmf, mix) / 3


def collection_exponent(P: JointDistribution, weights) -> float:
    """D(P_{X^k} || sum_j w_j prod_{D in P_j} P_{X_D}) / ((k(k-1)+1)(b_k-1)).

    ``weights`` follow :func:`typmatch.perms.set_partitions` order (single-set
    partition last) and must sum to 1.
    """
    k = P.k
    parts = set_partitions(k)
    w = np.asarray(weights, dtype=float)
    if w.shape != (len(parts),) or np.any(w < -1e-12) or abs(w.sum() - 1) > 1e-9:
        raise ValueError(f"need {len(parts)} nonnegative weights summing to 1")
    mix = sum(wj * P.block_product(part) for wj, part in zip(w, parts) if wj > 0)
    b = len(parts)
    return kl_divergence(P.pmf, mix) / ((k * (k - 1) + 1) * (b - 1))


class CorrectionTerms(NamedTuple):
    zeta: float
    zeta_prime: float
    delta: float


def correction_terms(n: int, P: JointDistribution, eps: float, alpha: float,
                     delta_eps_slack: float = 0.0, zeta_prime_coeff: float = 4.0) -> CorrectionTerms:
    """Finite-n slack terms of the exponent bounds.

    zeta  = 3/2 |X|^2 |Y| log(n+1)/n + 6 |X||Y| log(n+1)/n
    zeta' = c |X||Y| log((n+1)/n)   (c = 4 in the short form, 12 in the longer derivation)
    delta = eps |X||Y| |max_{P>0} log P / (alpha P + (1-alpha) P_X P_Y)| + slack * eps
    """
    nx, ny = P.alphabets
    lg = math.log2(n + 1) / n
    zeta = 1.5 * nx * nx * ny * lg + 6 * nx * ny * lg
    zeta_p = zeta_prime_coeff * nx * ny * math.log2((n + 1) / n)
    mix = alpha * P.pmf + (1 - alpha) * P.product_of_marginals()
    support = P.pmf > 0
    ratio = np.log2(P.pmf[support]) - np.log2(mix[support])
    delta = eps * nx * ny * abs(float(ratio.max())) + delta_eps_slack * eps
    return CorrectionTerms(zeta, zeta_p, delta)


def max_log_ratio(P: JointDistribution) -> float:
    """max over the support of |log P_X P_Y / P_XY|^+ (the o(log n) side condition)."""
    q = P.product_of_marginals()
    s = P.pmf > 0
    return max(0.0, float((np.log2(q[s]) - np.log2(P.pmf[s])).max()))


# -- probability oracles ---------------------------------------------------------

EXACT_GUARD = 2 ** 26


def typicality_prob_exact(P: JointDistribution, perm, eps: float, n: int | None = None,
                          perm_x=None, chunk: int = 1 << 16) -> float:
    """P((perm_x(X^n), perm(Y^n)) typical) by enumerating every sequence pair.

    (X_i, Y_i) iid from P; ``perm_x`` defaults to the identity.
    """
    perm = np.asarray(perm, dtype=np.int64)
    n = perm.size if n is None else n
    if perm.size != n:
        raise ValueError("permutation length differs from n")
    perm_x = np.arange(n) if perm_x is None else np.asarray(perm_x, dtype=np.int64)
    nx, ny = P.alphabets
    cells = nx * ny
    total = cells ** n
    if total > EXACT_GUARD:
        raise ValueError(f"instance too large for exact enumeration ({total} > {EXACT_GUARD})")
    flat = P.pmf.ravel()
    radix = cells ** np.arange(n, dtype=np.int64)
    prob = 0.0
    for start in range(0, total, chunk):
        idx = np.arange(start, min(total, start + chunk), dtype=np.int64)
        digits = (idx[:, None] // radix[None, :]) % cells
        weight = np.prod(flat[digits], axis=1)
        x = apply_permutation(perm_x, digits // ny)
        z = apply_permutation(perm, digits % ny)
        counts = np.zeros((len(idx), cells))
        np.add.at(counts, (np.arange(len(idx))[:, None], x * ny + z), 1)
        ok = typical_mask(counts / n, flat, eps)
        prob += float(weight[ok].sum())
    return prob


def typicality_prob_mc(P: JointDistribution, perm, eps: float, n: int | None = None,
                       trials: int = 10000, seed: int = 0) -> tuple[float, float]:
    """Monte Carlo estimate of P((X^n, perm(Y^n)) typical) and its binomial standard error."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    from .rng import stream

    perm = np.asarray(perm, dtype=np.int64)
    n = perm.size if n is None else n
    nx, ny = P.alphabets
    rng = stream(seed, "typicality-mc")
    digits = rng.choice(nx * ny, size=(trials, n), p=P.pmf.ravel())
    z = apply_permutation(perm, digits % ny)
    codes = (digits // ny) * ny + z
    counts = np.zeros((trials, nx * ny))
    np.add.at(counts, (np.arange(trials)[:, None], codes), 1)
    hits = typical_mask(counts / n, P.pmf.ravel(), eps)
    est = float(hits.mean())
    return est, math.sqrt(est * (1 - est) / trials)


def type_probability_log2(t: TypeVector, P) -> float:
    """log2 of the exact multinomial probability that n iid draws from P have type t."""
    p = _as_array(P).ravel()
    c = np.asarray(t.counts).ravel().astype(np.int64)
    if np.any((c > 0) & (p == 0)):
        return -math.inf
    log_mult = math.lgamma(c.sum() + 1) - sum(math.lgamma(x + 1) for x in c)
    nz = c > 0
    return log_mult / math.log(2) + float((c[nz] * np.log2(p[nz])).sum())


def type_prob_bound_check(t: TypeVector, P, rtol: float = 1e-9) -> bool:
    """Whether P(type = t) <= 2^{-n D(t||P)} holds (up to float rounding)."""
    lhs = type_probability_log2(t, P)
    if lhs == -math.inf:
        return True             # impossible type: both sides are zero
    rhs = -t.n * kl_divergence(t.freq.ravel(), _as_array(P).ravel())
    return lhs <= rhs + rtol * max(1.0, abs(rhs))


def all_types(n: int, cells: int):
    """Every count vector of length ``cells`` summing to n."""
    if cells == 1:
        yield (n,)
        return
    for first in range(n + 1):
        for rest in all_types(n - first, cells - 1):
            yield (first,) + rest
