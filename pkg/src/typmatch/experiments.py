"""Configured experiment sweeps writing long-format CSV plus a JSON manifest."""
from __future__ import annotations

import csv
import hashlib
import io
import itertools
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .conditions import erasure_ratio_scan
from .generators import gen_cper, gen_seeded
from .matchers import stm_match, tm_match_exhaustive
from .perms import (all_signatures, bell_count_bounds, BellSignature, brute_force_bell_counts,
                    count_fixed_point_perms, cycle_decompose, derangement_count,
                    induced_edge_permutation, k_fold_derangement_bounds,
                    k_fold_derangement_count, standard_permutation)
from .rng import trial_seed
from .typicality import (JointDistribution, correction_terms, exponent_E_alpha,
                         exponent_Ehat, exponent_Eprime_alpha, typicality_prob_exact)

SCHEMA = "typmatch.experiment/1"
KINDS = ("bound-verify", "match-sweep", "seeded-sweep", "erasure-scan", "counting-verify")
COLUMNS = ("experiment", "n", "trial", "seed", "metric", "value")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    kind: str
    name: str = ""
    n_list: list = field(default_factory=lambda: [6])
    trials: int = 1
    master_seed: int = 0
    eps: float | list | None = None
    params: dict = field(default_factory=dict)
    output: str = "results.csv"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}; expected one of {KINDS}")
        if int(self.trials) < 1:
            raise ConfigError("trials must be >= 1")
        if not self.n_list:
            raise ConfigError("n_list must not be empty")
        self.name = self.name or self.kind
        dist = self.params.get("dist")
        if isinstance(dist, str) and not Path(dist).exists():
            raise ConfigError(f"distribution file {dist} does not exist")

    @classmethod
    def from_json(cls, obj: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(obj) - known
        if extra:
            raise ConfigError(f"unknown config keys {sorted(extra)}")
        if "kind" not in obj:
            raise ConfigError("config needs a 'kind'")
        return cls(**obj)

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(asdict(self), sort_keys=True).encode()).hexdigest()

    def joint(self) -> JointDistribution:
        dist = self.params.get("dist")
        if dist is None:
            raise ConfigError("params.dist is required for this experiment")
        try:
            if isinstance(dist, str):
                return JointDistribution.load(dist)
            return JointDistribution.from_json(dist)
        except (ValueError, KeyError) as exc:
            raise ConfigError(f"invalid distribution: {exc}") from exc


def _eps_list(cfg, default):
    if cfg.eps is None:
        return list(default)
    return list(cfg.eps) if isinstance(cfg.eps, (list, tuple)) else [cfg.eps]


# -- bound verification --------------------------------------------------------------

def bound_verify_rows(P: JointDistribution, n: int, eps: float, tol: float = 1e-4,
                      zeta_prime_coeff: float = 12.0, slack: float = 0.0) -> list[dict]:
    """Exact typicality probability of every standard permutation on [n] against the three bounds.

    The exponent grid tolerance is subtracted from each exponent so a grid
    minimum that overshoots the true minimum cannot fake a violation.
    """
    out = []
    cache = {}
    for sig in all_signatures(n):
        alpha = sig.m / n
        if alpha not in cache:
            corr = correction_terms(n, P, eps, alpha, slack, zeta_prime_coeff)
            e = exponent_E_alpha(P, alpha, tol)
            ep = exponent_Eprime_alpha(P, alpha, tol)
            eh = exponent_Ehat(P, alpha)
            cache[alpha] = {
                "bound_E": 2.0 ** (-n * (e.value - tol - corr.zeta - corr.delta)),
                "bound_Eprime": 2.0 ** (-n * (ep.value - tol - corr.zeta_prime - corr.delta)),
                "bound_Ehat": 2.0 ** (-n * (eh - corr.zeta_prime - corr.delta / 3)),
            }
        exact = typicality_prob_exact(P, standard_permutation(sig), eps, n)
        row = {"signature": f"m={sig.m};cycles={'-'.join(map(str, sig.lengths)) or 'none'}",
               "eps": eps, "alpha": alpha, "exact": exact, **cache[alpha]}
        row["ok"] = all(exact <= row[k] for k in ("bound_E", "bound_Eprime", "bound_Ehat"))
        out.append(row)
    return out


# -- counting verification -----------------------------------------------------------

@dataclass
class CountingReport:
    ok: bool
    rows: list


def verify_counting(n_max: int) -> CountingReport:
    """Exhaustive checks of the fixed-point, derangement, k-fold and Bell counting formulas."""
    rows = []

    def check(name, n, passed, detail=""):
        rows.append({"check": name, "n": n, "ok": bool(passed), "detail": str(detail)})

    for n in range(1, min(n_max, 7) + 1):
        fixed = np.zeros(n + 1, dtype=np.int64)
        edge_law = True
        for p in itertools.permutations(range(n)):
            arr = np.array(p)
            f = int((arr == np.arange(n)).sum())
            fixed[f] += 1
            if n <= 5:
                sig, cycles = cycle_decompose(arr)
                twos = sum(1 for c in cycles if len(c) == 2)
                fe = int((induced_edge_permutation(arr) == np.arange(n * (n - 1) // 2)).sum())
                edge_law &= fe == math.comb(f, 2) + twos
        for m in range(n + 1):
            c = count_fixed_point_perms(n, m)
            check("fixed_point_exact", n, c.exact == fixed[m], f"m={m}")
            check("fixed_point_bounds", n, c.lower <= c.exact <= c.upper, f"m={m}")
        check("derangement", n, derangement_count(n) == fixed[0])
        check("sum_to_factorial", n, fixed.sum() == math.factorial(n))
        if n <= 5:
            check("edge_fixed_points", n, edge_law)
    for n in range(1, min(n_max, 5) + 1):
        for k in range(1, min(n, 3) + 1):
            lo, hi = k_fold_derangement_bounds(n, k)
            d = k_fold_derangement_count(n, k)
            check("k_fold_bounds", n, lo <= d <= hi, f"k={k};d={d}")
        for sig, count in brute_force_bell_counts(n, 3).items():
            lo, hi = bell_count_bounds(BellSignature(3, sig))
            check("bell_bounds", n, lo <= count <= hi, f"sig={sig};count={count}")
    return CountingReport(all(r["ok"] for r in rows), rows)


# -- runners ---------------------------------------------------------------------------

def _match_trial(args):
    P_json, n, eps, seed = args
    P = JointDistribution.from_json(P_json)
    r = tm_match_exhaustive(gen_cper(n, P, seed), eps=eps, seed=seed)
    return [("accuracy", r.accuracy), ("ambiguity_size", r.ambiguity_size),
            ("truth_in_set", int(bool(r.truth_in_set))), ("empty", int(r.failed))]


def _seeded_trial(args):
    P_json, n, lam, eps, seed = args
    P = JointDistribution.from_json(P_json)
    r = stm_match(gen_seeded(n, P, lam, seed), eps=eps, seed=seed)
    return [("seeds", lam), ("accuracy", r.accuracy), ("strict_success", int(r.status == "ok"))]


def workers() -> int:
    env = os.environ.get("TYPMATCH_THREADS")
    cap = int(env) if env else (os.cpu_count() or 1)
    return max(1, min(cap, os.cpu_count() or 1))


def _map(fn, jobs):
    w = workers()
    if w <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(w) as pool:
        return list(pool.map(fn, jobs))     # map keeps submission order


def collect_rows(cfg: ExperimentConfig) -> tuple[list[tuple], bool]:
    """Long-format rows for a config, plus whether every verification passed."""
    rows, ok = [], True
    name = cfg.name
    if cfg.kind == "bound-verify":
        P = cfg.joint()
        for n in cfg.n_list:
            for e in _eps_list(cfg, [0.05, 0.1]):
                for t, r in enumerate(bound_verify_rows(P, n, e)):
                    ok &= r["ok"]
                    for k in ("signature", "eps", "alpha", "exact", "bound_E", "bound_Eprime",
                              "bound_Ehat", "ok"):
                        rows.append((name, n, t, "", k, r[k]))
    elif cfg.kind == "match-sweep":
        P = cfg.joint()
        for n in cfg.n_list:
            eps = _eps_list(cfg, [None])[0]
            seeds = [trial_seed(cfg.master_seed, name, t) for t in range(cfg.trials)]
            results = _map(_match_trial, [(P.to_json(), n, eps, s) for s in seeds])
            for t, (s, res) in enumerate(zip(seeds, results)):
                rows.extend((name, n, t, s, k, v) for k, v in res)
    elif cfg.kind == "seeded-sweep":
        P = cfg.joint()
        eps = _eps_list(cfg, [None])[0]
        for n in cfg.n_list:
            for lam in cfg.params.get("lambdas", [10]):
                seeds = [trial_seed(cfg.master_seed, f"{name}/{lam}", t) for t in range(cfg.trials)]
                results = _map(_seeded_trial, [(P.to_json(), n, lam, eps, s) for s in seeds])
                for t, (s, res) in enumerate(zip(seeds, results)):
                    rows.extend((name, n, t, s, k, v) for k, v in res)
    elif cfg.kind == "erasure-scan":
        p = cfg.params
        for t, s in enumerate(p.get("s_values", [0.26, 0.3, 0.34, 0.38, 0.42, 0.46, 0.48])):
            r = erasure_ratio_scan(s, p.get("alpha0", 0.8), p.get("n_ref", 1e6), p.get("theta", 1.0))
            ok &= r.exceeds
            for k, v in (("s", s), ("min_ratio", r.min_ratio), ("argmin_alpha", r.argmin_alpha),
                         ("half_s", s / 2), ("exceeds", r.exceeds)):
                rows.append((name, p.get("n_ref", 1e6), t, "", k, v))
    elif cfg.kind == "counting-verify":
        rep = verify_counting(max(cfg.n_list))
        ok = rep.ok
        for t, r in enumerate(rep.rows):
            for k in ("check", "ok", "detail"):
                rows.append((name, r["n"], t, "", k, r[k]))
    return rows, ok


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


@dataclass
class ExperimentResult:
    csv_path: Path
    manifest_path: Path
    ok: bool


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    t0 = time.perf_counter()
    rows, ok = collect_rows(cfg)
    out = Path(cfg.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(rows_to_csv(rows), encoding="utf-8")
    manifest = {"schema": SCHEMA, "version": __version__, "config": asdict(cfg),
                "config_hash": cfg.digest(), "rows": len(rows), "verified": bool(ok),
                "wall_time": time.perf_counter() - t0}
    mpath = out.with_suffix(".json")
    mpath.write_text(json.dumps(manifest, indent=2, default=str))
    return ExperimentResult(out, mpath, bool(ok))
