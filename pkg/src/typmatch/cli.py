"""Command line entry point: generate, match, bounds, experiment, verify-counting.

Exit codes: 0 ok, 2 configuration error, 3 verification failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .conditions import bound_rows
from .experiments import ConfigError, ExperimentConfig, run_experiment, verify_counting
from .generators import (CorrelatedPair, GraphCollection, SeededPair, erasure_joint, gen_collection,
                         gen_cpcs, gen_cper, gen_seeded, save_truth)
from .graph import CommunityStructure, check_permutation, load_graph, save_graph
from .matchers import (GuardError, stm_match, tm_match_collection, tm_match_exhaustive,
                       tm_match_sbm, tm_match_sbm_blind)
from .typicality import JointDistribution

EXIT_OK, EXIT_CONFIG, EXIT_VERIFY = 0, 2, 3


def _read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc


def load_joints(path) -> tuple[dict, list]:
    """SBM joints file: {"communities": [...], "blocks": {"i,j": distribution, ...}}."""
    obj = _read_json(path)
    blocks = {}
    for key, dist in obj["blocks"].items():
        i, j = (int(x) for x in key.split(","))
        blocks[(i, j)] = JointDistribution.from_json(dist)
    return blocks, obj.get("communities")


def cmd_generate(a) -> int:
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    seeds = None
    if a.model == "erasure":
        pair = gen_cper(a.n, erasure_joint(a.p, a.s), a.seed)
    elif a.model == "sbm":
        joints, comm = load_joints(a.joints)
        if comm is None:
            raise ConfigError("joints file needs a 'communities' membership list")
        pair = gen_cpcs(a.n, CommunityStructure(comm), joints, a.seed)
    elif a.model == "collection":
        coll = gen_collection(a.n, a.m, JointDistribution.load(a.dist), a.seed)
        for r, g in enumerate(coll.graphs):
            save_graph(g, out / f"g{r + 1}.json")
        (out / "truth.json").write_text(json.dumps({"sigmas": [s.tolist() for s in coll.sigmas]}))
        return EXIT_OK
    elif a.model == "seeded":
        sp = gen_seeded(a.n, JointDistribution.load(a.dist), a.seeds, a.seed)
        pair, seeds = sp.pair, sp.seeds
    else:
        pair = gen_cper(a.n, JointDistribution.load(a.dist), a.seed)
    save_graph(pair.g1, out / "g1.json")
    save_graph(pair.g2, out / "g2.json")
    save_truth(out / "truth.json", pair, seeds)
    return EXIT_OK


def cmd_match(a) -> int:
    graphs = [load_graph(p) for p in a.graphs]
    truth = _read_json(a.truth) if a.truth else {}
    n = graphs[0].n
    if any(g.n != n for g in graphs):
        raise ConfigError("graphs have different vertex counts")
    sig1 = check_permutation(truth.get("sigma1", range(n)), n)
    sig2 = truth.get("sigma2")
    sig2 = None if sig2 is None else check_permutation(sig2, n)
    if a.model == "collection":
        P = JointDistribution.load(a.dist)
        sigmas = truth.get("sigmas") or [list(range(n))] + [list(range(n))] * (len(graphs) - 1)
        coll = GraphCollection(tuple(graphs), tuple(np.asarray(s) for s in sigmas), P)
        report = tm_match_collection(coll, a.eps, seed=a.seed)
        if "sigmas" not in truth:
            report.accuracy = report.truth_in_set = report.mean_set_accuracy = None
    elif a.model in ("sbm", "sbm-blind"):
        joints, comm = load_joints(a.joints)
        comm = truth.get("communities", comm)
        if comm is None:
            raise ConfigError("community memberships are required")
        cs = CommunityStructure(comm)
        pair = CorrelatedPair(graphs[0], graphs[1], sig1, sig2, "sbm", comm=cs, joints=joints)
        if a.model == "sbm":
            comm2 = truth.get("communities_g2")
            if comm2 is None and sig2 is None:
                raise ConfigError("sbm matching needs g2 memberships (communities_g2) or sigma2")
            report = tm_match_sbm(pair, a.eps, seed=a.seed, comm2=comm2)
        else:
            report = tm_match_sbm_blind(pair, eps=a.eps, seed=a.seed)
    else:
        P = JointDistribution.load(a.dist)
        pair = CorrelatedPair(graphs[0], graphs[1], sig1, sig2, a.model, joint=P)
        if a.model == "seeded":
            if sig2 is None or not truth.get("seeds"):
                raise ConfigError("seeded matching needs seeds and their labels (sigma2) in --truth")
            report = stm_match(SeededPair(pair, np.asarray(truth["seeds"], dtype=np.int64)),
                               a.eps, a.passes, seed=a.seed)
        else:
            report = tm_match_exhaustive(pair, a.eps, seed=a.seed)
    json.dump(report.to_json(), sys.stdout, default=_jsonable)
    sys.stdout.write("\n")
    return EXIT_OK


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    return str(v)


def cmd_bounds(a) -> int:
    P = JointDistribution.load(a.dist)
    rows = bound_rows(P, a.n, a.alpha_max, a.step, a.eps or 0.0)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["alpha", "E_alpha", "Eprime_alpha", "Ehat", "lhs", "margin"])
    for r in rows:
        w.writerow([repr(float(r[k])) for k in ("alpha", "E_alpha", "Eprime_alpha", "Ehat", "lhs", "margin")])
    return EXIT_OK


def cmd_experiment(a) -> int:
    obj = _read_json(a.config)
    if a.output:
        obj["output"] = a.output
    cfg = ExperimentConfig.from_json(obj)
    res = run_experiment(cfg)
    print(f"wrote {res.csv_path} and {res.manifest_path}")
    return EXIT_OK if res.ok else EXIT_VERIFY


def cmd_verify_counting(a) -> int:
    rep = verify_counting(a.n_max)
    bad = [r for r in rep.rows if not r["ok"]]
    print(f"{len(rep.rows)} checks, {len(bad)} violations")
    for r in bad:
        print(f"  {r['check']} n={r['n']} {r['detail']}")
    return EXIT_OK if rep.ok else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="typmatch", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="sample a correlated graph pair or collection")
    g.add_argument("--model", choices=["cer", "erasure", "sbm", "collection", "seeded"], default="cer")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--dist", help="distribution JSON file")
    g.add_argument("--joints", help="SBM joints JSON file")
    g.add_argument("--p", type=float, default=0.2)
    g.add_argument("--s", type=float, default=0.5)
    g.add_argument("--m", type=int, default=3)
    g.add_argument("--seeds", type=int, default=10, help="seed-set size for --model seeded")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True, help="output directory")
    g.set_defaults(func=cmd_generate)

    m = sub.add_parser("match", help="run a matcher and print its report as JSON")
    m.add_argument("--model", choices=["cer", "sbm", "sbm-blind", "collection", "seeded"], default="cer")
    m.add_argument("--graphs", nargs="+", required=True)
    m.add_argument("--truth")
    m.add_argument("--dist")
    m.add_argument("--joints")
    m.add_argument("--eps", type=float)
    m.add_argument("--passes", type=int, default=2)
    m.add_argument("--seed", type=int, default=0)
    m.set_defaults(func=cmd_match)

    b = sub.add_parser("bounds", help="per-alpha exponents and condition margin as CSV")
    b.add_argument("--dist", required=True)
    b.add_argument("--n", type=int, required=True)
    b.add_argument("--eps", type=float, default=0.0)
    b.add_argument("--alpha-max", type=float, default=0.99)
    b.add_argument("--step", type=float, default=0.01)
    b.set_defaults(func=cmd_bounds)

    e = sub.add_parser("experiment", help="run a configured experiment")
    e.add_argument("--config", required=True)
    e.add_argument("--output")
    e.set_defaults(func=cmd_experiment)

    v = sub.add_parser("verify-counting", help="exhaustive checks of the counting formulas")
    v.add_argument("--n-max", type=int, default=5)
    v.set_defaults(func=cmd_verify_counting)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, GuardError, ValueError, KeyError, TypeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
