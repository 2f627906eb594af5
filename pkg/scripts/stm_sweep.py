"""Seeded matching accuracy as a function of the seed count on an erasure-model pair."""
import argparse
import csv
import math
from collections import defaultdict

from typmatch.conditions import seeded_lambda_min
from typmatch.experiments import ExperimentConfig, run_experiment
from typmatch.generators import erasure_joint
from typmatch.typicality import mutual_information


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=1000)
    ap.add_argument("--p", type=float, default=0.5)
    ap.add_argument("--s", type=float, default=0.5)
    ap.add_argument("--trials", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--output", default="results/stm_sweep.csv")
    a = ap.parse_args()
    P = erasure_joint(a.p, a.s)
    lam_min = seeded_lambda_min(a.n, mutual_information(P))
    lambdas = sorted({5, lam_min // 4, lam_min // 2, lam_min, 2 * lam_min} - {0})
    cfg = ExperimentConfig("seeded-sweep", n_list=[a.n], trials=a.trials, master_seed=a.seed,
                           params={"dist": P.to_json(), "lambdas": lambdas}, output=a.output)
    res = run_experiment(cfg)
    acc = defaultdict(list)
    with open(res.csv_path) as f:
        lam = None
        for row in csv.DictReader(f):
            if row["metric"] == "seeds":
                lam = int(row["value"])
            elif row["metric"] == "accuracy":
                acc[lam].append(float(row["value"]))
    print(f"predicted minimum seed count: {lam_min}")
    for lam in lambdas:
        v = acc[lam]
        print(f"  seeds={lam:4d}  mean accuracy {sum(v) / len(v):.3f}")


if __name__ == "__main__":
    main()
