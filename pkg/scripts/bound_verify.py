"""Exact typicality probability of every standard permutation against the exponent bounds."""
import argparse

from typmatch.experiments import ExperimentConfig, run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--pmf", type=float, nargs=4, default=[0.4, 0.1, 0.1, 0.4],
                    help="binary joint pmf in row-major order")
    ap.add_argument("--n", type=int, nargs="+", default=[6, 8])
    ap.add_argument("--eps", type=float, nargs="+", default=[0.05, 0.1])
    ap.add_argument("--output", default="results/bound_verify.csv")
    a = ap.parse_args()
    cfg = ExperimentConfig("bound-verify", n_list=a.n, eps=a.eps,
                           params={"dist": {"alphabets": [2, 2], "pmf": a.pmf}}, output=a.output)
    res = run_experiment(cfg)
    print(f"{res.csv_path}: zero violations = {res.ok}")


if __name__ == "__main__":
    main()
