"""Scan the erasure-model ratio min_alpha E_{a^2} / (2 (1 - a) p) against s / 2."""
import argparse

from typmatch.experiments import ExperimentConfig, run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--s", type=float, nargs="+", default=[0.26, 0.30, 0.34, 0.38, 0.42, 0.46, 0.48])
    ap.add_argument("--alpha0", type=float, default=0.8)
    ap.add_argument("--n-ref", type=float, default=1e6)
    ap.add_argument("--output", default="results/erasure_scan.csv")
    a = ap.parse_args()
    cfg = ExperimentConfig("erasure-scan", params={"s_values": a.s, "alpha0": a.alpha0, "n_ref": a.n_ref},
                           output=a.output)
    res = run_experiment(cfg)
    print(f"{res.csv_path}: every s above s/2 = {res.ok}")


if __name__ == "__main__":
    main()
