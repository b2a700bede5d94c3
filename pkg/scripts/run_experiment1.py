#!/usr/bin/env python3
"""Run the P error-rate study and print the per-n table and the fitted slope.

    python3 scripts/run_experiment1.py --replicates 30 --out results/e1
    python3 scripts/run_experiment1.py --l 8          # sensitivity to the k-means size
"""
import argparse
import os
import warnings

from dcmm.experiments import DEFAULT_N_LIST, ExperimentConfig, run_experiment_p, write_experiment_p


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--replicates", type=int, default=100)
    ap.add_argument("--n-list", type=int, nargs="+", default=list(DEFAULT_N_LIST))
    ap.add_argument("--vertex-hunter", choices=("svs", "spa"), default="svs")
    ap.add_argument("--l", type=int)
    ap.add_argument("--phi", type=float)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    ap.add_argument("--out", help="directory for the csv outputs")
    ap.add_argument("--svg", action="store_true")
    args = ap.parse_args()

    cfg = ExperimentConfig(n_list=args.n_list, replicates=args.replicates,
                           vertex_hunter=args.vertex_hunter, l=args.l, phi=args.phi,
                           master_seed=args.seed, threads=args.threads)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = run_experiment_p(cfg)
    print(f"{'n':>6} {'mean err':>10} {'se':>8} {'failed':>7}")
    for s in res.summary:
        print(f"{s['n']:>6} {s['mean_err']:>10.4f} {s['se']:>8.4f} {s['n_failed']:>7}")
    if res.fit:
        print(f"slope {res.fit.slope:.3f}  intercept {res.fit.intercept:.3f}  "
              f"r2 {res.fit.r_squared:.3f}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        for p in write_experiment_p(res, args.out, svg=args.svg):
            print("wrote", p)


if __name__ == "__main__":
    main()
