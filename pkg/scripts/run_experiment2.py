#!/usr/bin/env python3
"""Run the degree error study and print the log-log slopes per subset.

    python3 scripts/run_experiment2.py --n 400 1000 --replicates 50
"""
import argparse
import os
import warnings

from dcmm.experiments import ExperimentConfig, run_experiment_theta, write_experiment_theta


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="+", default=[400, 1000])
    ap.add_argument("--replicates", type=int, default=100)
    ap.add_argument("--vertex-hunter", choices=("svs", "spa"), default="svs")
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    ap.add_argument("--out")
    ap.add_argument("--svg", action="store_true")
    args = ap.parse_args()

    cfg = ExperimentConfig(replicates=args.replicates, vertex_hunter=args.vertex_hunter,
                           master_seed=args.seed, threads=args.threads)
    results = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for n in args.n:
            r = run_experiment_theta(cfg, n)
            results.append(r)
            fmt = lambda f: "n/a" if f is None else f"{f.slope:.3f} (r2 {f.r_squared:.2f})"
            print(f"n={n}: theta_bar {r.theta_bar:.3f}, all {fmt(r.fit_all)}, "
                  f"high {fmt(r.fit_high)}, low {fmt(r.fit_low)}, failed {r.n_failed}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        for p in write_experiment_theta(results, args.out, svg=args.svg):
            print("wrote", p)


if __name__ == "__main__":
    main()
