"""``dcmm`` command line.

Exit status: 0 on success, 1 for invalid input (including unreadable
files), 2 when the estimation pipeline itself fails, 64 for malformed
arguments. Outputs are staged in a temporary directory and moved into
place only after the whole command succeeds.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import shutil
import sys
import tempfile
import warnings

from . import __version__
from .errors import DcmmError, ParseError, PipelineError, ValidationError
from .estimation import EstimationConfig, estimate_all
from .experiments import (
    ExperimentConfig,
    run_experiment_p,
    run_experiment_theta,
    write_csv,
    write_experiment_p,
    write_experiment_theta,
)
from .io import read_adjacency, read_kv, read_params, write_adjacency_csv, write_edge_list, \
    write_estimates, write_params
from .lower_bounds import (
    DEFAULTS,
    build_p_pair,
    build_theta_pair_degree,
    build_theta_pair_membership,
    verify_pair,
)
from .model import build_h, experiment_params, sample_adjacency

DEFAULT_SEED = 42
OUTPUT_ENV = "DCMM_OUTPUT_DIR"
EXIT_OK, EXIT_INVALID, EXIT_PIPELINE, EXIT_USAGE = 0, 1, 2, 64
CONFIG_KEYS = {f.name for f in dataclasses.fields(ExperimentConfig)} | {"theta_n"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _int_at_least(lo):
    def conv(text):
        try:
            v = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
        if v < lo:
            raise argparse.ArgumentTypeError(f"must be >= {lo}, got {v}")
        return v
    return conv


def _positive_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {v}")
    return v


def _nonneg_float(text):
    v = float(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {v}")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dcmm", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"dcmm {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def common(p, config=False, threads=False):
        p.add_argument("--out", help=f"output directory (default ${OUTPUT_ENV} or ./dcmm_out)")
        p.add_argument("--seed", type=int, help=f"random seed (default {DEFAULT_SEED})")
        if config:
            p.add_argument("--config", help="key = value experiment config")
        if threads:
            p.add_argument("--threads", type=_int_at_least(1), help="worker threads")

    def hunting(p):
        p.add_argument("--vertex-hunter", choices=("svs", "spa"))
        p.add_argument("--phi", type=_positive_float, help="ball radius around vertices")
        p.add_argument("--l", type=_int_at_least(1), help="number of k-means centers for svs")

    p = sub.add_parser("generate", help="draw a parameter set from the simulation recipe")
    common(p)
    p.add_argument("--n", type=_int_at_least(10), required=True)

    p = sub.add_parser("sample", help="sample an adjacency matrix from a parameter document")
    common(p)
    p.add_argument("--params", required=True)
    p.add_argument("--format", choices=("csv", "edges"), default="csv")

    p = sub.add_parser("estimate", help="estimate P, theta and Pi from an adjacency file")
    common(p)
    p.add_argument("--input", required=True)
    p.add_argument("--k", type=_int_at_least(2), required=True)
    p.add_argument("--format", choices=("auto", "csv", "edges"), default="auto")
    p.add_argument("--n", type=_int_at_least(1), help="node count for edge lists")
    p.add_argument("--strict", action="store_true",
                   help="reject asymmetric or duplicated input instead of repairing it")
    hunting(p)

    p = sub.add_parser("experiment-p", help="error rate of P_hat versus n")
    common(p, config=True, threads=True)
    p.add_argument("--replicates", type=_int_at_least(1))
    p.add_argument("--n-list", type=_int_at_least(10), nargs="+")
    p.add_argument("--svg", action="store_true", help="also write a static plot")
    hunting(p)

    p = sub.add_parser("experiment-theta", help="degree error versus true degree")
    common(p, config=True, threads=True)
    p.add_argument("--replicates", type=_int_at_least(1))
    p.add_argument("--n", type=_int_at_least(10), nargs="+", dest="theta_n")
    p.add_argument("--svg", action="store_true", help="also write static plots")
    hunting(p)

    p = sub.add_parser("lowerbound-verify", help="check the two-point constructions")
    common(p)
    p.add_argument("--n-list", type=_int_at_least(4), nargs="+", default=[500, 1000, 2000])
    p.add_argument("--k", type=_int_at_least(2), default=2)
    for name in ("c0", "c12", "c13", "c14"):
        p.add_argument(f"--{name}", type=_nonneg_float, default=DEFAULTS[name])
    for name in ("theta_tilde", "theta_bar", "theta_i", "lambda_k"):
        p.add_argument(f"--{name.replace('_', '-')}", type=_positive_float,
                       default=DEFAULTS[name], dest=name)
    return parser


# -- helpers ----------------------------------------------------------------------

def _seed(args, fallback=None) -> int:
    if args.seed is not None:
        return args.seed
    return DEFAULT_SEED if fallback is None else fallback


def _out_dir(args) -> str:
    return args.out or os.environ.get(OUTPUT_ENV) or "dcmm_out"


def _hunting_overrides(args) -> dict:
    out = {}
    for key in ("vertex_hunter", "phi", "l"):
        v = getattr(args, key, None)
        if v is not None:
            out[key] = v
    return out


def _experiment_config(args) -> tuple[ExperimentConfig, dict]:
    raw = read_kv(args.config) if args.config else {}
    unknown = sorted(set(raw) - CONFIG_KEYS)
    if unknown:
        raise ParseError(f"unknown config keys: {', '.join(unknown)}")
    extra = {"theta_n": raw.pop("theta_n", None)}
    raw.update(_hunting_overrides(args))
    if args.replicates is not None:
        raw["replicates"] = args.replicates
    if getattr(args, "n_list", None):
        raw["n_list"] = args.n_list
    if getattr(args, "theta_n", None):
        extra["theta_n"] = args.theta_n
    if args.threads is not None:
        raw["threads"] = args.threads
    raw["master_seed"] = _seed(args, raw.get("master_seed"))
    try:
        cfg = ExperimentConfig(**raw)
    except TypeError as exc:
        raise ParseError(f"bad config value: {exc}") from exc
    return cfg, extra


def _config_echo(cfg) -> dict:
    d = dataclasses.asdict(cfg) if dataclasses.is_dataclass(cfg) else dict(cfg)
    return {k: (list(v) if isinstance(v, tuple) else v) for k, v in d.items()}


class _Staging:
    """Write into a temporary sibling directory; publish only on success."""

    def __init__(self, out_dir):
        self.out_dir = os.path.abspath(out_dir)
        self.tmp = None

    def __enter__(self):
        parent = os.path.dirname(self.out_dir)
        os.makedirs(parent, exist_ok=True)
        self.tmp = tempfile.mkdtemp(prefix=".dcmm-staging-", dir=parent)
        return self.tmp

    def __exit__(self, exc_type, exc, tb):
        try:
            if exc_type is None:
                os.makedirs(self.out_dir, exist_ok=True)
                for name in sorted(os.listdir(self.tmp)):
                    os.replace(os.path.join(self.tmp, name), os.path.join(self.out_dir, name))
        finally:
            shutil.rmtree(self.tmp, ignore_errors=True)
        return False


def _manifest(tmp, command, config, seed, outputs) -> None:
    doc = dict(command=command, config=config, seed=seed, version=__version__,
               outputs=sorted(os.path.basename(p) for p in outputs))
    with open(os.path.join(tmp, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


# -- subcommands --------------------------------------------------------------------

def cmd_generate(args, tmp):
    seed = _seed(args)
    params = experiment_params(args.n, seed)
    path = os.path.join(tmp, "params.txt")
    write_params(params, path)
    return dict(n=args.n), seed, [path]


def cmd_sample(args, tmp):
    seed = _seed(args)
    params = read_params(args.params)
    adj = sample_adjacency(build_h(params), seed)
    if args.format == "csv":
        path = os.path.join(tmp, "adjacency.csv")
        write_adjacency_csv(adj, path)
    else:
        path = os.path.join(tmp, "edges.txt")
        write_edge_list(adj, path)
    return dict(params=os.path.basename(args.params), format=args.format, n=adj.n), seed, [path]


def cmd_estimate(args, tmp):
    seed = _seed(args)
    adj = read_adjacency(args.input, fmt=args.format, n=args.n, strict=args.strict)
    est_cfg = EstimationConfig(seed=seed, **_hunting_overrides(args))
    result = estimate_all(adj, args.k, est_cfg)
    paths = write_estimates(result, tmp)
    config = dict(input=os.path.basename(args.input), k=args.k, format=args.format,
                  strict=args.strict, n=adj.n, **_config_echo(est_cfg))
    config.pop("seed", None)
    return config, seed, paths


def cmd_experiment_p(args, tmp):
    cfg, _ = _experiment_config(args)
    result = run_experiment_p(cfg)
    paths = write_experiment_p(result, tmp, svg=args.svg)
    if result.fit is not None:
        f = result.fit
        print(f"experiment-p: slope {f.slope:.4f}, r2 {f.r_squared:.4f}", file=sys.stderr)
    return _config_echo(cfg), cfg.master_seed, paths


def cmd_experiment_theta(args, tmp):
    cfg, extra = _experiment_config(args)
    ns = extra["theta_n"] or [400, 1000]
    ns = [ns] if isinstance(ns, int) else list(ns)
    results = [run_experiment_theta(cfg, int(n)) for n in ns]
    paths = write_experiment_theta(results, tmp, svg=args.svg)
    for r in results:
        high = f"{r.fit_high.slope:.4f}" if r.fit_high else "n/a"
        print(f"experiment-theta n={r.n}: all {r.fit_all.slope:.4f}, high {high}",
              file=sys.stderr)
    return dict(_config_echo(cfg), theta_n=ns), cfg.master_seed, paths


LB_HEADER = ("n", "construction", "gap", "gap_scaled", "kl", "c0", "c12_or_c13_or_c14",
             "assumptions_ok")


def cmd_lowerbound_verify(args, tmp):
    rows = []
    for n in args.n_list:
        pairs = [
            (build_p_pair(n, args.k, c12=args.c12, c0=args.c0, theta_tilde=args.theta_tilde,
                          theta_bar=args.theta_bar, lambda_k=args.lambda_k), args.c0, args.c12),
            (build_theta_pair_membership(n, args.k, c13=args.c13, c0=args.c0,
                                         theta_i=args.theta_i, theta_bar=args.theta_bar),
             args.c0, args.c13),
            (build_theta_pair_degree(n, args.k, c13=args.c13, c14=args.c14,
                                     theta_i=args.theta_i, theta_bar=args.theta_bar),
             float("nan"), args.c14),
        ]
        for pair, c0, c_other in pairs:
            rep = verify_pair(pair)
            rows.append(dict(n=n, construction=rep.construction, gap=rep.gap,
                             gap_scaled=rep.gap_scaled, kl=rep.kl, c0=c0,
                             c12_or_c13_or_c14=c_other, assumptions_ok=rep.assumptions_ok))
    path = os.path.join(tmp, "lowerbounds.csv")
    write_csv(path, LB_HEADER, rows)
    config = {k: getattr(args, k) for k in ("n_list", "k", "c0", "c12", "c13", "c14",
                                            "theta_tilde", "theta_bar", "theta_i", "lambda_k")}
    return config, None, [path]


COMMANDS = {
    "generate": cmd_generate,
    "sample": cmd_sample,
    "estimate": cmd_estimate,
    "experiment-p": cmd_experiment_p,
    "experiment-theta": cmd_experiment_theta,
    "lowerbound-verify": cmd_lowerbound_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        with warnings.catch_warnings():
            if args.command.startswith("experiment"):
                from .errors import AllClippedWarning, DegenerateGapWarning, OverlapWarning
                for w in (AllClippedWarning, DegenerateGapWarning, OverlapWarning):
                    warnings.simplefilter("ignore", w)
            with _Staging(_out_dir(args)) as tmp:
                config, seed, outputs = COMMANDS[args.command](args, tmp)
                _manifest(tmp, args.command, config, seed, outputs)
    except PipelineError as exc:
        print(f"dcmm: pipeline error: {exc}", file=sys.stderr)
        return EXIT_PIPELINE
    except (ValidationError, OSError) as exc:
        print(f"dcmm: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except DcmmError as exc:  # pragma: no cover - every error is one of the two kinds
        print(f"dcmm: error: {exc}", file=sys.stderr)
        return EXIT_PIPELINE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
