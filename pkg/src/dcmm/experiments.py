"""Simulation studies of the estimation rates for P and for the degrees.

Two studies share one recipe (K = 2, ``P = 0.5 I + 0.5 11'``, degrees
uniform on [0.05, 0.8], 10% pure nodes per community):

* the P study draws fresh ``(Theta, Pi)`` and one graph per replicate and
  tracks the mean ``|P_hat[0, 1] - P[0, 1]|`` as n grows;
* the degree study fixes one parameter set, samples many graphs, and
  relates the mean ``|theta_hat_i - theta_i|`` to ``theta_i``.

Every replicate draws from its own stream, keyed by
``(study, n, replicate)`` under the master seed, so results do not depend
on scheduling or thread count.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DcmmError, DegenerateX, InvalidParams, NonPositiveInput
from .estimation import EstimationConfig, align_permutation, estimate_all
from .model import EXPERIMENT_P, build_h, experiment_params, sample_adjacency

STUDY_P = 1
STUDY_THETA = 2
DEFAULT_N_LIST = (200, 300, 400, 500, 750, 1000)


@dataclass(frozen=True)
class ExperimentConfig:
    n_list: tuple = DEFAULT_N_LIST
    replicates: int = 100
    k: int = 2
    p_matrix: tuple = EXPERIMENT_P
    vertex_hunter: str = "svs"
    phi: float | None = None
    l: int | None = None
    master_seed: int = 42
    threads: int = 1

    def __post_init__(self):
        ns = tuple(int(n) for n in self.n_list)
        object.__setattr__(self, "n_list", ns)
        object.__setattr__(self, "p_matrix", tuple(tuple(float(v) for v in row)
                                                   for row in self.p_matrix))
        if not ns or any(b <= a for a, b in zip(ns, ns[1:])):
            raise InvalidParams(f"n_list must be non-empty and strictly increasing: {ns}")
        if self.replicates < 1:
            raise InvalidParams(f"replicates must be >= 1, got {self.replicates}")
        if self.k != 2:
            raise InvalidParams("the simulation recipe has exactly two communities")
        if np.asarray(self.p_matrix).shape != (self.k, self.k):
            raise InvalidParams(f"p_matrix must be {self.k} x {self.k}")
        if self.threads < 1:
            raise InvalidParams(f"threads must be >= 1, got {self.threads}")
        EstimationConfig(vertex_hunter=self.vertex_hunter)  # validates the name

    def estimation(self, seed) -> EstimationConfig:
        return EstimationConfig(vertex_hunter=self.vertex_hunter, phi=self.phi,
                                l=self.l, seed=seed)


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r_squared: float
    points: tuple = ()            # (log x, log y) pairs

    def predict(self, x):
        return np.exp(self.intercept) * np.asarray(x, dtype=float) ** self.slope


def fit_loglog_slope(xs, ys) -> RateFit:
    """Ordinary least squares of ``log y`` on ``log x``."""
    x = np.asarray(xs, dtype=float).ravel()
    y = np.asarray(ys, dtype=float).ravel()
    if x.shape != y.shape:
        raise InvalidParams(f"xs and ys differ in length: {x.size} vs {y.size}")
    if x.size == 0 or not (np.all(x > 0) and np.all(y > 0)):
        raise NonPositiveInput("log-log fit needs strictly positive, finite inputs")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise NonPositiveInput("log-log fit needs strictly positive, finite inputs")
    if np.unique(x).size < 2:
        raise DegenerateX("need at least two distinct x values")
    lx, ly = np.log(x), np.log(y)
    mx, my = lx.mean(), ly.mean()
    sxx = float(((lx - mx) ** 2).sum())
    slope = float(((lx - mx) * (ly - my)).sum()) / sxx
    intercept = float(my - slope * mx)
    resid = ly - (intercept + slope * lx)
    syy = float(((ly - my) ** 2).sum())
    r2 = 1.0 if syy == 0 else 1.0 - float((resid**2).sum()) / syy
    return RateFit(slope=slope, intercept=intercept, r_squared=min(max(r2, 0.0), 1.0),
                   points=tuple(zip(lx.tolist(), ly.tolist())))


def replicate_seeds(master_seed: int, study: int, n: int, rep: int, count: int = 3):
    """Independent child streams for one replicate: parameters, graph, k-means."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(study, n, rep))
    return ss.spawn(count)


def _mean_se(values):
    m = len(values)
    if m == 0:
        return math.nan, math.nan
    mean = math.fsum(values) / m
    if m == 1:
        return mean, math.nan
    var = math.fsum((v - mean) ** 2 for v in values) / (m - 1)
    return mean, math.sqrt(var / m)


def _map(fn, jobs, threads):
    if threads == 1:
        return [fn(*job) for job in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))


# -- P study ------------------------------------------------------------------

def p_error_replicate(cfg: ExperimentConfig, n: int, rep: int) -> float:
    """One draw of (Theta, Pi, X) and the aligned error in the off-diagonal of P."""
    s_params, s_graph, s_km = replicate_seeds(cfg.master_seed, STUDY_P, n, rep)
    truth = experiment_params(n, s_params, cfg.p_matrix)
    x = sample_adjacency(build_h(truth), s_graph)
    est = estimate_all(x, cfg.k, cfg.estimation(s_km))
    aligned, _ = align_permutation(est, truth)
    return float(abs(aligned.p_hat[0, 1] - truth.p[0, 1]))


@dataclass(frozen=True)
class ExperimentPResult:
    fit: RateFit | None
    rows: list                    # experiment1.csv rows
    summary: list                 # experiment1_summary.csv rows
    failures: dict = field(default_factory=dict)   # (n, rep) -> error text


def run_experiment_p(cfg: ExperimentConfig, replicate_fn=None) -> ExperimentPResult:
    """Mean off-diagonal error of P_hat for every n, and its log-log slope.

    ``replicate_fn(cfg, n, rep) -> float`` replaces the default replicate;
    a replicate that raises a package error is recorded as failed and left
    out of the mean.
    """
    fn = replicate_fn or p_error_replicate

    def one(n, rep):
        try:
            return fn(cfg, n, rep), None
        except DcmmError as exc:
            return None, str(exc)

    jobs = [(n, rep) for n in cfg.n_list for rep in range(cfg.replicates)]
    outcomes = _map(one, jobs, cfg.threads)
    rows, failures = [], {}
    per_n = {n: [] for n in cfg.n_list}
    for (n, rep), (err, why) in zip(jobs, outcomes):
        rows.append(dict(n=n, replicate=rep, err_p12=err, failed=why is not None))
        if why is None:
            per_n[n].append(err)
        else:
            failures[(n, rep)] = why
    summary = []
    for n in cfg.n_list:
        mean, se = _mean_se(per_n[n])
        summary.append(dict(n=n, mean_err=mean, se=se,
                            n_failed=cfg.replicates - len(per_n[n])))
    usable = [s for s in summary if s["mean_err"] > 0]
    fit = None
    if len({s["n"] for s in usable}) >= 2:
        fit = fit_loglog_slope([s["n"] for s in usable], [s["mean_err"] for s in usable])
    return ExperimentPResult(fit=fit, rows=rows, summary=summary, failures=failures)


# -- degree study ---------------------------------------------------------------

def theta_error_replicate(cfg: ExperimentConfig, truth, n: int, rep: int) -> np.ndarray:
    """Per-node ``|theta_hat - theta|`` for one graph drawn from ``truth``."""
    s_graph, s_km = replicate_seeds(cfg.master_seed, STUDY_THETA, n, rep + 1, 2)
    x = sample_adjacency(build_h(truth), s_graph)
    est = estimate_all(x, cfg.k, cfg.estimation(s_km))
    aligned, _ = align_permutation(est, truth)
    return np.abs(aligned.theta_hat - truth.theta)


def theta_study_params(cfg: ExperimentConfig, n: int):
    """The single parameter set used for every replicate at size ``n``."""
    ss = np.random.SeedSequence(cfg.master_seed, spawn_key=(STUDY_THETA, n, 0))
    return experiment_params(n, ss, cfg.p_matrix)


@dataclass(frozen=True)
class ExperimentThetaResult:
    n: int
    theta_bar: float
    fit_all: RateFit
    fit_high: RateFit | None
    fit_low: RateFit | None
    rows: list                    # experiment2.csv rows
    n_failed: int = 0
    failures: dict = field(default_factory=dict)


def run_experiment_theta(cfg: ExperimentConfig, n: int, replicate_fn=None) -> ExperimentThetaResult:
    """Average per-node degree error over graphs from one fixed parameter set.

    Fits log error against log theta over all nodes, over nodes above the
    true mean degree, and over the rest. ``replicate_fn(cfg, truth, n, rep)``
    may replace the default replicate.
    """
    fn = replicate_fn or theta_error_replicate
    truth = theta_study_params(cfg, n)

    def one(rep):
        try:
            return np.asarray(fn(cfg, truth, n, rep), dtype=float), None
        except DcmmError as exc:
            return None, str(exc)

    outcomes = _map(one, [(rep,) for rep in range(cfg.replicates)], cfg.threads)
    good = [e for e, why in outcomes if why is None]
    failures = {rep: why for rep, (_, why) in enumerate(outcomes) if why is not None}
    if not good:
        raise InvalidParams(f"every replicate failed at n={n}")
    mean_err = np.stack(good).sum(axis=0) / len(good)
    theta = np.asarray(truth.theta)
    theta_bar = math.fsum(theta.tolist()) / n
    high = theta > theta_bar

    def subset_fit(mask):
        ok = mask & (mean_err > 0)
        if np.unique(theta[ok]).size < 2:
            return None
        return fit_loglog_slope(theta[ok], mean_err[ok])

    rows = [dict(node=i, theta_true=float(theta[i]), theta_bar=theta_bar,
                 mean_abs_err=float(mean_err[i]), is_high_degree=bool(high[i]))
            for i in range(n)]
    return ExperimentThetaResult(
        n=n, theta_bar=theta_bar, fit_all=subset_fit(np.ones(n, bool)),
        fit_high=subset_fit(high), fit_low=subset_fit(~high), rows=rows,
        n_failed=len(failures), failures=failures)


# -- output ---------------------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(row[h]) for h in header])


def fit_rows(experiment: str, fits: dict) -> list:
    return [dict(experiment=experiment, subset=name, slope=f.slope,
                 intercept=f.intercept, r2=f.r_squared)
            for name, f in fits.items() if f is not None]


FITS_HEADER = ("experiment", "subset", "slope", "intercept", "r2")


def write_experiment_p(result: ExperimentPResult, out_dir, svg: bool = False) -> list:
    """Write experiment1.csv, experiment1_summary.csv and fits.csv; return the paths."""
    paths = [os.path.join(out_dir, name) for name in
             ("experiment1.csv", "experiment1_summary.csv", "fits.csv")]
    write_csv(paths[0], ("n", "replicate", "err_p12", "failed"), result.rows)
    write_csv(paths[1], ("n", "mean_err", "se", "n_failed"), result.summary)
    write_csv(paths[2], FITS_HEADER, fit_rows("experiment1", {"all": result.fit}))
    if svg and result.fit is not None:
        paths.append(os.path.join(out_dir, "experiment1.svg"))
        usable = [s for s in result.summary if s["mean_err"] > 0]
        plot_fit([s["n"] for s in usable], [s["mean_err"] for s in usable],
                 {"all": result.fit}, paths[-1], xlabel="log n",
                 ylabel="log mean |P12 error|")
    return paths


def write_experiment_theta(results, out_dir, svg: bool = False) -> list:
    """Write experiment2.csv (one block per n, with an ``n`` column when several
    sizes are given) and fits.csv."""
    results = list(results)
    paths = [os.path.join(out_dir, "experiment2.csv"), os.path.join(out_dir, "fits.csv")]
    header = ("node", "theta_true", "theta_bar", "mean_abs_err", "is_high_degree")
    if len(results) > 1:
        header = ("n",) + header
    rows, fits = [], []
    for res in results:
        rows.extend(dict(r, n=res.n) for r in res.rows)
        fits.extend(fit_rows("experiment2", {f"all_n{res.n}": res.fit_all,
                                             f"high_n{res.n}": res.fit_high,
                                             f"low_n{res.n}": res.fit_low}))
    write_csv(paths[0], header, rows)
    write_csv(paths[1], FITS_HEADER, fits)
    if svg:
        for res in results:
            paths.append(os.path.join(out_dir, f"experiment2_n{res.n}.svg"))
            plot_fit([r["theta_true"] for r in res.rows],
                     [r["mean_abs_err"] for r in res.rows],
                     {"all": res.fit_all, "high": res.fit_high}, paths[-1],
                     xlabel="log theta", ylabel="log mean |theta error|",
                     vline=res.theta_bar)
    return paths


def plot_fit(xs, ys, fits: dict, path, xlabel="", ylabel="", vline=None) -> None:
    """Static log-log scatter with fitted lines; byte-stable across runs."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with matplotlib.rc_context({"svg.hashsalt": "dcmm", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(5, 4))
        lx, ly = np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float))
        ax.scatter(lx, ly, s=8, color="0.3")
        grid = np.linspace(lx.min(), lx.max(), 50)
        for name, f in fits.items():
            if f is not None:
                ax.plot(grid, f.intercept + f.slope * grid, label=f"{name}: slope {f.slope:.2f}")
        if vline is not None:
            ax.axvline(math.log(vline), color="red", linestyle="--", linewidth=1)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        ax.legend(loc="best")
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
