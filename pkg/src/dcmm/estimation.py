"""Plug-in estimation of the connectivity matrix, degrees and memberships."""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    AllClippedWarning,
    DcmmError,
    KTooLarge,
    NegativeUnderRoot,
    SingularVertexMatrix,
    ValidationError,
    ZeroDenominator,
)
from .spectral import SpectralDecomposition, decompose, score_embedding
from .vertex_hunting import VertexHuntResult, spa_modified, svs

COND_LIMIT = 1e8
MAX_ALIGN_K = 8


@dataclass(frozen=True)
class EstimationConfig:
    vertex_hunter: str = "svs"          # "svs" or "spa"
    phi: float | None = None
    l: int | None = None
    seed: object = 0                    # k-means seed for svs
    normalize_p: bool = False           # rescale p_hat to unit diagonal

    def __post_init__(self):
        if self.vertex_hunter not in ("svs", "spa"):
            raise ValidationError(f"unknown vertex hunter {self.vertex_hunter!r}")


@dataclass(frozen=True)
class EstimationResult:
    p_hat: np.ndarray
    theta_hat: np.ndarray
    pi_hat: np.ndarray
    b1_hat: np.ndarray
    q_hat: np.ndarray
    decomposition: SpectralDecomposition | None = None
    vertex_hunt: VertexHuntResult | None = None
    clipped: tuple = ()


def lift(vertices) -> np.ndarray:
    v = np.asarray(vertices, dtype=float)
    if v.ndim == 1:
        v = v[:, None]
    return np.hstack([np.ones((v.shape[0], 1)), v])


def compute_b1(lam, vertices) -> np.ndarray:
    """``b1(k) = (lambda_1 + v_k' diag(lambda_2..K) v_k)^(-1/2)``."""
    lam = np.asarray(lam, dtype=float)
    v = lift(vertices)[:, 1:]
    rad = lam[0] + (v**2) @ lam[1:]
    for k, val in enumerate(rad):
        if not val > 0:
            raise NegativeUnderRoot(k, float(val))
    return rad ** -0.5


def estimate_memberships(rows, vertices, b1, return_clipped: bool = False):
    """Barycentric weights of each row, reweighted by ``1/b1``, clipped at 0
    and renormalized onto the simplex."""
    q = lift(vertices)
    if np.linalg.cond(q) >= COND_LIMIT:
        raise SingularVertexMatrix(f"vertex matrix condition number {np.linalg.cond(q):.3g}")
    r = lift(rows)
    w = np.linalg.solve(q.T, r.T).T
    star = np.maximum(w / np.asarray(b1, dtype=float), 0.0)
    total = star.sum(axis=1)
    clipped = np.flatnonzero(total <= 0)
    k = q.shape[0]
    if clipped.size:
        warnings.warn(f"{clipped.size} membership rows clipped to zero; set to uniform",
                      AllClippedWarning, stacklevel=2)
        star[clipped] = 1.0
        total[clipped] = k
    pi = star / total[:, None]
    if return_clipped:
        return pi, tuple(int(i) for i in clipped)
    return pi


def estimate_p(b1, q, lam) -> np.ndarray:
    """``diag(b1) Q diag(lam) Q' diag(b1)``."""
    m = np.asarray(b1, dtype=float)[:, None] * np.asarray(q, dtype=float)
    p = (m * np.asarray(lam, dtype=float)) @ m.T
    return (p + p.T) / 2


def estimate_theta(xi1, dhat, pi_hat, b1) -> np.ndarray:
    denom = np.asarray(pi_hat, dtype=float) @ np.asarray(b1, dtype=float)
    bad = np.flatnonzero(denom <= 0)
    if bad.size:
        raise ZeroDenominator(int(bad[0]))
    return np.asarray(xi1, dtype=float) * np.sqrt(np.asarray(dhat, dtype=float)) / denom


def _staged(stage, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except DcmmError as exc:
        if exc.stage is None:
            exc.stage = stage
        raise


def estimate_all(x, k: int, config: EstimationConfig | None = None) -> EstimationResult:
    """Run the whole estimator on an adjacency matrix.

    ``x`` may be an :class:`AdjacencyMatrix` or any symmetric nonnegative
    array; feeding ``H`` itself gives the population (noiseless) run.
    Errors carry the name of the stage that raised them in ``.stage``.
    """
    config = config or EstimationConfig()
    x = np.asarray(getattr(x, "x", x), dtype=float)
    n = x.shape[0]
    if not isinstance(k, (int, np.integer)) or not 2 <= k <= n:
        raise ValidationError(f"need 2 <= k <= n, got k={k}, n={n}")

    dec = _staged("spectral", decompose, x, k)
    emb = _staged("score_embedding", score_embedding, dec)
    if config.vertex_hunter == "spa":
        vh = _staged("vertex_hunting", spa_modified, emb.rows, k, config.phi)
    else:
        vh = _staged("vertex_hunting", svs, emb.rows, k, config.phi, config.l, config.seed)
    b1 = _staged("b1", compute_b1, dec.lam, vh.vertices)
    pi_hat, clipped = _staged("memberships", estimate_memberships, emb.rows,
                              vh.vertices, b1, return_clipped=True)
    q = lift(vh.vertices)
    p_hat = estimate_p(b1, q, dec.lam)
    if config.normalize_p:
        s = 1 / np.sqrt(np.diag(p_hat))
        p_hat = s[:, None] * p_hat * s[None, :]
    theta_hat = _staged("theta", estimate_theta, dec.xi[:, 0], dec.dhat, pi_hat, b1)
    return EstimationResult(p_hat=p_hat, theta_hat=theta_hat, pi_hat=pi_hat,
                            b1_hat=b1, q_hat=q, decomposition=dec, vertex_hunt=vh,
                            clipped=clipped)


@dataclass(frozen=True)
class AlignmentReport:
    permutation: tuple               # estimated community perm[a] matches true a
    p_abs_err: np.ndarray
    theta_abs_err: np.ndarray
    pi_err: float
    costs: dict = field(default_factory=dict)

    @property
    def p_max_err(self) -> float:
        return float(self.p_abs_err.max())

    @property
    def theta_max_err(self) -> float:
        return float(self.theta_abs_err.max())


def align_permutation(est: EstimationResult, truth):
    """Relabel estimated communities to best match ``truth``.

    Searches all K! relabelings for the smallest
    ``||P_hat[perm][:, perm] - P||_F + ||Pi_hat[:, perm] - Pi||_F``;
    ties keep the first permutation in lexicographic order.
    """
    k = est.p_hat.shape[0]
    if k > MAX_ALIGN_K:
        raise KTooLarge(f"exhaustive alignment limited to K <= {MAX_ALIGN_K}, got {k}")
    best, best_cost, costs = None, np.inf, {}
    for perm in itertools.permutations(range(k)):
        idx = list(perm)
        cost = (np.linalg.norm(est.p_hat[np.ix_(idx, idx)] - truth.p)
                + np.linalg.norm(est.pi_hat[:, idx] - truth.pi))
        costs[perm] = float(cost)
        if cost < best_cost:
            best, best_cost = perm, cost
    idx = list(best)
    aligned = replace(est, p_hat=est.p_hat[np.ix_(idx, idx)], pi_hat=est.pi_hat[:, idx],
                      b1_hat=est.b1_hat[idx], q_hat=est.q_hat[idx])
    report = AlignmentReport(
        permutation=best,
        p_abs_err=np.abs(aligned.p_hat - truth.p),
        theta_abs_err=np.abs(aligned.theta_hat - truth.theta),
        pi_err=float(np.linalg.norm(aligned.pi_hat - truth.pi)),
        costs=costs,
    )
    return aligned, report
