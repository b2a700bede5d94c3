"""DCMM parameter sets: construction, validation, sampling and the (Z, Y) map.

A model is ``(theta, pi, p)`` with edge probabilities
``H = diag(theta) @ pi @ p @ pi.T @ diag(theta)`` and an undirected graph
with self-loops drawn entrywise from ``Bernoulli(H)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    EntryOutOfRange,
    IndivisibleN,
    InvalidAdjacency,
    InvalidParams,
    NotInCone,
    ShapeMismatch,
    ZeroRow,
)

ROW_SUM_TOL = 1e-12
SYM_TOL = 1e-12
SINGULAR_TOL = 1e-10
CONE_TOL = 1e-10

EXPERIMENT_P = ((1.0, 0.5), (0.5, 1.0))


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class DcmmParams:
    """Ground-truth model. Only shapes are checked on construction.

    The remaining invariants (simplex rows, unit-diagonal nonsingular ``p``,
    pure nodes, ``H`` in ``[0, 1]``) are checked by :meth:`check` or
    reported by :func:`validate_params`, so invalid sets can still be
    inspected.
    """

    theta: np.ndarray
    pi: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        theta = _frozen(self.theta)
        pi = _frozen(self.pi)
        p = _frozen(self.p)
        if theta.ndim != 1:
            raise ShapeMismatch(f"theta must be 1-d, got shape {theta.shape}")
        n = theta.shape[0]
        if pi.ndim != 2 or pi.shape[0] != n:
            raise ShapeMismatch(f"pi must be ({n}, K), got {pi.shape}")
        k = pi.shape[1]
        if p.shape != (k, k):
            raise ShapeMismatch(f"p must be ({k}, {k}), got {p.shape}")
        if n < 1 or k < 1:
            raise ShapeMismatch("need n >= 1 and K >= 1")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "p", p)

    @property
    def n(self) -> int:
        return self.theta.shape[0]

    @property
    def k(self) -> int:
        return self.pi.shape[1]

    @property
    def theta_bar(self) -> float:
        return float(np.mean(self.theta))

    def check(self):
        """Raise ``InvalidParams`` if any invariant fails."""
        report = validate_params(self, spectral=False)
        if not report.ok:
            raise InvalidParams("; ".join(report.failures()))
        return self


@dataclass(frozen=True)
class AdjacencyMatrix:
    """Symmetric 0/1 matrix; self-loops allowed."""

    x: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x)
        if x.ndim != 2 or x.shape[0] != x.shape[1]:
            raise InvalidAdjacency(f"adjacency must be square, got {x.shape}")
        if not np.all((x == 0) | (x == 1)):
            raise InvalidAdjacency("adjacency entries must be exactly 0 or 1")
        if not np.array_equal(x, x.T):
            raise InvalidAdjacency("adjacency must be symmetric")
        object.__setattr__(self, "x", _frozen(x, dtype=np.int8))

    @property
    def n(self) -> int:
        return self.x.shape[0]

    def as_float(self) -> np.ndarray:
        return self.x.astype(float)


def _h_unchecked(theta, pi, p):
    m = theta[:, None] * pi
    h = m @ p @ m.T
    return (h + h.T) / 2


def build_h(params: DcmmParams) -> np.ndarray:
    """Edge-probability matrix ``Theta Pi P Pi^T Theta``."""
    h = _h_unchecked(params.theta, params.pi, params.p)
    lo, hi = h.min(), h.max()
    if lo < -1e-14 or hi > 1 + 1e-14:
        raise EntryOutOfRange(f"H entries span [{lo:.6g}, {hi:.6g}], outside [0, 1]")
    return np.clip(h, 0.0, 1.0)


def sample_adjacency(h, seed) -> AdjacencyMatrix:
    """Draw the upper triangle (with diagonal) independently and mirror it.

    ``seed`` is anything ``np.random.default_rng`` accepts.
    """
    h = np.asarray(h, dtype=float)
    n = h.shape[0]
    rng = np.random.default_rng(seed)
    u = rng.random((n, n))
    upper = np.triu(u < h).astype(np.int8)
    x = upper + np.triu(upper, 1).T
    return AdjacencyMatrix(x)


@dataclass
class ValidationReport:
    """Pass/fail flags for checkable clauses, ratios for asymptotic ones.

    Community indices in ``missing_pure`` are 0-based.
    """

    n: int
    k: int
    flags: dict = field(default_factory=dict)
    bad_pi_rows: list = field(default_factory=list)
    missing_pure: list = field(default_factory=list)
    bad_theta: list = field(default_factory=list)
    p_min_singular_value: float = float("nan")
    lambdas: np.ndarray | None = None
    nu_n: float = float("nan")
    ratios: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(self.flags.values())

    @property
    def simplex_ok(self) -> bool:
        return self.flags.get("pi_simplex", False)

    @property
    def pure_nodes_ok(self) -> bool:
        return self.flags.get("pure_nodes", False)

    def failures(self):
        out = [name for name, passed in self.flags.items() if not passed]
        if self.missing_pure:
            out.append(f"no pure node in communities {self.missing_pure}")
        return out


def nu_n(lambdas, k) -> float:
    lam = np.abs(np.asarray(lambdas, dtype=float))
    return float(min(lam[0] / math.sqrt(k), lam[k - 1]))


def validate_params(params: DcmmParams, spectral: bool = True) -> ValidationReport:
    """Check every finite-n assumption clause and report the asymptotic ratios."""
    # deferred import: spectral does not depend on this module
    from .spectral import degree_matrix, laplacian

    theta, pi, p = params.theta, params.pi, params.p
    n, k = params.n, params.k
    rep = ValidationReport(n=n, k=k)

    row_sums = pi.sum(axis=1)
    bad = (np.abs(row_sums - 1) > ROW_SUM_TOL) | (pi.min(axis=1) < 0)
    rep.bad_pi_rows = np.flatnonzero(bad).tolist()
    rep.flags["pi_simplex"] = not rep.bad_pi_rows

    rep.flags["p_symmetric"] = bool(np.max(np.abs(p - p.T)) <= SYM_TOL)
    rep.flags["p_unit_diagonal"] = bool(np.all(np.diag(p) == 1.0))
    smin = float(np.linalg.svd(p, compute_uv=False).min())
    rep.p_min_singular_value = smin
    rep.flags["p_nonsingular"] = smin > SINGULAR_TOL
    rep.flags["p_nonnegative"] = bool(np.all(p >= 0))

    pure = np.abs(pi - 1.0) <= ROW_SUM_TOL
    rep.missing_pure = [c for c in range(k) if not pure[:, c].any()]
    rep.flags["pure_nodes"] = not rep.missing_pure

    rep.bad_theta = np.flatnonzero(theta <= 0).tolist()
    rep.flags["theta_positive"] = not rep.bad_theta

    h = _h_unchecked(theta, pi, p)
    rep.flags["h_in_range"] = bool(h.min() >= -1e-14 and h.max() <= 1 + 1e-14)

    tbar = float(theta.mean())
    log_ratio = math.sqrt(math.log(n) / n) if n > 1 else float("nan")
    rep.ratios["theta_min"] = float(theta.min())
    rep.ratios["theta_max"] = float(theta.max())
    rep.ratios["theta_min_over_sqrt_logn_n"] = float(theta.min()) / log_ratio if n > 1 else float("nan")
    rep.ratios["p_max"] = float(p.max())
    norm1 = float(np.abs(theta).sum())
    if norm1 > 0:
        rep.ratios["community_mass_balance"] = float((theta @ pi).min() / norm1)
    if tbar > 0:
        best = [theta[pure[:, c]].max() / tbar for c in range(k) if pure[:, c].any()]
        rep.ratios["high_degree_pure_over_theta_bar"] = float(min(best)) if best else float("nan")

    sq = float(theta @ theta)
    if sq > 0:
        f = k / sq * (pi.T * theta**2) @ pi
        rep.ratios["f_norm"] = float(np.linalg.norm(f, 2))
        rep.ratios["f_inv_norm"] = _inv_norm(f)

    if not spectral or not (rep.flags["theta_positive"] and rep.flags["h_in_range"]):
        return rep

    try:
        d0 = degree_matrix(h)
    except ArithmeticError:
        return rep
    g = k * (pi.T * (theta**2 / d0)) @ pi
    rep.ratios["g_norm"] = float(np.linalg.norm(g, 2))
    rep.ratios["g_inv_norm"] = _inv_norm(g)

    pg = np.linalg.eigvals(p @ g)
    order = np.argsort(-np.abs(pg), kind="stable")
    pg = pg[order].real
    if k > 1 and pg[0] != 0:
        rep.ratios["pg_eig_ratio"] = float(np.max(pg[1:]) / pg[0])
    w, vecs = np.linalg.eig(p @ g)
    eta = vecs[:, np.argmax(np.abs(w))].real
    eta = eta * np.sign(eta.sum() or 1.0)
    if np.max(eta) > 0:
        rep.ratios["eta1_min_over_max"] = float(eta.min() / eta.max())

    l0 = laplacian(h, d0)
    lam = np.linalg.eigvalsh(l0)
    lam = lam[np.argsort(-np.abs(lam), kind="stable")][:k]
    rep.lambdas = lam
    rep.nu_n = nu_n(lam, k)
    if k > 1:
        gaps = [max(abs(lam[a] - lam[b]) for b in range(k) if b != a) / abs(lam[a])
                for a in range(k) if lam[a] != 0]
        rep.ratios["eigengap_ratio"] = float(min(gaps)) if gaps else float("nan")
    if tbar > 0 and n > 1:
        rep.ratios["lambda_k_over_noise"] = float(
            abs(lam[-1]) / math.sqrt(math.log(n) / (n * tbar**2)))
    return rep


def _inv_norm(m):
    s = np.linalg.svd(m, compute_uv=False)
    return float("inf") if s.min() == 0 else float(1 / s.min())


def reparameterize(z, y) -> DcmmParams:
    """Map a factor pair ``(z, y)`` back to ``(theta, pi, p)``.

    Each row ``z_i`` is written as ``c_i @ y`` with ``c_i >= 0``; then
    ``theta_i = sum(c_i)``, ``pi_i = c_i / theta_i`` and ``p = y @ y.T``.
    """
    z = np.asarray(z, dtype=float)
    y = np.asarray(y, dtype=float)
    k = y.shape[0]
    if y.shape != (k, k) or z.ndim != 2 or z.shape[1] != k:
        raise ShapeMismatch(f"z {z.shape} and y {y.shape} are incompatible")
    if np.linalg.svd(y, compute_uv=False).min() <= SINGULAR_TOL:
        raise InvalidParams("y is singular")
    p = y @ y.T
    if np.max(np.abs(np.diag(p) - 1)) > CONE_TOL:
        raise InvalidParams("y @ y.T must have unit diagonal")
    c = np.linalg.solve(y.T, z.T).T
    neg = np.flatnonzero(c.min(axis=1) < -CONE_TOL)
    if neg.size:
        i = int(neg[0])
        raise NotInCone(f"row {i} of z lies outside the cone of y (coefficients {c[i]})")
    c = np.clip(c, 0.0, None)
    theta = c.sum(axis=1)
    zero = np.flatnonzero(theta <= 0)
    if zero.size:
        raise ZeroRow(f"row {int(zero[0])} of z is zero")
    pi = c / theta[:, None]
    # exact 1.0 on the diagonal, exact symmetry
    p = (p + p.T) / 2
    np.fill_diagonal(p, 1.0)
    return DcmmParams(theta=theta, pi=pi, p=p)


def generate_experiment_pair(n: int, seed):
    """Draw ``(theta, pi)`` for the two-community simulation recipe.

    theta_i ~ U[0.05, 0.8]; the first 10% of nodes are pure in community 0,
    the next 10% pure in community 1, the rest ``[t, 1 - t]`` with
    t ~ U[0.15, 0.85].
    """
    if n <= 0 or n % 10:
        raise IndivisibleN(f"n must be a positive multiple of 10, got {n}")
    rng = np.random.default_rng(seed)
    theta = rng.uniform(0.05, 0.8, size=n)
    m = n // 10
    t = rng.uniform(0.15, 0.85, size=n - 2 * m)
    pi = np.empty((n, 2))
    pi[:m] = (1.0, 0.0)
    pi[m:2 * m] = (0.0, 1.0)
    pi[2 * m:, 0] = t
    pi[2 * m:, 1] = 1.0 - t
    return theta, pi


def experiment_params(n: int, seed, p=EXPERIMENT_P) -> DcmmParams:
    theta, pi = generate_experiment_pair(n, seed)
    return DcmmParams(theta=theta, pi=pi, p=np.asarray(p, dtype=float))
