"""Two-point minimax constructions for P and Theta, built through (Z, Y).

Every pair shares one null model and perturbs a single row of the factor
``Y`` (or a single degree), so the two edge-probability matrices differ in
exactly one row and column. The checks here are numerical: gap size,
Bernoulli KL divergence, and validity of both models.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import xlogy

from .errors import (
    BlockSizeMismatch,
    ConeViolation,
    DegenerateNull,
    EntryOutOfRange,
    InvalidParams,
    NotInCone,
    ShapeMismatch,
)
from .model import DcmmParams, build_h, reparameterize, validate_params

DEFAULTS = dict(c12=0.05, c13=0.05, c0=0.1, c14=0.1, lambda_k=1.0,
                theta_tilde=0.4, theta_bar=0.4, theta_i=0.4)


@dataclass(frozen=True)
class LowerBoundPair:
    construction: str             # "p", "theta_membership" or "theta_degree"
    null_model: DcmmParams
    alt_model: DcmmParams
    delta_y: float
    gap: float
    kl: float
    constants: dict
    block_sizes: tuple
    target: tuple                 # (a, b) entry of P, or (i,) node index
    theta_bar: float
    null_factors: tuple = ()      # (Z, Y) for the null model
    alt_factors: tuple = ()

    @property
    def n(self) -> int:
        return self.null_model.n

    def factor_h(self):
        """``(Z Z^T)`` for (alt, null); differences are confined to one row/column."""
        za, zm = self.alt_factors[0], self.null_factors[0]
        return np.clip(za @ za.T, 0, 1), np.clip(zm @ zm.T, 0, 1)


def helmert_factor(k: int, spread: float) -> np.ndarray:
    """The K x K factor with constant first column and Helmert contrasts.

    Column ``j >= 2`` holds ``sqrt(spread / (j (j - 1)))`` in rows ``< j``
    and ``-(j - 1)`` times that in row ``j``; the first column is
    ``sqrt(1 - spread (K - 1) / K)`` so every row has unit norm.
    """
    if k < 2:
        raise InvalidParams("lower-bound constructions need K >= 2")
    head = 1 - spread * (k - 1) / k
    if not 0 < head < 1:
        raise InvalidParams(f"spread {spread} leaves no room for a unit-norm factor")
    y = np.zeros((k, k))
    y[:, 0] = math.sqrt(head)
    for j in range(2, k + 1):
        step = math.sqrt(spread / (j * (j - 1)))
        y[: j - 1, j - 1] = step
        y[j - 1, j - 1] = -(j - 1) * step
    return y


def perturb_first_row(y, delta) -> np.ndarray:
    """Shift mass from the first to the second coordinate of row 0, keeping its norm."""
    y = np.array(y, dtype=float)
    a, b = y[0, 0], y[0, 1]
    rad = b**2 + 2 * delta * a - delta**2
    if a - delta <= 0 or rad <= 0:
        raise ConeViolation(f"perturbation {delta} is too large for the factor")
    y[0, 0] = a - delta
    y[0, 1] = math.sqrt(rad)
    return y


def block_sizes(n: int, k: int) -> tuple:
    """Community k (1-based) gets ``2 k n / (K (K + 1))`` nodes, rounded;
    the remainder goes to the last community."""
    unit = 2 * n / (k * (k + 1))
    sizes = [int(round(c * unit)) for c in range(1, k)]
    sizes.append(n - sum(sizes))
    if sizes[0] < 2 or min(sizes) < 1:
        raise BlockSizeMismatch(f"n={n} is too small for K={k} blocks: {sizes}")
    return tuple(sizes)


def _membership(sizes, k):
    n = sum(sizes)
    pi = np.zeros((n, k))
    pi[0, 0] = 1.0
    pi[1:sizes[0], 0] = 0.75
    pi[1:sizes[0], 1] = 0.25
    start = sizes[0]
    for c in range(1, k):
        pi[start:start + sizes[c], c] = 1.0
        start += sizes[c]
    return pi


def _fill_degree(n, theta_bar, special_index, special_value):
    check = (n * theta_bar - special_value) / (n - 1)
    if check <= 0:
        raise InvalidParams("degree budget n * theta_bar is too small")
    theta = np.full(n, check)
    theta[special_index] = special_value
    return theta


def _gram(z):
    return np.clip(z @ z.T, 0.0, 1.0)


def _scale_row(z, i, factor):
    z = z.copy()
    z[i] *= factor
    return z


def _to_params(z, y):
    try:
        return reparameterize(z, y)
    except NotInCone as exc:
        raise ConeViolation(str(exc)) from exc


def _factor_pair(n, k, spread, c0_delta, theta, row0_degree):
    sizes = block_sizes(n, k)
    pi = _membership(sizes, k)
    y_mu = helmert_factor(k, spread)
    p_mu = y_mu @ y_mu.T
    if p_mu.min() < 0.5:
        raise InvalidParams(f"min entry of the null P is {p_mu.min():.3g} < 1/2")
    z_mu = theta[:, None] * (pi @ y_mu)
    y_alpha = perturb_first_row(y_mu, c0_delta)
    z_alpha = z_mu.copy()
    z_alpha[0] = row0_degree * y_alpha[0]
    null = _to_params(z_mu, y_mu)
    alt = _to_params(z_alpha, y_alpha)
    for model in (null, alt):
        if build_h(model).max() > 1:
            raise EntryOutOfRange("constructed H exceeds 1")
    return sizes, (z_mu, y_mu), (z_alpha, y_alpha), null, alt


def build_p_pair(n: int, k: int = 2, c12: float = DEFAULTS["c12"], c0: float = DEFAULTS["c0"],
                 theta_tilde: float = DEFAULTS["theta_tilde"],
                 theta_bar: float = DEFAULTS["theta_bar"],
                 lambda_k: float = DEFAULTS["lambda_k"]) -> LowerBoundPair:
    """Pair for the lower bound on ``P[0, 1]``.

    Node 0 is the only pure node of community 0 and carries degree
    ``theta_tilde``; every other node has the common degree fixing the
    mean at ``theta_bar``. The alternative rotates row 0 of the factor by
    ``delta_y = c0 / sqrt(n theta_bar theta_tilde)``.
    """
    delta = 0.0 if c0 == 0 else c0 / math.sqrt(n * theta_bar * theta_tilde)
    theta = _fill_degree(n, theta_bar, 0, theta_tilde)
    sizes, f_mu, f_alpha, null, alt = _factor_pair(
        n, k, c12 * k * lambda_k, delta, theta, theta_tilde)
    h_alpha, h_mu = _gram(f_alpha[0]), _gram(f_mu[0])
    return LowerBoundPair(
        construction="p", null_model=null, alt_model=alt, delta_y=delta,
        gap=float(abs(alt.p[0, 1] - null.p[0, 1])), kl=kl_divergence(h_alpha, h_mu),
        constants=dict(c0=c0, c12=c12, lambda_k=lambda_k, theta_tilde=theta_tilde),
        block_sizes=sizes, target=(0, 1), theta_bar=theta_bar,
        null_factors=f_mu, alt_factors=f_alpha)


def build_theta_pair_membership(n: int, k: int = 2, c13: float = DEFAULTS["c13"],
                                c0: float = DEFAULTS["c0"],
                                theta_i: float = DEFAULTS["theta_i"],
                                theta_bar: float = DEFAULTS["theta_bar"]) -> LowerBoundPair:
    """Pair for the lower bound on ``theta[1]`` driven by a factor rotation.

    Node 1 (a mixed node of block 0) carries ``theta_i``. Row 0 of the
    factor is rotated by ``delta_y = c0 / sqrt(n theta_bar^2)``; row 1 of
    ``Z`` is untouched, so its degree changes only through the new basis.
    """
    delta = 0.0 if c0 == 0 else c0 / math.sqrt(n * theta_bar**2)
    theta = _fill_degree(n, theta_bar, 1, theta_i)
    sizes, f_mu, f_alpha, null, alt = _factor_pair(
        n, k, c13 * k, delta, theta, theta[0])
    h_alpha, h_mu = _gram(f_alpha[0]), _gram(f_mu[0])
    return LowerBoundPair(
        construction="theta_membership", null_model=null, alt_model=alt, delta_y=delta,
        gap=float(abs(alt.theta[1] - null.theta[1])), kl=kl_divergence(h_alpha, h_mu),
        constants=dict(c0=c0, c13=c13, theta_i=theta_i),
        block_sizes=sizes, target=(1,), theta_bar=theta_bar,
        null_factors=f_mu, alt_factors=f_alpha)


def build_theta_pair_degree(n: int, k: int = 2, c13: float = DEFAULTS["c13"],
                            c14: float = DEFAULTS["c14"],
                            theta_i: float = DEFAULTS["theta_i"],
                            theta_bar: float = DEFAULTS["theta_bar"]) -> LowerBoundPair:
    """Pair for the lower bound on ``theta[1]`` from a direct degree bump.

    ``theta[1]`` becomes ``theta_i (1 + c14 sqrt(theta_i / theta_bar))``;
    memberships and ``P`` are shared.
    """
    theta = _fill_degree(n, theta_bar, 1, theta_i)
    sizes = block_sizes(n, k)
    pi = _membership(sizes, k)
    y = helmert_factor(k, c13 * k)
    if (y @ y.T).min() < 0.5:
        raise InvalidParams("min entry of the null P is below 1/2")
    z = theta[:, None] * (pi @ y)
    null = _to_params(z, y)
    bumped = null.theta.copy()
    bumped[1] = theta_i * (1 + c14 * math.sqrt(theta_i / theta_bar))
    alt = DcmmParams(theta=bumped, pi=null.pi, p=null.p)
    h_mu, h_alpha = build_h(null), build_h(alt)
    if h_alpha.max() > 1:
        raise EntryOutOfRange("perturbed degree pushes H above 1")
    return LowerBoundPair(
        construction="theta_degree", null_model=null, alt_model=alt, delta_y=float("nan"),
        gap=float(abs(alt.theta[1] - null.theta[1])), kl=kl_divergence(h_alpha, h_mu),
        constants=dict(c13=c13, c14=c14, theta_i=theta_i),
        block_sizes=sizes, target=(1,), theta_bar=theta_bar,
        null_factors=(z, y), alt_factors=(_scale_row(z, 1, bumped[1] / theta_i), y))


def kl_divergence(h_alpha, h_mu) -> float:
    """KL(alpha || mu) between independent-Bernoulli graphs, in nats.

    Sums once over unordered pairs ``i <= j`` (diagonal included), with
    ``0 log 0 = 0``; identical entries contribute nothing.
    """
    a = np.asarray(h_alpha, dtype=float)
    m = np.asarray(h_mu, dtype=float)
    if a.shape != m.shape:
        raise ShapeMismatch(f"shapes differ: {a.shape} vs {m.shape}")
    iu = np.triu_indices(a.shape[0]) if a.ndim == 2 else (slice(None),)
    a, m = a[iu], m[iu]
    diff = a != m
    if not diff.any():
        return 0.0
    a, m = a[diff], m[diff]
    if np.any((m <= 0) | (m >= 1)):
        raise DegenerateNull("null probability is 0 or 1 where the models differ")
    terms = xlogy(a, a / m) + xlogy(1 - a, (1 - a) / (1 - m))
    return float(max(math.fsum(terms), 0.0))


@dataclass
class PairReport:
    construction: str
    n: int
    gap: float
    gap_scaled: float
    kl: float
    delta_y: float
    assumptions_ok: bool
    differing_rows: list
    realized_lambda_k: float
    null_report: object = field(repr=False, default=None)
    alt_report: object = field(repr=False, default=None)


def gap_scale(pair: LowerBoundPair) -> float:
    """Rate the gap is expected to match, so ``gap / scale`` is O(1) in n."""
    n, tbar = pair.n, pair.theta_bar
    if pair.construction == "p":
        return 1 / math.sqrt(n * tbar * pair.constants["theta_tilde"])
    ti = pair.constants["theta_i"]
    if pair.construction == "theta_membership":
        return ti / math.sqrt(n * tbar**2)
    return ti * math.sqrt(ti / tbar)


def differing_rows(h_a, h_b) -> list:
    """Smallest-looking set of indices whose rows and columns cover every changed entry.

    A row counts when it changes in two or more places; a lone changed pair
    ``(i, j)`` not covered that way is attributed to ``min(i, j)``.
    """
    d = np.asarray(h_a) != np.asarray(h_b)
    d = d | d.T
    rows = set(np.flatnonzero(d.sum(axis=1) > 1).tolist())
    for i, j in zip(*np.nonzero(np.triu(d))):
        if i not in rows and j not in rows:
            rows.add(int(min(i, j)))
    return sorted(int(i) for i in rows)


def verify_pair(pair: LowerBoundPair) -> PairReport:
    null_rep = validate_params(pair.null_model)
    alt_rep = validate_params(pair.alt_model)

    def usable(rep):
        f = rep.flags
        return all(f[k] for k in ("pi_simplex", "pure_nodes", "p_symmetric", "p_unit_diagonal",
                                  "p_nonsingular", "theta_positive", "h_in_range"))

    h_alpha, h_mu = pair.factor_h()
    lam = null_rep.lambdas
    return PairReport(
        construction=pair.construction, n=pair.n, gap=pair.gap,
        gap_scaled=pair.gap / gap_scale(pair), kl=pair.kl, delta_y=pair.delta_y,
        assumptions_ok=usable(null_rep) and usable(alt_rep),
        differing_rows=differing_rows(h_alpha, h_mu),
        realized_lambda_k=float(lam[-1]) if lam is not None else float("nan"),
        null_report=null_rep, alt_report=alt_rep)
