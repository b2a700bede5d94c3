"""Regularized degrees, the regularized Laplacian, and SCORE row ratios."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (
    DegenerateGapWarning,
    EigenFailure,
    FirstEigvecNearZero,
    NonPositiveDegree,
    ValidationError,
)

GAP_TOL = 1e-10
DIV_GUARD = 1e-12


def degree_matrix(x) -> np.ndarray:
    """Row sums plus the mean row sum: ``(e_i + 1/n) X 1``."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    if x.ndim != 2 or x.shape != (n, n):
        raise ValidationError(f"expected a square matrix, got {x.shape}")
    if np.any(x < 0):
        raise ValidationError("matrix has negative entries")
    d = x.sum(axis=1) + x.sum() / n
    bad = np.flatnonzero(d <= 0)
    if bad.size:
        raise NonPositiveDegree(f"regularized degree is 0 at node {int(bad[0])}")
    return d


def laplacian(x, d) -> np.ndarray:
    """``D^{-1/2} X D^{-1/2}``."""
    x = np.asarray(x, dtype=float)
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise NonPositiveDegree("degrees must be strictly positive")
    return x / np.sqrt(np.outer(d, d))


def _fix_sign(v):
    s = v.sum()
    if abs(s) > 1e-12 * math.sqrt(v.shape[0]) * max(np.abs(v).max(), 1e-300):
        return v if s > 0 else -v
    j = int(np.argmax(np.abs(v)))
    return v if v[j] >= 0 else -v


@dataclass(frozen=True)
class SpectralDecomposition:
    """Top-K eigenpairs of a symmetric matrix, ordered by ``|lambda|``.

    Every eigenvector has a nonnegative sum (the leading one is the Perron
    direction); when a sum is numerically zero its largest-magnitude entry
    is made nonnegative instead.
    """

    lam: np.ndarray
    xi: np.ndarray
    dhat: np.ndarray | None = None
    degenerate_gap: bool = False

    @property
    def k(self) -> int:
        return self.lam.shape[0]

    @property
    def nu_n_hat(self) -> float:
        a = np.abs(self.lam)
        return float(min(a[0] / math.sqrt(self.k), a[-1]))

    def lam_minus(self, j: int) -> np.ndarray:
        return np.delete(self.lam, j)

    def xi_minus(self, j: int) -> np.ndarray:
        return np.delete(self.xi, j, axis=1)


def top_k_eigen(l, k: int) -> SpectralDecomposition:
    l = np.asarray(l, dtype=float)
    n = l.shape[0]
    if not 1 <= k <= n:
        raise ValidationError(f"need 1 <= k <= n, got k={k}, n={n}")
    if not np.all(np.isfinite(l)):
        raise EigenFailure("matrix has non-finite entries")
    try:
        w, v = scipy.linalg.eigh(l)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigenFailure(str(exc)) from exc
    order = np.argsort(-np.abs(w), kind="stable")
    w, v = w[order], v[:, order]
    degenerate = k < n and abs(w[k - 1]) - abs(w[k]) < GAP_TOL
    if degenerate:
        warnings.warn(
            f"|lambda_{k}| - |lambda_{k + 1}| = {abs(w[k - 1]) - abs(w[k]):.3g}",
            DegenerateGapWarning, stacklevel=2)
    xi = np.column_stack([_fix_sign(v[:, j]) for j in range(k)])
    return SpectralDecomposition(lam=w[:k].copy(), xi=xi, degenerate_gap=degenerate)


def decompose(x, k: int) -> SpectralDecomposition:
    """Degrees, Laplacian and its top-k eigenpairs in one call."""
    d = degree_matrix(x)
    dec = top_k_eigen(laplacian(x, d), k)
    return SpectralDecomposition(lam=dec.lam, xi=dec.xi, dhat=d,
                                 degenerate_gap=dec.degenerate_gap)


@dataclass(frozen=True)
class ScoreEmbedding:
    rows: np.ndarray


def score_embedding(dec: SpectralDecomposition) -> ScoreEmbedding:
    """Divide eigenvectors 2..K entrywise by the leading one."""
    if dec.k < 2:
        raise ValidationError("SCORE embedding needs K >= 2")
    xi1 = dec.xi[:, 0]
    eps = DIV_GUARD * np.abs(xi1).max()
    bad = np.flatnonzero(np.abs(xi1) <= eps)
    if bad.size:
        raise FirstEigvecNearZero(int(bad[0]))
    return ScoreEmbedding(rows=dec.xi[:, 1:] / xi1[:, None])
