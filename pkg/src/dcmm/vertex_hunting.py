"""Simplex vertex recovery from SCORE rows: modified SPA and sketched search."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import EmptyCluster, KMeansDegenerate, OverlapWarning, ValidationError

PHI_FRACTION = 0.1


@dataclass(frozen=True)
class VertexHuntResult:
    vertices: np.ndarray          # (K, K-1)
    clusters: tuple               # K arrays of node indices
    raw_picks: np.ndarray         # (K, K-1) anchors before averaging
    pick_indices: np.ndarray      # row index of each anchor in the hunted point set
    phi: float
    overlap: bool = False

    @property
    def k(self) -> int:
        return self.vertices.shape[0]


def _as_rows(rows):
    r = np.asarray(rows, dtype=float)
    if r.ndim == 1:
        r = r[:, None]
    return r


def default_phi(picks) -> float:
    """A tenth of the smallest distance between anchors; ``inf`` when K = 1."""
    k = picks.shape[0]
    if k < 2:
        return math.inf
    diff = picks[:, None, :] - picks[None, :, :]
    dist = np.sqrt((diff**2).sum(-1))
    return PHI_FRACTION * float(dist[np.triu_indices(k, 1)].min())


def successive_projection(points, k: int) -> np.ndarray:
    """Indices chosen by greedy max-norm selection with orthogonal deflation.

    Ties in the norm go to the lowest index (``np.argmax`` semantics).
    """
    z = np.array(points, dtype=float)
    picks = np.empty(k, dtype=int)
    for step in range(k):
        norms = np.einsum("ij,ij->i", z, z)
        i = int(np.argmax(norms))
        picks[step] = i
        u = z[i].copy()
        uu = u @ u
        if uu == 0:
            raise ValidationError(f"points span fewer than {k} directions")
        z -= np.outer(z @ u, u) / uu
    return picks


def _balls(rows, centers, phi):
    d = np.sqrt(((rows[:, None, :] - centers[None, :, :]) ** 2).sum(-1))
    members = d <= phi
    clusters = tuple(np.flatnonzero(members[:, j]) for j in range(centers.shape[0]))
    for j, c in enumerate(clusters):
        if c.size == 0:
            raise EmptyCluster(j)
    overlap = bool((members.sum(axis=1) > 1).any())
    if overlap:
        warnings.warn(f"vertex clusters intersect at phi={phi:.4g}", OverlapWarning,
                      stacklevel=3)
    vertices = np.stack([rows[c].mean(axis=0) for c in clusters])
    return clusters, vertices, overlap


def spa_modified(rows, k: int, phi: float | None = None) -> VertexHuntResult:
    """Successive projection on lifted rows ``[1, r_i]``, then phi-ball averaging."""
    r = _as_rows(rows)
    n = r.shape[0]
    if not 1 <= k <= n:
        raise ValidationError(f"need 1 <= k <= n, got k={k}, n={n}")
    if phi is not None and not phi > 0:
        raise ValidationError(f"phi must be positive, got {phi}")
    lifted = np.hstack([np.ones((n, 1)), r])
    idx = successive_projection(lifted, k)
    picks = r[idx]
    if phi is None:
        phi = default_phi(picks)
    clusters, vertices, overlap = _balls(r, picks, phi)
    return VertexHuntResult(vertices=vertices, clusters=clusters, raw_picks=picks,
                            pick_indices=idx, phi=float(phi), overlap=overlap)


def _kmeans_pp(x, n_clusters, rng):
    n = x.shape[0]
    centers = np.empty((n_clusters, x.shape[1]))
    centers[0] = x[rng.integers(n)]
    d2 = ((x - centers[0]) ** 2).sum(1)
    for j in range(1, n_clusters):
        total = d2.sum()
        if total > 0:
            i = rng.choice(n, p=d2 / total)
        else:
            i = rng.integers(n)
        centers[j] = x[i]
        d2 = np.minimum(d2, ((x - centers[j]) ** 2).sum(1))
    return centers


def kmeans(x, n_clusters: int, seed=0, max_iter: int = 300, tol: float = 1e-6):
    """Lloyd iterations from a k-means++ start.

    Stops when the relative change in inertia drops below ``tol``. An empty
    cluster is re-seeded with the point farthest from its current center.
    Returns ``(centers, labels, inertia)``.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    if not 1 <= n_clusters <= n:
        raise ValidationError(f"need 1 <= n_clusters <= n, got {n_clusters}, n={n}")
    rng = np.random.default_rng(seed)
    centers = _kmeans_pp(x, n_clusters, rng)
    prev = math.inf
    for _ in range(max_iter):
        d2 = ((x[:, None, :] - centers[None, :, :]) ** 2).sum(-1)
        labels = np.argmin(d2, axis=1)
        own = d2[np.arange(n), labels]
        counts = np.bincount(labels, minlength=n_clusters)
        while (counts == 0).any():
            j = int(np.flatnonzero(counts == 0)[0])
            movable = np.where(counts[labels] > 1, own, -1.0)
            far = int(np.argmax(movable))
            labels[far] = j
            own[far] = 0.0
            counts = np.bincount(labels, minlength=n_clusters)
        sums = np.zeros_like(centers)
        np.add.at(sums, labels, x)
        centers = sums / counts[:, None]
        inertia = float(((x - centers[labels]) ** 2).sum())
        if abs(prev - inertia) <= tol * max(prev, 0.0) or inertia == 0.0:
            break
        prev = inertia
    return centers, labels, inertia


def default_l(n: int, k: int) -> int:
    return min(n, max(10 * k, math.ceil(math.sqrt(n))))


def svs(rows, k: int, phi: float | None = None, l: int | None = None, seed=0) -> VertexHuntResult:
    """Sketched vertex search: k-means denoising, SPA on the centers, then
    phi-balls around the resulting vertices over the original rows."""
    r = _as_rows(rows)
    n = r.shape[0]
    if l is None:
        l = default_l(n, k)
    if l < k or l > n:
        raise ValidationError(f"need k <= l <= n, got k={k}, l={l}, n={n}")
    lifted = np.hstack([np.ones((n, 1)), r])
    centers, _, _ = kmeans(lifted, l, seed=seed)
    centers = centers[:, 1:]
    if np.unique(centers, axis=0).shape[0] < k:
        raise KMeansDegenerate(f"k-means produced fewer than {k} distinct centers")
    on_centers = spa_modified(centers, k, phi)
    clusters, vertices, overlap = _balls(r, on_centers.vertices, on_centers.phi)
    return VertexHuntResult(vertices=vertices, clusters=clusters,
                            raw_picks=on_centers.raw_picks,
                            pick_indices=on_centers.pick_indices,
                            phi=on_centers.phi, overlap=overlap)
