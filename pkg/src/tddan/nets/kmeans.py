"""Seeded k-means with k-means++ initialization and restarts."""

from __future__ import annotations

import numpy as np

from ..errors import InvalidArgument


def _sq_dist(points, centers):
    d = (points * points).sum(1)[:, None] - 2.0 * points @ centers.T + (centers * centers).sum(1)[None, :]
    return np.maximum(d, 0.0)


def kmeans_pp_init(points, k, rng):
    n = points.shape[0]
    centers = [points[rng.integers(n)]]
    closest = _sq_dist(points, centers[0][None]).ravel()
    for _ in range(1, k):
        total = closest.sum()
        idx = rng.integers(n) if total <= 0 else rng.choice(n, p=closest / total)
        centers.append(points[idx])
        closest = np.minimum(closest, _sq_dist(points, points[idx][None]).ravel())
    return np.array(centers)


def lloyd(points, centers, max_iter=100, tol=1e-6):
    for _ in range(max_iter):
        labels = _sq_dist(points, centers).argmin(1)
        new = centers.copy()
        for j in range(centers.shape[0]):
            members = points[labels == j]
            if len(members):
                new[j] = members.mean(0)
        shift = np.sqrt(((new - centers) ** 2).sum(1)).max()
        centers = new
        if shift <= tol:
            break
    dist = _sq_dist(points, centers)
    labels = dist.argmin(1)
    return centers, labels, float(dist[np.arange(len(points)), labels].sum())


def kmeans(points, k, seed=0, n_init=10, max_iter=100, tol=1e-6):
    """Return ``(centers, labels, inertia)`` of the best of ``n_init`` seeded runs."""
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2:
        raise InvalidArgument("points must be (N, D)")
    if k < 1 or points.shape[0] < k:
        raise InvalidArgument(f"need at least {k} points, got {points.shape[0]}")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(n_init):
        result = lloyd(points, kmeans_pp_init(points, k, rng), max_iter, tol)
        if best is None or result[2] < best[2]:
            best = result
    return best
