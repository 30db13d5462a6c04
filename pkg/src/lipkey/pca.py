"""Covariance/eigen analysis of 2-D point clouds and point-set reduction.

Scenario 2 ranks the Harris points by how well the first principal axis
reconstructs them and keeps the best fraction, dropping off-axis points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, SizeError
from .image import Point2D


@dataclass(frozen=True)
class Pca2D:
    mean: Point2D
    eigenvectors: np.ndarray  # rows, first = dominant axis
    eigenvalues: np.ndarray   # descending, >= 0


def _as_cloud(points) -> np.ndarray:
    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ParameterError(f"expected an (n, 2) point cloud, got shape {arr.shape}")
    return arr


def covariance2d(points) -> np.ndarray:
    """Sample covariance (n-1 denominator) of a 2-D cloud."""
    cloud = _as_cloud(points)
    n = len(cloud)
    if n < 2:
        raise SizeError(f"covariance needs >= 2 points, got {n}")
    centered = cloud - cloud.mean(axis=0)
    return centered.T @ centered / (n - 1)


def _fix_sign(v: np.ndarray) -> np.ndarray:
    for component in v:
        if component != 0.0:
            return v if component > 0 else -v
    return v


def pca_fit(points) -> Pca2D:
    """Closed-form eigendecomposition of the 2x2 covariance.

    Eigenvectors carry a deterministic sign (first nonzero component
    positive); a zero covariance yields the standard basis.
    """
    cloud = _as_cloud(points)
    cov = covariance2d(cloud)
    mean = cloud.mean(axis=0)
    a, b, c = cov[0, 0], cov[0, 1], cov[1, 1]
    half_gap = math.hypot((a - c) / 2.0, b)
    mid = (a + c) / 2.0
    lam1 = mid + half_gap
    lam2 = mid - half_gap
    if half_gap <= 1e-300:
        vecs = np.eye(2)
    elif abs(b) > 1e-300:
        v1 = np.array([b, lam1 - a])
        v2 = np.array([b, lam2 - a])
        vecs = np.vstack([v1 / np.linalg.norm(v1), v2 / np.linalg.norm(v2)])
    else:
        vecs = np.eye(2) if a >= c else np.eye(2)[::-1]
    vecs = np.vstack([_fix_sign(vecs[0]), _fix_sign(vecs[1])])
    return Pca2D(
        mean=Point2D(float(mean[0]), float(mean[1])),
        eigenvectors=vecs,
        eigenvalues=np.array([max(lam1, 0.0), max(lam2, 0.0)]),
    )


def reduce_points(points, keep_fraction: float = 0.5) -> np.ndarray:
    """Keep the ceil(fraction * n) points best explained by the first
    principal axis, preserving the original order; ties keep earlier points."""
    if not 0.0 < keep_fraction <= 1.0:
        raise ParameterError(f"keep_fraction must lie in (0, 1], got {keep_fraction}")
    cloud = _as_cloud(points)
    if len(cloud) < 2:
        raise SizeError(f"reduction needs >= 2 points, got {len(cloud)}")
    fit = pca_fit(cloud)
    centered = cloud - np.array([fit.mean.x, fit.mean.y])
    residual = centered @ fit.eigenvectors[1]
    errors = residual ** 2
    # rounding noise on exactly-reconstructible points must tie at zero
    spread = np.abs(centered).max()
    errors[errors < (1e-9 * max(spread, 1.0)) ** 2] = 0.0
    keep = math.ceil(keep_fraction * len(cloud))
    ranked = np.lexsort((np.arange(len(cloud)), errors))[:keep]
    ranked.sort()
    return cloud[ranked]
