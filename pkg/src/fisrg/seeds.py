"""Automatic seed selection inside a region of interest.

Random ROI pixels are clustered spatially with k-means; each centroid is
rounded to a pixel and kept only if it lies in the ROI, sits in a locally
homogeneous window, and is far enough from the seeds already accepted.
Slots left unfilled are retried with a fresh sample.
"""
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import EmptyRoi, InvalidK, NoValidSeeds
from .validation import check_image, check_mask, check_same_shape


@dataclass(frozen=True)
class SeedCriteria:
    window_radius: int = 2
    max_local_std: float = 0.05
    min_separation: float = 5.0
    sample_count: int = None  # None -> max(50, 10 * k)
    max_attempts: int = 5

    def __post_init__(self):
        if self.window_radius < 1:
            raise ValueError("window_radius must be >= 1")
        if self.min_separation < 0:
            raise ValueError("min_separation must be >= 0")
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        if self.sample_count is not None and self.sample_count < 1:
            raise ValueError("sample_count must be >= 1")

    def samples_for(self, k):
        if self.sample_count is None:
            return max(50, 10 * k)
        if self.sample_count < k:
            raise ValueError(f"sample_count {self.sample_count} < k = {k}")
        return self.sample_count


@dataclass(frozen=True)
class SeedSet:
    """Validated seed pixels ``(x, y)`` and the separation they honour."""

    points: tuple
    min_separation: float = 0.0

    def __iter__(self):
        return iter(self.points)

    def __len__(self):
        return len(self.points)


def _as_rng(rng_seed):
    if isinstance(rng_seed, np.random.Generator):
        return rng_seed
    return np.random.default_rng(rng_seed)


def sample_roi(mask, n, rng_seed):
    """Draw ``n`` ROI pixels uniformly with replacement.

    Returns an ``(n, 2)`` integer array of ``(x, y)`` coordinates.
    ``rng_seed`` may also be a ``numpy.random.Generator``, which is then
    advanced in place.
    """
    mask = check_mask(mask)
    ys, xs = np.nonzero(mask)
    if len(xs) == 0:
        raise EmptyRoi("ROI mask has no true pixels")
    idx = _as_rng(rng_seed).integers(0, len(xs), size=int(n))
    return np.column_stack([xs[idx], ys[idx]]).astype(np.int64)


def _sq_dists(points, centroids):
    diff = points[:, None, :] - centroids[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _kmeans_pp(points, k, rng):
    n = len(points)
    centroids = np.empty((k, points.shape[1]))
    centroids[0] = points[rng.integers(n)]
    closest = np.sum((points - centroids[0]) ** 2, axis=1)
    for j in range(1, k):
        total = closest.sum()
        # D^2 sampling; total > 0 while undrawn distinct points remain
        probs = closest / total
        choice = rng.choice(n, p=probs)
        centroids[j] = points[choice]
        closest = np.minimum(closest, np.sum((points - centroids[j]) ** 2, axis=1))
    return centroids


def kmeans(points, k, max_iter=100, tol=1e-4, rng_seed=0, return_history=False):
    """Lloyd's algorithm on 2D coordinates with k-means++ initialization.

    Parameters
    ----------
    points : array-like of shape (n, 2)
    k : int
        Number of clusters, ``1 <= k <= number of distinct points``.
    max_iter : int
        Upper bound on Lloyd iterations.
    tol : float
        Stop once no centroid moves farther than this.
    rng_seed : int or numpy.random.Generator
        Drives the k-means++ initialization.
    return_history : bool
        Also return the objective (sum of squared distances to the
        assigned centroid) measured after every assignment step.

    Returns
    -------
    centroids : ndarray of shape (k, 2)
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if len(pts) == 0:
        raise InvalidK("no points to cluster")
    n_distinct = len(np.unique(pts, axis=0))
    if k < 1 or k > n_distinct:
        raise InvalidK(f"k={k} must be in [1, {n_distinct}] (distinct points)")
    rng = _as_rng(rng_seed)

    centroids = _kmeans_pp(pts, k, rng)
    history = []
    for _ in range(max_iter):
        d2 = _sq_dists(pts, centroids)
        labels = np.argmin(d2, axis=1)
        point_cost = d2[np.arange(len(pts)), labels]
        history.append(float(point_cost.sum()))

        counts = np.bincount(labels, minlength=k)
        while np.any(counts == 0):
            # re-seed an empty cluster at the worst-served point
            j = int(np.flatnonzero(counts == 0)[0])
            far = int(np.argmax(point_cost))
            labels[far] = j
            point_cost[far] = 0.0
            counts = np.bincount(labels, minlength=k)

        new = np.empty_like(centroids)
        for j in range(k):
            members = pts[labels == j]
            new[j] = members.mean(axis=0)
        shift = np.sqrt(np.max(np.sum((new - centroids) ** 2, axis=1)))
        centroids = new
        if shift < tol:
            break

    if return_history:
        return centroids, history
    return centroids


def round_pixel(c):
    """Round a continuous ``(x, y)`` to the nearest pixel (halves go up)."""
    return int(math.floor(c[0] + 0.5)), int(math.floor(c[1] + 0.5))


def local_std(img, x, y, radius):
    h, w = img.shape
    win = img[max(y - radius, 0) : min(y + radius + 1, h),
              max(x - radius, 0) : min(x + radius + 1, w)]
    return float(np.std(win))


def validate_centroid(img, roi, c, accepted, crit):
    """Check a candidate seed against the ROI, homogeneity and separation rules."""
    x, y = round_pixel(c)
    h, w = roi.shape
    if not (0 <= x < w and 0 <= y < h) or not roi[y, x]:
        return False
    if local_std(img, x, y, crit.window_radius) > crit.max_local_std:
        return False
    for ax, ay in accepted:
        if math.hypot(x - ax, y - ay) < crit.min_separation:
            return False
    return True


def select_seeds(img, roi, k, crit=None, rng_seed=0, max_iter=100, tol=1e-4):
    """Pick up to ``k`` validated seeds inside ``roi``.

    Each attempt samples the ROI, clusters the sample into as many
    centroids as there are unfilled slots, and keeps the centroids that
    validate. A partially filled set is returned as is; ``NoValidSeeds`` is
    raised only when no centroid validates within ``crit.max_attempts``.
    """
    img = check_image(img)
    roi = check_mask(roi, "roi")
    check_same_shape(img, roi, names=("image", "roi"))
    if k < 1:
        raise InvalidK(f"k must be >= 1, got {k}")
    crit = crit or SeedCriteria()
    if not roi.any():
        raise EmptyRoi("ROI mask has no true pixels")
    rng = _as_rng(rng_seed)

    accepted = []
    n_samples = crit.samples_for(k)
    for _ in range(crit.max_attempts):
        need = k - len(accepted)
        if need == 0:
            break
        sample = sample_roi(roi, n_samples, rng)
        n_distinct = len(np.unique(sample, axis=0))
        centroids = kmeans(sample, min(need, n_distinct), max_iter, tol, rng)
        for c in centroids:
            if validate_centroid(img, roi, c, accepted, crit):
                accepted.append(round_pixel(c))
                if len(accepted) == k:
                    break
    if not accepted:
        raise NoValidSeeds(
            f"no centroid passed validation in {crit.max_attempts} attempts"
        )
    return SeedSet(points=tuple(accepted), min_separation=crit.min_separation)
