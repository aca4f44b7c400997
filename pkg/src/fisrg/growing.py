"""Fuzzy-membership seeded region growing.

Each seed grows its own region breadth-first over the 8-connected pixel
graph. A neighbour joins the region when its intensity's Gaussian
membership under the region's current mean and standard deviation reaches
the fuzzy threshold. The region statistics are updated online (Welford)
after every admission. The final segmentation is the union of the
per-seed regions.
"""
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numba import njit

from .exceptions import EmptySeedSet, SeedOutOfBounds
from .validation import check_image

# (dy, dx) in the fixed visiting order N, NE, E, SE, S, SW, W, NW
NEIGHBOR_OFFSETS = (
    (-1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
    (1, 0),
    (1, -1),
    (0, -1),
    (-1, -1),
)
_DY = np.array([d[0] for d in NEIGHBOR_OFFSETS], dtype=np.int64)
_DX = np.array([d[1] for d in NEIGHBOR_OFFSETS], dtype=np.int64)

DEFAULT_SIGMA_FLOOR = 0.005


@dataclass(frozen=True)
class RegionStats:
    """Running count, mean and sum of squared deviations of a region."""

    n: int
    mean: float
    m2: float = 0.0

    @property
    def variance(self):
        """Population variance ``m2 / n``."""
        return self.m2 / self.n

    @property
    def std(self):
        return math.sqrt(self.variance)

    @classmethod
    def from_values(cls, values):
        values = iter(values)
        try:
            first = float(next(values))
        except StopIteration:
            raise ValueError("RegionStats needs at least one value") from None
        stats = cls(1, first, 0.0)
        for x in values:
            stats = update(stats, x)
        return stats


@dataclass(frozen=True)
class GrowParams:
    fuzzy_threshold: float
    sigma_floor: float = DEFAULT_SIGMA_FLOOR
    connectivity: int = 8

    def __post_init__(self):
        if not 0.0 < self.fuzzy_threshold <= 1.0:
            raise ValueError(
                f"fuzzy_threshold must be in (0, 1], got {self.fuzzy_threshold}"
            )
        if not self.sigma_floor > 0.0:
            raise ValueError(f"sigma_floor must be > 0, got {self.sigma_floor}")
        if self.connectivity != 8:
            raise ValueError("only 8-connectivity is supported")


def update(stats, x):
    """Welford single-pass update of ``stats`` with intensity ``x``."""
    x = float(x)
    n = stats.n + 1
    delta = x - stats.mean
    mean = stats.mean + delta / n
    m2 = stats.m2 + delta * (x - mean)
    return RegionStats(n, mean, m2)


def membership(x, stats, sigma_floor=DEFAULT_SIGMA_FLOOR):
    """Peak-normalized Gaussian membership of intensity ``x`` in a region.

    Returns ``exp(-(x - mean)^2 / (2 s^2))`` with ``s = max(std, sigma_floor)``,
    so the value lies in (0, 1] and equals 1 at the region mean.
    """
    s = max(math.sqrt(stats.m2 / stats.n), sigma_floor)
    d = x - stats.mean
    return math.exp(-(d * d) / (2.0 * s * s))


@njit(cache=True, nogil=True)
def _grow_kernel(img, sy, sx, threshold, sigma_floor, region, order, scores):
    h, w = img.shape
    # prior statistics from the seed's clipped 3x3 neighbourhood, row-major
    n = 0
    mean = 0.0
    m2 = 0.0
    for y in range(max(sy - 1, 0), min(sy + 2, h)):
        for x in range(max(sx - 1, 0), min(sx + 2, w)):
            v = img[y, x]
            n += 1
            delta = v - mean
            mean += delta / n
            m2 += delta * (v - mean)

    visited = np.zeros((h, w), dtype=np.bool_)
    queue = np.empty(h * w, dtype=np.int64)
    head = 0
    tail = 0
    visited[sy, sx] = True
    region[sy, sx] = True
    queue[tail] = sy * w + sx
    tail += 1
    n_admitted = 0
    while head < tail:
        p = queue[head]
        head += 1
        py = p // w
        px = p - py * w
        for k in range(8):
            qy = py + _DY[k]
            qx = px + _DX[k]
            if qy < 0 or qy >= h or qx < 0 or qx >= w or visited[qy, qx]:
                continue
            visited[qy, qx] = True
            v = img[qy, qx]
            s = math.sqrt(m2 / n)
            if s < sigma_floor:
                s = sigma_floor
            d = v - mean
            mu = math.exp(-(d * d) / (2.0 * s * s))
            if mu >= threshold:
                region[qy, qx] = True
                n += 1
                delta = v - mean
                mean += delta / n
                m2 += delta * (v - mean)
                order[n_admitted] = qy * w + qx
                scores[n_admitted] = mu
                n_admitted += 1
                queue[tail] = qy * w + qx
                tail += 1
    return n_admitted, n, mean, m2


class GrowTrace(NamedTuple):
    """Admission record of one region growth.

    ``admitted`` lists ``(x, y)`` pixels in admission order (seed excluded),
    ``scores`` the membership each one had when admitted, and ``prior`` and
    ``final`` the region statistics before the first and after the last
    admission.
    """

    admitted: list
    scores: np.ndarray
    prior: RegionStats
    final: RegionStats


def _check_seed(img, seed):
    x, y = int(round(seed[0])), int(round(seed[1]))
    h, w = img.shape
    if not (0 <= x < w and 0 <= y < h):
        raise SeedOutOfBounds(f"seed {seed} outside image of size {w}x{h}")
    return x, y


def grow_region(img, seed, params, *, return_trace=False):
    """Grow one region from ``seed = (x, y)``.

    Parameters
    ----------
    img : ndarray of shape (height, width)
        Intensities in [0, 1].
    seed : tuple of int
        Start pixel as ``(x, y)``.
    params : GrowParams
    return_trace : bool
        Also return a :class:`GrowTrace` describing every admission.

    Returns
    -------
    mask : ndarray of bool
        The grown region; always contains the seed.
    """
    img = check_image(img)
    x, y = _check_seed(img, seed)
    region = np.zeros(img.shape, dtype=bool)
    order = np.empty(img.size, dtype=np.int64)
    scores = np.empty(img.size, dtype=np.float64)
    count, n, mean, m2 = _grow_kernel(
        img,
        y,
        x,
        float(params.fuzzy_threshold),
        float(params.sigma_floor),
        region,
        order,
        scores,
    )
    if not return_trace:
        return region
    h, w = img.shape
    prior_vals = img[max(y - 1, 0) : y + 2, max(x - 1, 0) : x + 2].ravel()
    trace = GrowTrace(
        admitted=[(int(i % w), int(i // w)) for i in order[:count]],
        scores=scores[:count].copy(),
        prior=RegionStats.from_values(prior_vals),
        final=RegionStats(int(n), float(mean), float(m2)),
    )
    return region, trace


def fisrg(img, seeds, params):
    """Union of the regions grown independently from every seed."""
    img = check_image(img)
    seeds = list(seeds)
    if not seeds:
        raise EmptySeedSet("at least one seed is required")
    out = np.zeros(img.shape, dtype=bool)
    for seed in seeds:
        out |= grow_region(img, seed, params)
    return out
