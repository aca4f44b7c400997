"""Gaussian denoising of 2D slices."""
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import NonPositiveSigma
from .validation import check_image

# numpy's "symmetric" mode repeats the edge pixel (d c b a | a b c d),
# matching scipy.ndimage's "reflect".
PAD_MODE = "symmetric"


@dataclass(frozen=True)
class Kernel2D:
    radius: int
    weights: np.ndarray  # (2r+1, 2r+1), sums to 1


def gaussian_weights_1d(sigma):
    """Sampled, unit-sum 1D Gaussian truncated at ``ceil(3 * sigma)``."""
    if not sigma > 0:
        raise NonPositiveSigma(f"sigma must be > 0, got {sigma}")
    radius = int(math.ceil(3.0 * sigma))
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    w = np.exp(-(offsets**2) / (2.0 * sigma * sigma))
    return w / w.sum()


def gaussian_kernel(sigma):
    """Discrete 2D Gaussian kernel of radius ``ceil(3 * sigma)``.

    The weights are ``exp(-(i^2 + j^2) / (2 sigma^2))`` normalized to sum
    to one. Because the 2D Gaussian factorizes, the kernel is the outer
    product of the normalized 1D kernel with itself.
    """
    g = gaussian_weights_1d(sigma)
    w = np.outer(g, g)
    w /= w.sum()
    w.setflags(write=False)
    return Kernel2D(radius=(len(g) - 1) // 2, weights=w)


def _correlate_axis(arr, w, axis):
    r = (len(w) - 1) // 2
    pad = [(0, 0), (0, 0)]
    pad[axis] = (r, r)
    padded = np.pad(arr, pad, mode=PAD_MODE)
    out = np.zeros_like(arr)
    n = arr.shape[axis]
    for k, wk in enumerate(w):
        if axis == 0:
            out += wk * padded[k : k + n, :]
        else:
            out += wk * padded[:, k : k + n]
    return out


def denoise(img, sigma):
    """Smooth ``img`` with a Gaussian of standard deviation ``sigma``.

    ``sigma == 0`` returns the input unchanged. Borders are reflect-padded,
    and the convolution runs as two 1D passes (rows, then columns).
    """
    img = check_image(img)
    if sigma == 0:
        return img
    if sigma < 0:
        raise NonPositiveSigma(f"sigma must be >= 0, got {sigma}")
    g = gaussian_weights_1d(sigma)
    out = _correlate_axis(_correlate_axis(img, g, 1), g, 0)
    return np.clip(out, 0.0, 1.0)


def convolve2d_direct(img, kernel):
    """Direct (non-separable) 2D correlation with reflect padding.

    Slow reference path, kept for cross-checking :func:`denoise`.
    """
    img = np.asarray(img, dtype=np.float64)
    r = kernel.radius
    padded = np.pad(img, r, mode=PAD_MODE)
    h, w = img.shape
    out = np.zeros_like(img)
    for dy in range(2 * r + 1):
        for dx in range(2 * r + 1):
            out += kernel.weights[dy, dx] * padded[dy : dy + h, dx : dx + w]
    return out
