"""Input validation helpers shared by the pipeline stages and estimators.

Images are 2D ``float64`` arrays of shape ``(height, width)`` with values in
``[0, 1]``; masks are 2D ``bool`` arrays. Points are ``(x, y)`` with ``x``
the column and ``y`` the row.
"""
import numpy as np

from .exceptions import DimensionMismatch


def check_image(img, name="image"):
    """Return ``img`` as a C-contiguous 2D float64 array in [0, 1]."""
    arr = np.ascontiguousarray(img, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2D, got shape {arr.shape}")
    if arr.size == 0:
        raise DimensionMismatch(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError(f"{name} intensities must lie in [0, 1]")
    return arr


def check_mask(mask, name="mask"):
    """Return ``mask`` as a C-contiguous 2D bool array."""
    arr = np.ascontiguousarray(mask)
    if arr.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2D, got shape {arr.shape}")
    return arr.astype(bool, copy=False)


def check_same_shape(*arrays, names=None):
    shapes = {a.shape for a in arrays}
    if len(shapes) > 1:
        label = ", ".join(names) if names else "inputs"
        raise DimensionMismatch(
            f"{label} have mismatched shapes: {[a.shape for a in arrays]}"
        )


def check_odd_size(size, name="size"):
    size = int(size)
    if size < 1 or size % 2 == 0:
        raise ValueError(f"{name} must be an odd integer >= 1, got {size}")
    return size
