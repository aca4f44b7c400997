"""Binary dilation/erosion and the asymmetric closing used as postprocessing.

Pixels outside the image count as background for both operations, so
erosion eats into masks touching the border.
"""
from dataclasses import dataclass

import numpy as np

from .exceptions import KernelOrderViolation
from .validation import check_mask, check_odd_size

SHAPES = ("square", "disk")


@dataclass(frozen=True)
class StructuringElement:
    shape: str = "square"
    size: int = 3

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ValueError(f"shape must be one of {SHAPES}, got {self.shape!r}")
        check_odd_size(self.size, "size")

    @property
    def radius(self):
        return (self.size - 1) // 2

    def footprint(self):
        r = self.radius
        if self.shape == "square":
            return np.ones((self.size, self.size), dtype=bool)
        yy, xx = np.mgrid[-r : r + 1, -r : r + 1]
        return xx * xx + yy * yy <= r * r

    def offsets(self):
        r = self.radius
        fp = self.footprint()
        return [(dy - r, dx - r) for dy, dx in zip(*np.nonzero(fp))]


def _shifted(padded, dy, dx, r, shape):
    h, w = shape
    return padded[r + dy : r + dy + h, r + dx : r + dx + w]


def dilate(m, se):
    """Minkowski dilation of ``m`` by ``se``."""
    m = check_mask(m)
    r = se.radius
    padded = np.pad(m, r, constant_values=False)
    out = np.zeros_like(m)
    # footprints are point-symmetric, so no reflection of offsets is needed
    for dy, dx in se.offsets():
        out |= _shifted(padded, dy, dx, r, m.shape)
    return out


def erode(m, se):
    """Minkowski erosion of ``m`` by ``se``; out-of-bounds counts as false."""
    m = check_mask(m)
    r = se.radius
    padded = np.pad(m, r, constant_values=False)
    out = np.ones_like(m)
    for dy, dx in se.offsets():
        out &= _shifted(padded, dy, dx, r, m.shape)
    return out


def postprocess(m, dilate_size=5, erode_size=3, shape="square"):
    """Dilate with the larger element, then erode with the smaller one."""
    if dilate_size < erode_size:
        raise KernelOrderViolation(
            f"dilate_size {dilate_size} must be >= erode_size {erode_size}"
        )
    grown = dilate(m, StructuringElement(shape, dilate_size))
    return erode(grown, StructuringElement(shape, erode_size))
