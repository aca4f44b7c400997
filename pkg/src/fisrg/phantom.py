"""Synthetic lesion slices with exact ground truth.

Three layouts are available: a single disk, two disks joined by a thin
horizontal bridge, and a disk with a dark ring-shaped distractor placed
just below it (mimicking CSF next to a lesion). The distractor can also
be added to the other layouts with ``distractor=True``.
"""
from dataclasses import dataclass, replace

import numpy as np

from .exceptions import ShapeOutOfBounds

SHAPES = ("disk", "two-lobes-with-bridge", "annulus-adjacent-distractor")


@dataclass(frozen=True)
class PhantomSpec:
    width: int = 96
    height: int = 96
    lesion_shape: str = "disk"
    lesion_mean: float = 0.35
    background_mean: float = 0.65
    distractor_mean: float = 0.25
    noise_sigma: float = 0.0
    bridge_width: int = 1
    rng_seed: int = 0
    # geometry; center defaults to the image center
    radius: int = 12
    center: tuple = None
    lobe_gap: int = 6
    distractor: bool = False
    distractor_gap: int = 2
    distractor_radius: int = 4
    distractor_width: int = 3

    def __post_init__(self):
        if self.lesion_shape not in SHAPES:
            raise ValueError(f"lesion_shape must be one of {SHAPES}")
        for name in ("lesion_mean", "background_mean", "distractor_mean"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if self.bridge_width < 0:
            raise ValueError("bridge_width must be >= 0")
        if self.width < 1 or self.height < 1 or self.radius < 1:
            raise ValueError("width, height and radius must be >= 1")

    @property
    def has_distractor(self):
        return self.distractor or self.lesion_shape == "annulus-adjacent-distractor"

    def lesion_center(self):
        if self.center is None:
            return self.width // 2, self.height // 2
        return int(self.center[0]), int(self.center[1])


def _disk(xx, yy, cx, cy, r):
    return (xx - cx) ** 2 + (yy - cy) ** 2 <= r * r


def lesion_layout(spec):
    """Return ``(lesion, distractor, extent)`` for ``spec``.

    ``lesion`` and ``distractor`` are boolean masks on an integer grid
    padded generously around the image so out-of-bounds shapes can be
    detected; ``extent`` is ``(xmin, xmax, ymin, ymax)`` of everything drawn.
    """
    cx, cy = spec.lesion_center()
    r = spec.radius
    pad = 4 * r + 2 * (spec.distractor_gap + spec.distractor_radius
                       + spec.distractor_width) + spec.lobe_gap + 4
    xs = np.arange(-pad, spec.width + pad)
    ys = np.arange(-pad, spec.height + pad)
    xx, yy = np.meshgrid(xs, ys)

    if spec.lesion_shape == "two-lobes-with-bridge":
        half = r + (spec.lobe_gap + 1) // 2
        lesion = _disk(xx, yy, cx - half, cy, r) | _disk(xx, yy, cx + half, cy, r)
        if spec.bridge_width > 0:
            top = cy - spec.bridge_width // 2
            rows = (yy >= top) & (yy < top + spec.bridge_width)
            lesion |= rows & (xx >= cx - half) & (xx <= cx + half)
    else:
        lesion = _disk(xx, yy, cx, cy, r)

    distractor = np.zeros_like(lesion)
    if spec.has_distractor:
        outer = spec.distractor_radius + spec.distractor_width
        dcy = cy + r + spec.distractor_gap + outer + 1
        ring_outer = _disk(xx, yy, cx, dcy, outer)
        ring_inner = _disk(xx, yy, cx, dcy, spec.distractor_radius)
        distractor = ring_outer & ~ring_inner & ~lesion

    drawn = lesion | distractor
    yi, xi = np.nonzero(drawn)
    extent = (xs[xi.min()], xs[xi.max()], ys[yi.min()], ys[yi.max()])
    inner = (slice(pad, pad + spec.height), slice(pad, pad + spec.width))
    return lesion, distractor, extent, inner


def generate_phantom(spec):
    """Render ``spec`` into ``(image, mask)``.

    The image holds the piecewise-constant means plus i.i.d. Gaussian noise
    clipped to [0, 1]; the mask is the exact lesion support. Output is a
    pure function of ``spec``.
    """
    lesion, distractor, extent, inner = lesion_layout(spec)
    xmin, xmax, ymin, ymax = extent
    if xmin < 0 or ymin < 0 or xmax >= spec.width or ymax >= spec.height:
        raise ShapeOutOfBounds(
            f"shape spans x[{xmin}, {xmax}] y[{ymin}, {ymax}] outside "
            f"{spec.width}x{spec.height} image"
        )
    mask = np.ascontiguousarray(lesion[inner])
    dist = distractor[inner]

    img = np.full((spec.height, spec.width), spec.background_mean)
    img[dist] = spec.distractor_mean
    img[mask] = spec.lesion_mean
    if spec.noise_sigma > 0:
        rng = np.random.default_rng(spec.rng_seed)
        img = img + rng.normal(0.0, spec.noise_sigma, size=img.shape)
    img = np.clip(img, 0.0, 1.0)
    return np.ascontiguousarray(img), mask


def random_specs(n, rng_seed=0, shapes=("disk", "two-lobes-with-bridge"), **overrides):
    """Draw ``n`` specs with random lesion size and position.

    ``overrides`` are applied to every spec (for instance ``noise_sigma``
    or ``distractor``). Each spec gets its own derived noise seed.
    """
    rng = np.random.default_rng(rng_seed)
    base = PhantomSpec(**overrides)
    specs = []
    for i in range(n):
        shape = shapes[i % len(shapes)]
        radius = int(rng.integers(8, 15)) if shape == "disk" else int(rng.integers(7, 11))
        spec = replace(base, lesion_shape=shape, radius=radius,
                       rng_seed=int(rng.integers(0, 2**63 - 1)))
        # jitter the center while keeping the whole layout in bounds
        for _ in range(100):
            cx = int(rng.integers(0, spec.width))
            cy = int(rng.integers(0, spec.height))
            candidate = replace(spec, center=(cx, cy))
            _, _, (xmin, xmax, ymin, ymax), _ = lesion_layout(candidate)
            margin = 3
            if (xmin >= margin and ymin >= margin and xmax < spec.width - margin
                    and ymax < spec.height - margin):
                spec = candidate
                break
        specs.append(spec)
    return specs


def phantom_corpus(n, rng_seed=0, **kwargs):
    """List of ``(image, mask)`` pairs for :func:`random_specs`."""
    return [generate_phantom(s) for s in random_specs(n, rng_seed, **kwargs)]
