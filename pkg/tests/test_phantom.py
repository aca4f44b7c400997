from dataclasses import replace

import numpy as np
import pytest
from scipy import ndimage

from fisrg.exceptions import ShapeOutOfBounds
from fisrg.phantom import PhantomSpec, generate_phantom, phantom_corpus, random_specs

EIGHT = np.ones((3, 3), dtype=int)


def lattice_disk(h, w, cx, cy, r):
    out = np.zeros((h, w), bool)
    for y in range(h):
        for x in range(w):
            if (x - cx) ** 2 + (y - cy) ** 2 <= r * r:
                out[y, x] = True
    return out


def test_noiseless_disk():
    spec = PhantomSpec(width=40, height=30, radius=7, center=(18, 14))
    img, mask = generate_phantom(spec)
    assert set(np.unique(img)) == {spec.lesion_mean, spec.background_mean}
    np.testing.assert_array_equal(mask, lattice_disk(30, 40, 18, 14, 7))
    np.testing.assert_array_equal(img == spec.lesion_mean, mask)


def test_area_is_exact():
    for r in (1, 4, 9, 13):
        spec = PhantomSpec(width=40, height=40, radius=r)
        _, mask = generate_phantom(spec)
        assert mask.sum() == lattice_disk(40, 40, 20, 20, r).sum()


def test_deterministic():
    spec = PhantomSpec(noise_sigma=0.05, rng_seed=123, lesion_shape="two-lobes-with-bridge")
    a = generate_phantom(spec)
    b = generate_phantom(spec)
    assert a[0].tobytes() == b[0].tobytes() and a[1].tobytes() == b[1].tobytes()
    c = generate_phantom(replace(spec, rng_seed=124))
    assert not np.array_equal(a[0], c[0])


def test_two_lobes_bridge_connectivity():
    spec = PhantomSpec(lesion_shape="two-lobes-with-bridge", radius=8, bridge_width=1)
    _, mask = generate_phantom(spec)
    _, n = ndimage.label(mask, structure=EIGHT)
    assert n == 1
    _, mask0 = generate_phantom(replace(spec, bridge_width=0))
    _, n0 = ndimage.label(mask0, structure=EIGHT)
    assert n0 == 2
    # the bridge is one pixel thick between the lobes
    cx, cy = spec.lesion_center()
    assert mask[cy, cx] and not mask[cy - 1, cx] and not mask[cy + 1, cx]


def test_two_lobes_area():
    spec = PhantomSpec(lesion_shape="two-lobes-with-bridge", radius=6, lobe_gap=6,
                       bridge_width=3, width=60, height=40)
    _, mask = generate_phantom(spec)
    cx, cy = spec.lesion_center()
    half = 6 + 3
    expected = lattice_disk(40, 60, cx - half, cy, 6) | lattice_disk(40, 60, cx + half, cy, 6)
    expected[cy - 1: cy + 2, cx - half: cx + half + 1] = True
    np.testing.assert_array_equal(mask, expected)


def test_noise_mean():
    spec = PhantomSpec(noise_sigma=0.03, rng_seed=7, radius=14)
    img, mask = generate_phantom(spec)
    n = mask.sum()
    assert abs(img[mask].mean() - spec.lesion_mean) <= 4 * spec.noise_sigma / np.sqrt(n)
    assert img.min() >= 0 and img.max() <= 1


def test_distractor():
    spec = PhantomSpec(lesion_shape="annulus-adjacent-distractor", radius=8)
    img, mask = generate_phantom(spec)
    ring = img == spec.distractor_mean
    assert ring.any()
    assert not np.any(ring & mask)
    # the ring is a closed annulus: its hole is background
    _, holes = ndimage.label(~ring)
    assert holes >= 2
    spec2 = PhantomSpec(lesion_shape="two-lobes-with-bridge", distractor=True, radius=7)
    img2, mask2 = generate_phantom(spec2)
    assert (img2 == spec2.distractor_mean).any()


def test_out_of_bounds():
    with pytest.raises(ShapeOutOfBounds):
        generate_phantom(PhantomSpec(width=20, height=20, radius=12))
    with pytest.raises(ShapeOutOfBounds):
        generate_phantom(PhantomSpec(center=(2, 40)))


@pytest.mark.parametrize("kw", [{"lesion_mean": 1.2}, {"noise_sigma": -1}, {"bridge_width": -1},
                                {"lesion_shape": "star"}])
def test_spec_validation(kw):
    with pytest.raises(ValueError):
        PhantomSpec(**kw)


def test_corpus_reproducible_and_in_bounds():
    specs = random_specs(12, rng_seed=3, noise_sigma=0.03, distractor=True)
    assert specs == random_specs(12, rng_seed=3, noise_sigma=0.03, distractor=True)
    corpus = phantom_corpus(12, rng_seed=3, noise_sigma=0.03, distractor=True)
    assert len(corpus) == 12
    assert {s.lesion_shape for s in specs} == {"disk", "two-lobes-with-bridge"}
