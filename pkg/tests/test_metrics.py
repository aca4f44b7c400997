import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fisrg.exceptions import DimensionMismatch
from fisrg.metrics import dice, lesion_percentage

pairs = st.tuples(st.integers(1, 10), st.integers(1, 10)).flatmap(
    lambda s: st.tuples(arrays(bool, s), arrays(bool, s)))


def test_identical_nonempty():
    m = np.zeros((4, 4), bool)
    m[1, 2] = True
    assert dice(m, m) == 1.0


def test_disjoint():
    a = np.zeros((4, 4), bool)
    b = a.copy()
    a[0, 0] = b[3, 3] = True
    assert dice(a, b) == 0.0


def test_hundred_hundred_eighty():
    x = np.zeros(200, bool)
    y = np.zeros(200, bool)
    x[:100] = True
    y[20:120] = True
    x, y = x.reshape(10, 20), y.reshape(10, 20)
    assert (x.sum(), y.sum(), (x & y).sum()) == (100, 100, 80)
    assert dice(x, y) == 0.8


def test_both_empty():
    z = np.zeros((3, 3), bool)
    assert dice(z, z) == 1.0


def test_shape_mismatch():
    with pytest.raises(DimensionMismatch):
        dice(np.zeros((2, 3), bool), np.zeros((3, 2), bool))


@settings(max_examples=200, deadline=None)
@given(pairs)
def test_symmetry_and_self(pair):
    x, y = pair
    assert dice(x, y) == dice(y, x)
    assert dice(x, x) == 1.0
    assert 0.0 <= dice(x, y) <= 1.0


@settings(max_examples=100, deadline=None)
@given(pairs, st.randoms(use_true_random=False))
def test_permutation_invariance(pair, rnd):
    x, y = pair
    perm = np.array(rnd.sample(range(x.size), x.size))
    xp = x.ravel()[perm].reshape(x.shape)
    yp = y.ravel()[perm].reshape(y.shape)
    assert dice(xp, yp) == dice(x, y)


def test_lesion_percentage():
    assert lesion_percentage(np.zeros((10, 10), bool)) == 0.0
    assert lesion_percentage(np.ones((10, 10), bool)) == 100.0
    m = np.zeros((10, 10), bool)
    m[:5, :5] = True
    assert lesion_percentage(m) == 25.0
