import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from inexact_dr.space import PairPoint, inner, norm, norm_sq, pair_inner, pair_norm_sq, vec

finite = st.floats(-1e6, 1e6, allow_nan=False)


def test_vec_copies_and_freezes():
    src = np.array([1.0, 2.0])
    v = vec(src)
    src[0] = 5.0
    assert v[0] == 1.0
    with pytest.raises(ValueError):
        v[0] = 3.0


def test_vec_scalar_becomes_1d():
    assert vec(2.5).shape == (1,)


@pytest.mark.parametrize("bad", [[np.nan], [np.inf, 1.0], [], [[1.0, 2.0]]])
def test_vec_rejects(bad):
    with pytest.raises(ValueError):
        vec(bad)


def test_vec_dim_mismatch():
    with pytest.raises(ValueError, match="dimension mismatch"):
        vec([1.0, 2.0], dim=3)


def test_inner_mismatch_raises():
    with pytest.raises(ValueError):
        inner([1.0], [1.0, 2.0])


def test_norms_hand_values():
    assert norm_sq([3.0, 4.0]) == 25.0
    assert norm([3.0, 4.0]) == 5.0


def test_pair_point_scales_w():
    p = PairPoint.from_zw([1.0], [2.0], 0.5)
    assert p.lw[0] == 1.0
    assert pair_norm_sq(p) == 2.0


@given(arrays(np.float64, 4, elements=finite), arrays(np.float64, 4, elements=finite),
       arrays(np.float64, 4, elements=finite), arrays(np.float64, 4, elements=finite))
def test_pair_inner_is_sum_of_components(z1, w1, z2, w2):
    p, q = PairPoint(z1, w1), PairPoint(z2, w2)
    expect = float(z1 @ z2 + w1 @ w2)
    assert pair_inner(p, q) == pytest.approx(expect, rel=1e-12, abs=1e-6)
    d = p - q
    assert np.array_equal(d.z, z1 - z2) and np.array_equal(d.lw, w1 - w2)
