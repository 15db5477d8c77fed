from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from app.application.crypto.keys import (
    centered,
    embed,
    keygen,
    keygen_from,
    make_params,
    public_residual,
    sample_noise,
)
from app.application.crypto.keystream import KeyStream
from app.domain.errors import InvalidParams


def test_reference_geometry():
    params = make_params(7, 7, 64, 10, 22, 15)
    assert params.N == 512
    assert params.q == 2**64
    assert params.width == 8
    assert params.noise_budget == 2**62


def test_smallest_toy_geometry():
    params = make_params(1, 2, 3, 1, 1, 0, allow_toy=True)
    assert params.N == 6
    assert params.q == 8


def test_product_must_fit_word():
    with pytest.raises(InvalidParams) as info:
        make_params(7, 7, 64, 40, 40, 15)
    assert info.value.constraint == "m_q+n_q"


def test_product_fit_boundary():
    assert make_params(7, 7, 64, 16, 16, 15).m_q == 16
    with pytest.raises(InvalidParams) as info:
        make_params(7, 7, 64, 16, 17, 15)
    assert info.value.constraint == "m_q+n_q"
    # toy mode only needs one value to fit
    assert make_params(7, 7, 64, 16, 17, 15, allow_toy=True).n_q == 17
    with pytest.raises(InvalidParams):
        make_params(7, 7, 64, 32, 33, 15, allow_toy=True)


@pytest.mark.parametrize("ell", [3, 12, 65])
def test_non_standard_width_rejected(ell):
    with pytest.raises(InvalidParams):
        make_params(1, 2, ell, 1, 1, 0)


def test_toy_mode_still_checks_noise():
    with pytest.raises(InvalidParams) as info:
        make_params(1, 2, 3, 1, 1, 1, allow_toy=True)
    assert info.value.constraint == "noise_bound"


def test_noise_budget_rule():
    with pytest.raises(InvalidParams):
        make_params(2, 64, 8, 1, 1, 1)


@pytest.mark.parametrize("field", ["n", "m", "ell", "m_q"])
def test_positive_dimensions(field):
    values = {"n": 7, "m": 7, "ell": 64, "m_q": 10, "n_q": 22, "noise_bound": 15}
    values[field] = 0
    with pytest.raises(InvalidParams):
        make_params(**values)


def test_centered_and_embed():
    assert centered(7, 3) == -1
    assert centered(3, 3) == 3
    assert embed(-1, 3) == 7
    words = np.array([0, 2**63, 2**64 - 1], dtype=np.uint64)
    assert centered(words, 64).tolist() == [0, -(2**63), -1]
    assert embed(np.array([-1, 2]), 8).tolist() == [255, 2]


def test_keygen_residual_equals_noise(tiny_params):
    sk, pk = keygen(tiny_params, KeyStream(0))
    assert np.all(public_residual(sk, pk) == 0)


def test_degenerate_key():
    params = make_params(1, 2, 3, 1, 1, 0, allow_toy=True)
    sk, pk = keygen_from(params, np.zeros(1), np.array([[1], [2]]), np.zeros(2))
    assert pk.A[:, 0].tolist() == [0, 0]
    assert sk.s.tolist() == [1, 0]


@given(seed=st.integers(min_value=0, max_value=2**32))
def test_reference_key_invariant(ref_params, seed):
    sk, pk = keygen(ref_params, KeyStream(seed))
    residual = centered(public_residual(sk, pk), 64)
    assert np.max(np.abs(residual)) <= ref_params.noise_bound
    assert sk.s[0] == 1


def test_sample_noise_zero_bound():
    params = make_params(2, 3, 8, 1, 1, 0)
    assert np.all(sample_noise(params, KeyStream(1)) == 0)


def test_sample_noise_bounds_and_mean():
    params = make_params(7, 100_000, 64, 10, 22, 15)
    draws = centered(sample_noise(params, KeyStream("noise")), 64)
    assert draws.min() >= -15
    assert draws.max() <= 15
    assert abs(float(np.mean(draws))) < 0.5
    assert set(np.unique(draws).tolist()) == set(range(-15, 16))
