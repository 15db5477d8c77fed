from __future__ import annotations

import numpy as np
import pytest

from app.application.crypto.keystream import KeyStream


def test_same_seed_same_draws():
    assert np.array_equal(KeyStream(7).words((4, 3), 64), KeyStream(7).words((4, 3), 64))
    assert not np.array_equal(KeyStream(7).words((4,), 64), KeyStream(8).words((4,), 64))


def test_fork_is_independent_and_deterministic():
    root = KeyStream("run")
    keys = root.fork("keys").words((8,), 64)
    assert np.array_equal(keys, KeyStream("run").fork("keys").words((8,), 64))
    assert not np.array_equal(keys, root.fork("encrypt").words((8,), 64))
    # forking does not advance the parent
    assert np.array_equal(root.words((2,), 64), KeyStream("run").words((2,), 64))


def test_words_respect_width():
    words = KeyStream(0).words((1000,), 8)
    assert words.dtype == np.uint64
    assert int(words.max()) < 256


def test_bits_are_binary():
    bits = KeyStream(0).bits((13, 7))
    assert bits.shape == (13, 7)
    assert set(np.unique(bits).tolist()) <= {0, 1}


def test_bounded_range():
    draws = KeyStream(3).bounded((5000,), -2, 2)
    assert draws.min() == -2
    assert draws.max() == 2


def test_bounded_rejects_empty_range():
    with pytest.raises(ValueError):
        KeyStream(0).bounded((1,), 3, 2)
