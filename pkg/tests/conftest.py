from __future__ import annotations

import logging
import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from app.application.crypto.keys import keygen, keygen_from, make_params
from app.application.crypto.keystream import KeyStream
from app.domain.scheme import Params, PublicKey, SecretKey

settings.register_profile(
    "ci",
    max_examples=40,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.register_profile("dev", max_examples=15, deadline=None)
settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "ci"))


@pytest.fixture(scope="session")
def ref_params() -> Params:
    return make_params(7, 7, 64, 10, 22, 15)


@pytest.fixture(scope="session")
def ref_keys(ref_params: Params) -> tuple[SecretKey, PublicKey]:
    return keygen(ref_params, KeyStream("tests/reference"))


@pytest.fixture(scope="session")
def toy_params() -> Params:
    """n=2, m=3, ell=8: small enough for the literal full-cipher path."""
    return make_params(2, 3, 8, 1, 1, 1)


@pytest.fixture(scope="session")
def toy_keys(toy_params: Params) -> tuple[SecretKey, PublicKey]:
    return keygen(toy_params, KeyStream("tests/toy"))


@pytest.fixture(scope="session")
def tiny_params() -> Params:
    """Hand-checkable geometry: n=1, ell=3, no noise."""
    return make_params(1, 2, 3, 1, 1, 0, allow_toy=True)


@pytest.fixture(scope="session")
def tiny_keys(tiny_params: Params) -> tuple[SecretKey, PublicKey]:
    t = np.array([5], dtype=np.uint64)
    B = np.array([[3], [6]], dtype=np.uint64)  # noqa: N806
    e = np.zeros(2, dtype=np.uint64)
    return keygen_from(tiny_params, t, B, e)


@pytest.fixture
def restore_logging():
    root = logging.getLogger()
    handlers, level = list(root.handlers), root.level
    yield
    for handler in list(root.handlers):
        root.removeHandler(handler)
    for handler in handlers:
        root.addHandler(handler)
    root.setLevel(level)
