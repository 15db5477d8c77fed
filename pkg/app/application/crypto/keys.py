from __future__ import annotations

import json

import numpy as np

from app.application.crypto.keystream import KeyStream
from app.core.logging import get_logger
from app.domain.errors import InvalidParams
from app.domain.scheme import STANDARD_WORD_WIDTHS, Params, PublicKey, SecretKey, Words

logger = get_logger(__name__)


def make_params(
    n: int,
    m: int,
    ell: int,
    m_q: int,
    n_q: int,
    noise_bound: int,
    *,
    allow_toy: bool = False,
) -> Params:
    """Validate scheme dimensions and derive N and q.

    Args:
        allow_toy: Accept word widths outside 8/16/32/64 and relax the product-fit
            rule 2(m_q + n_q) <= ell to m_q + n_q <= ell. Meant for hand-checkable
            geometries such as ell=3; the noise rule still applies.
    """

    for name, value in (("n", n), ("m", m), ("ell", ell), ("m_q", m_q)):
        if not isinstance(value, int) or value < 1:
            raise InvalidParams(name, f"must be a positive integer, got {value!r}")
    if not isinstance(n_q, int) or n_q < 0:
        raise InvalidParams("n_q", f"must be a non-negative integer, got {n_q!r}")
    if not isinstance(noise_bound, int) or noise_bound < 0:
        raise InvalidParams("noise_bound", f"must be a non-negative integer, got {noise_bound!r}")

    if allow_toy:
        if not 2 <= ell <= 64:
            raise InvalidParams("ell", f"toy word width must lie in [2, 64], got {ell}")
        if m_q + n_q > ell:
            raise InvalidParams("m_q+n_q", f"{m_q + n_q} exceeds the word width {ell}")
    else:
        if ell not in STANDARD_WORD_WIDTHS:
            raise InvalidParams("ell", f"must be one of {STANDARD_WORD_WIDTHS}, got {ell}")
        if 2 * (m_q + n_q) > ell:
            raise InvalidParams("m_q+n_q", f"{m_q + n_q} > ell/2 = {ell // 2}; a product would not fit")

    if m * noise_bound >= 1 << (ell - 2):
        raise InvalidParams("noise_bound", f"m*noise_bound = {m * noise_bound} reaches the budget 2^{ell - 2}")

    return Params(n=n, m=m, ell=ell, m_q=m_q, n_q=n_q, noise_bound=noise_bound)


def centered(x: int | np.ndarray, ell: int) -> int | np.ndarray:
    """Map words mod 2^ell onto [-2^(ell-1), 2^(ell-1))."""

    if isinstance(x, (int, np.integer)):
        x = int(x) & ((1 << ell) - 1)
        return x - (1 << ell) if x >> (ell - 1) else x
    words = np.asarray(x, dtype=np.uint64)
    if ell == 64:
        return words.view(np.int64)
    signed = (words & np.uint64((1 << ell) - 1)).astype(np.int64)
    return np.where(signed >= 1 << (ell - 1), signed - (1 << ell), signed)


def embed(values: int | np.ndarray, ell: int) -> int | np.ndarray:
    """Inverse of ``centered``: signed integers to words mod 2^ell."""

    if isinstance(values, (int, np.integer)):
        return int(values) & ((1 << ell) - 1)
    words = np.asarray(values, dtype=np.int64).astype(np.uint64)
    return words & np.uint64((1 << ell) - 1) if ell < 64 else words


def sample_noise(params: Params, rng: KeyStream) -> Words:
    """m fresh noise words drawn uniformly from [-noise_bound, noise_bound]."""

    draws = rng.bounded((params.m,), -params.noise_bound, params.noise_bound)
    return embed(draws, params.ell)


def _negate(words: Words, params: Params) -> Words:
    return (~words + np.uint64(1)) & params.mask


def _matvec(matrix: Words, vector: Words, params: Params) -> Words:
    # uint64 arithmetic wraps mod 2^64; the mask finishes the reduction mod q
    return (matrix * vector[None, :]).sum(axis=1, dtype=np.uint64) & params.mask


def keygen_from(params: Params, t: Words, B: Words, e: Words) -> tuple[SecretKey, PublicKey]:  # noqa: N803
    """Assemble a key pair from explicit t, B and e."""

    t = np.asarray(t, dtype=np.uint64) & params.mask
    B = np.asarray(B, dtype=np.uint64).reshape(params.m, params.n) & params.mask  # noqa: N806
    e = np.asarray(e, dtype=np.uint64) & params.mask

    b = (_matvec(B, t, params) + e) & params.mask
    s = np.concatenate([np.array([1], dtype=np.uint64), _negate(t, params)])
    A = np.column_stack([b, B]).astype(np.uint64)  # noqa: N806
    return SecretKey(params=params, s=s), PublicKey(params=params, A=A)


def keygen(params: Params, rng: KeyStream) -> tuple[SecretKey, PublicKey]:
    """Sample t and B uniformly, e from the noise distribution."""

    t = rng.words((params.n,), params.ell)
    B = rng.words((params.m, params.n), params.ell)  # noqa: N806
    e = sample_noise(params, rng)
    sk, pk = keygen_from(params, t, B, e)
    logger.info(
        "Generated key pair",
        extra={"rce_extra": json.dumps({"n": params.n, "m": params.m, "ell": params.ell})},
    )
    return sk, pk


def public_residual(sk: SecretKey, pk: PublicKey) -> Words:
    """A @ s mod q, which equals the key's noise vector e."""

    return _matvec(pk.A, sk.s, sk.params)
