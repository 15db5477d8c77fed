from __future__ import annotations

import json
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from app.application.crypto import hom_ops
from app.application.crypto.gsw import (
    bit_decomp,
    bit_decomp_inv,
    decrypt,
    encrypt_full_with,
    encrypt_with,
    sample_mask,
    to_full,
    to_reduced,
    truncate,
)
from app.application.crypto.keys import keygen, make_params
from app.application.crypto.keystream import KeyStream
from app.core.logging import get_logger
from app.domain.scheme import Cipher, Params, PublicKey, SecretKey

logger = get_logger(__name__)

# Small enough to run the literal full-cipher path exhaustively.
TOY_GEOMETRY = {"n": 2, "m": 3, "ell": 8, "m_q": 1, "n_q": 1, "noise_bound": 1}


@dataclass(frozen=True, slots=True)
class CheckResult:
    name: str
    passed: bool
    trials: int
    detail: str = ""


@dataclass(slots=True)
class _Fixture:
    params: Params
    sk: SecretKey
    pk: PublicKey
    rng: KeyStream

    def message(self) -> int:
        return int(self.rng.words((1,), self.params.ell)[0])

    def full_pair(self) -> tuple[Cipher, Cipher]:
        return (
            to_full(encrypt_with(self.pk, self.message(), sample_mask(self.params, self.rng))),
            to_full(encrypt_with(self.pk, self.message(), sample_mask(self.params, self.rng))),
        )


def _decomposition_inverse(fx: _Fixture, trials: int) -> bool:
    for _ in range(trials):
        rows = 1 + int(fx.rng.bounded((1,), 0, 6)[0])
        matrix = fx.rng.words((rows, fx.params.width), 64)
        ell = fx.params.ell
        if not np.array_equal(bit_decomp_inv(bit_decomp(matrix, ell), ell), truncate(matrix, ell)):
            return False
    return True


def _roundtrip(fx: _Fixture, trials: int) -> bool:
    for _ in range(trials):
        mu = fx.message()
        cipher = encrypt_with(fx.pk, mu, sample_mask(fx.params, fx.rng))
        if decrypt(fx.sk, cipher) != mu:
            return False
    return True


def _representations(fx: _Fixture, trials: int) -> bool:
    for _ in range(trials):
        mu = fx.message()
        R = sample_mask(fx.params, fx.rng)  # noqa: N806
        reduced = encrypt_with(fx.pk, mu, R)
        full = encrypt_full_with(fx.pk, mu, R)
        if to_reduced(full) != reduced or to_full(reduced) != full or to_reduced(to_full(reduced)) != reduced:
            return False
    return True


def _equivalence(op: str) -> Callable[[_Fixture, int], bool]:
    def check(fx: _Fixture, trials: int) -> bool:
        for _ in range(trials):
            c1, c2 = fx.full_pair()
            alpha = fx.message()
            if op == "add":
                same = hom_ops.add(to_reduced(c1), to_reduced(c2)) == to_reduced(hom_ops.add_full(c1, c2))
            elif op == "mul":
                same = hom_ops.mul(c1, to_reduced(c2)) == to_reduced(hom_ops.mul_full(c1, c2))
            elif op == "scalar_mul":
                same = hom_ops.scalar_mul(alpha, to_reduced(c1)) == to_reduced(hom_ops.scalar_mul_full(alpha, c1))
            else:
                same = hom_ops.scalar_add(alpha, to_reduced(c1)) == to_reduced(hom_ops.scalar_add_full(alpha, c1))
            if not same:
                return False
        return True

    return check


CHECKS: tuple[tuple[str, Callable[[_Fixture, int], bool]], ...] = (
    ("bit_decomposition_inverse", _decomposition_inverse),
    ("encrypt_decrypt_roundtrip", _roundtrip),
    ("full_reduced_representations", _representations),
    ("reduced_add_matches_full", _equivalence("add")),
    ("reduced_mul_matches_full", _equivalence("mul")),
    ("reduced_scalar_mul_matches_full", _equivalence("scalar_mul")),
    ("reduced_scalar_add_matches_full", _equivalence("scalar_add")),
)


def run_selftest(seed: int = 0, trials: int = 50) -> list[CheckResult]:
    """Run the toy-geometry equivalence suite; never raises on a failed check."""

    params = make_params(**TOY_GEOMETRY)
    root = KeyStream(f"selftest/{seed}")
    sk, pk = keygen(params, root.fork("keys"))
    fixture = _Fixture(params=params, sk=sk, pk=pk, rng=root.fork("draws"))

    results = []
    for name, check in CHECKS:
        try:
            passed = check(fixture, trials)
            detail = ""
        except Exception as exc:  # a broken primitive is a failed check
            passed = False
            detail = f"{type(exc).__name__}: {exc}"
        results.append(CheckResult(name=name, passed=passed, trials=trials, detail=detail))
        logger.info(
            "Self-test check finished",
            extra={"rce_extra": json.dumps({"check": name, "passed": passed})},
        )
    return results
