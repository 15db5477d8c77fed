from __future__ import annotations

import math

from app.application.crypto.keys import centered
from app.domain.errors import OutOfRange
from app.domain.fixed_point import QFormat, QNumber


def _round_half_away(value: float) -> int:
    return int(math.copysign(math.floor(abs(value) + 0.5), value))


def q_encode(beta: float, fmt: QFormat) -> int:
    """Embed beta as round(beta * 2^n_q) mod 2^ell (full-width two's complement)."""

    if not math.isfinite(beta) or not fmt.contains(beta):
        raise OutOfRange(
            f"{beta} is outside Q{fmt.m_q}.{fmt.n_q} range [{fmt.lower}, {fmt.upper})",
            value=beta,
        )
    scaled = _round_half_away(beta * (1 << fmt.n_q))
    return scaled & ((1 << fmt.ell) - 1)


def q_decode(word: int, frac_bits: int, ell: int) -> float:
    return centered(int(word), ell) / float(1 << frac_bits)


def rescale(word: int, shift: int, ell: int) -> int:
    """Arithmetic right shift of the centered value (floor), re-embedded mod 2^ell."""

    return (centered(int(word), ell) >> shift) & ((1 << ell) - 1)


def q_mul_plain(w1: int, w2: int, ell: int) -> int:
    return (int(w1) * int(w2)) & ((1 << ell) - 1)


def q_add_plain(w1: int, w2: int, ell: int) -> int:
    return (int(w1) + int(w2)) & ((1 << ell) - 1)


def rescale_number(number: QNumber, shift: int) -> QNumber:
    """Drop `shift` fraction bits from a product, flooring."""

    return QNumber(
        word=rescale(number.word, shift, number.ell),
        frac_bits=number.frac_bits - shift,
        ell=number.ell,
    )


def decode_number(number: QNumber) -> float:
    return q_decode(number.word, number.frac_bits, number.ell)
