from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from app.application.crypto.counters import record, record_homomorphic
from app.application.crypto.gsw import SubsetSumTable, _bit_decomp, gadget_row, masked_row_sum
from app.domain.errors import DimensionMismatch, OutOfRange
from app.domain.scheme import Bits, Cipher, ReducedCipher, Words


def _same_shape(first: ReducedCipher | Cipher, second: ReducedCipher | Cipher) -> None:
    if first.ell != second.ell or first.N != second.N or first.width != second.width:
        raise DimensionMismatch(
            f"operands differ: N={first.N}/{second.N}, width={first.width}/{second.width}, "
            f"ell={first.ell}/{second.ell}",
        )


def _scalar(alpha: int, ell: int) -> int:
    alpha = int(alpha)
    if not 0 <= alpha < 1 << ell:
        raise OutOfRange(f"scalar must lie in [0, 2^{ell}), got {alpha}")
    return alpha


def _mask(ell: int) -> np.uint64:
    return np.uint64((1 << ell) - 1)


# Reduced-cipher operations. None of them multiplies two words.


def add(Ct1: ReducedCipher, Ct2: ReducedCipher) -> ReducedCipher:  # noqa: N803
    """(Ct1 + Ct2)^ell."""

    _same_shape(Ct1, Ct2)
    words = (Ct1.words + Ct2.words) & _mask(Ct1.ell)
    record("add", adds=Ct1.words.size)
    record_homomorphic("add", "reduced")
    return ReducedCipher(words=words, ell=Ct1.ell)


def mul(C1: Cipher, Ct2: ReducedCipher) -> ReducedCipher:  # noqa: N803
    """(C1 @ Ct2)^ell: row i sums the rows of Ct2 selected by the bits of C1 row i.

    The left operand's noise is scaled by the centered message of the right
    operand, so the right operand must carry a small signed value.
    """

    _same_shape(C1, Ct2)
    words, adds = masked_row_sum(C1.bits, Ct2.words, Ct2.ell)
    record("mul", adds=adds, bit_ops=C1.bits.size)
    record_homomorphic("mul", "reduced")
    return ReducedCipher(words=words, ell=Ct2.ell)


def alpha_g(alpha: int, ell: int) -> Words:
    """[alpha, alpha << 1, ..., alpha << (ell-1)], each truncated to ell bits."""

    alpha = _scalar(alpha, ell)
    record("alpha_g", bit_ops=ell - 1)
    return gadget_row(alpha, ell)


def scalar_mul(alpha: int, Ct1: ReducedCipher) -> ReducedCipher:  # noqa: N803
    """([alpha G]^ell @ Ct1)^ell using the block-diagonal structure of [alpha G]^ell.

    Block i of the result only reads block i of Ct1, through the ell x ell
    bit matrix [alpha g]^ell.
    """

    ell = Ct1.ell
    alpha = _scalar(alpha, ell)
    block_bits = _bit_decomp(gadget_row(alpha, ell)[:, None], ell)
    out = np.empty_like(Ct1.words)
    adds = 0
    for i in range(Ct1.width):
        rows = slice(i * ell, (i + 1) * ell)
        out[rows], block_adds = masked_row_sum(block_bits, Ct1.words[rows], ell)
        adds += block_adds
    record("scalar_mul", adds=adds, bit_ops=(ell - 1) + ell * ell)
    record_homomorphic("scalar_mul", "reduced")
    return ReducedCipher(words=out, ell=ell)


def scalar_add(alpha: int, Ct1: ReducedCipher) -> ReducedCipher:  # noqa: N803
    """(alpha G + Ct1)^ell: only the entries (i*ell + j, i) change."""

    ell = Ct1.ell
    alpha = _scalar(alpha, ell)
    column = gadget_row(alpha, ell)
    out = Ct1.words.copy()
    for i in range(Ct1.width):
        rows = slice(i * ell, (i + 1) * ell)
        out[rows, i] = (out[rows, i] + column) & _mask(ell)
    record("scalar_add", adds=Ct1.width * ell, bit_ops=ell - 1)
    record_homomorphic("scalar_add", "reduced")
    return ReducedCipher(words=out, ell=ell)


def enc_mat_vec(Afull: Sequence[Sequence[Cipher]], xred: Sequence[ReducedCipher]) -> list[ReducedCipher]:  # noqa: N803
    """result[i] = sum_j mul(Afull[i][j], xred[j]).

    The subset-sum table of each signal cipher is built once and shared by
    every row that multiplies it.
    """

    if not xred:
        raise DimensionMismatch("enc_mat_vec needs at least one signal cipher")
    for row in Afull:
        if len(row) != len(xred):
            raise DimensionMismatch(f"matrix row has {len(row)} entries, vector has {len(xred)}")
    reference = xred[0]
    for cipher in [*xred, *(c for row in Afull for c in row)]:
        _same_shape(cipher, reference)

    ell = reference.ell
    tables = [SubsetSumTable(x.words, ell) for x in xred]
    adds = sum(t.build_adds for t in tables)
    bit_ops = 0
    results: list[ReducedCipher] = []
    for row in Afull:
        acc = np.zeros_like(reference.words)
        for table, gain in zip(tables, row, strict=True):
            acc += table.select(gain.bits)
            adds += table.select_adds(gain.N) + acc.size
            bit_ops += gain.bits.size
            record_homomorphic("mul", "reduced")
            record_homomorphic("add", "reduced")
        results.append(ReducedCipher(words=acc & _mask(ell), ell=ell))
    record("enc_mat_vec", adds=adds, bit_ops=bit_ops)
    return results


# Full-cipher reference path: the Flatten formulas evaluated literally.


def _flatten_literal(b: np.ndarray, ell: int) -> Bits:
    """Flatten(b) = [b G]^ell with G applied as products by 2^j."""

    b = np.asarray(b, dtype=np.uint64)
    if b.shape[-1] % ell:
        raise DimensionMismatch(f"width {b.shape[-1]} is not a multiple of ell={ell}")
    weights = np.left_shift(np.uint64(1), np.arange(ell, dtype=np.uint64))
    groups = b.reshape(b.shape[0], b.shape[1] // ell, ell)
    reduced = (groups * weights).sum(axis=-1, dtype=np.uint64) & _mask(ell)
    record(
        "flatten_literal",
        mults=b.size,
        adds=(b.size // ell) * (ell - 1),
        bit_ops=reduced.size * ell,
    )
    return _bit_decomp(reduced, ell)


def _identity_scaled(alpha: int, size: int) -> Words:
    matrix = np.zeros((size, size), dtype=np.uint64)
    np.fill_diagonal(matrix, np.uint64(alpha))
    return matrix


def _bit_matmul(left: Bits, right: Bits) -> Words:
    # entries are bit counts <= N, exact in float64
    product = left.astype(np.float64) @ right.astype(np.float64)
    return product.astype(np.uint64)


def add_full(C1: Cipher, C2: Cipher) -> Cipher:  # noqa: N803
    """Flatten(C1 + C2)."""

    _same_shape(C1, C2)
    total = C1.bits.astype(np.uint64) + C2.bits.astype(np.uint64)
    record("add_full", adds=total.size)
    record_homomorphic("add", "full")
    return Cipher(bits=_flatten_literal(total, C1.ell), ell=C1.ell)


def mul_full(C1: Cipher, C2: Cipher) -> Cipher:  # noqa: N803
    """Flatten(C1 @ C2)."""

    _same_shape(C1, C2)
    size = C1.N
    product = _bit_matmul(C1.bits, C2.bits)
    record("mul_full", mults=size**3, adds=size * size * (size - 1))
    record_homomorphic("mul", "full")
    return Cipher(bits=_flatten_literal(product, C1.ell), ell=C1.ell)


def scalar_mul_full(alpha: int, C1: Cipher) -> Cipher:  # noqa: N803
    """Flatten(Flatten(alpha I_N) @ C1)."""

    alpha = _scalar(alpha, C1.ell)
    size = C1.N
    gadget_bits = _flatten_literal(_identity_scaled(alpha, size), C1.ell)
    product = _bit_matmul(gadget_bits, C1.bits)
    record("scalar_mul_full", mults=size**3, adds=size * size * (size - 1))
    record_homomorphic("scalar_mul", "full")
    return Cipher(bits=_flatten_literal(product, C1.ell), ell=C1.ell)


def scalar_add_full(alpha: int, C1: Cipher) -> Cipher:  # noqa: N803
    """Flatten(alpha I_N + C1)."""

    alpha = _scalar(alpha, C1.ell)
    total = _identity_scaled(alpha, C1.N) + C1.bits.astype(np.uint64)
    record("scalar_add_full", adds=C1.N)
    record_homomorphic("scalar_add", "full")
    return Cipher(bits=_flatten_literal(total, C1.ell), ell=C1.ell)
