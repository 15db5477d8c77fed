from __future__ import annotations

import numpy as np

from app.application.crypto.counters import record
from app.application.crypto.keys import centered
from app.application.crypto.keystream import KeyStream
from app.domain.errors import DimensionMismatch, OutOfRange
from app.domain.scheme import Bits, Cipher, Params, PublicKey, ReducedCipher, SecretKey, Words

CHUNK_BITS = 8


def _mask(ell: int) -> np.uint64:
    return np.uint64((1 << ell) - 1)


def _shifts(ell: int) -> Words:
    return np.arange(ell, dtype=np.uint64)


def _check_message(mu: int, ell: int) -> int:
    mu = int(mu)
    if not 0 <= mu < 1 << ell:
        raise OutOfRange(f"message must lie in [0, 2^{ell}), got {mu}")
    return mu


def truncate(x: int | np.ndarray, ell: int) -> int | Words:
    """The ell least significant bits of x, element-wise on matrices."""

    if isinstance(x, (int, np.integer)):
        return int(x) & ((1 << ell) - 1)
    arr = np.asarray(x)
    if arr.dtype == object:
        mask = (1 << ell) - 1
        return np.vectorize(lambda v: int(v) & mask, otypes=[np.uint64])(arr)
    return arr.astype(np.uint64) & _mask(ell)


def _bit_decomp(a: np.ndarray, ell: int) -> Bits:
    a = np.asarray(a, dtype=np.uint64)
    bits = (a[..., None] >> _shifts(ell)) & np.uint64(1)
    return bits.astype(np.uint8).reshape(*a.shape[:-1], a.shape[-1] * ell)


def _bit_decomp_inv(b: np.ndarray, ell: int) -> Words:
    b = np.asarray(b)
    if b.shape[-1] % ell:
        raise DimensionMismatch(f"width {b.shape[-1]} is not a multiple of ell={ell}")
    groups = b.astype(np.uint64).reshape(*b.shape[:-1], b.shape[-1] // ell, ell)
    return (groups << _shifts(ell)).sum(axis=-1, dtype=np.uint64)


def bit_decomp(a: np.ndarray, ell: int) -> Bits:
    """[a]^ell: every word column expands to ell bit columns, LSB first."""

    a = np.asarray(a, dtype=np.uint64)
    record("bit_decomp", bit_ops=a.size * ell)
    return _bit_decomp(a, ell)


def bit_decomp_inv(b: np.ndarray, ell: int) -> Words:
    """b @ G: each group of ell columns collapses to one word by shifted sums.

    The result is reduced mod 2^64 only; callers truncate to ell bits.
    """

    b = np.asarray(b)
    groups = b.size // ell if ell else 0
    record("bit_decomp_inv", adds=groups * (ell - 1), bit_ops=b.size)
    return _bit_decomp_inv(b, ell)


def _flatten(b: np.ndarray, ell: int) -> Bits:
    return _bit_decomp(_bit_decomp_inv(b, ell) & _mask(ell), ell)


def flatten(b: np.ndarray, ell: int) -> Bits:
    """[b @ G]^ell, re-binarizing b while keeping b @ G mod 2^ell."""

    b = np.asarray(b)
    record("flatten", adds=(b.size // ell) * (ell - 1), bit_ops=2 * b.size)
    return _flatten(b, ell)


def powers_of_2(c: np.ndarray, ell: int) -> Words:
    """c @ G^T: entry i*ell + j is c[i] << j mod 2^ell."""

    c = np.asarray(c, dtype=np.uint64)
    record("powers_of_2", bit_ops=c.size * (ell - 1))
    return ((c[:, None] << _shifts(ell)) & _mask(ell)).reshape(-1)


def gadget_row(mu: int, ell: int) -> Words:
    """[mu, mu << 1, ..., mu << (ell-1)] truncated to ell bits."""

    return (np.uint64(mu) << _shifts(ell)) & _mask(ell)


def gadget_embed(mu: int, params: Params) -> Words:
    """mu * G as an N x (n+1) word matrix, built from shifts only."""

    out = np.zeros((params.N, params.width), dtype=np.uint64)
    column = gadget_row(mu, params.ell)
    for i in range(params.width):
        out[i * params.ell : (i + 1) * params.ell, i] = column
    return out


class SubsetSumTable:
    """Precomputed subset sums of groups of eight word rows.

    Selecting rows of ``words`` by a bit mask becomes one table lookup per
    group of eight mask bits, so masked row sums need additions only.
    """

    __slots__ = ("_table", "_rows", "_width", "_mask", "build_adds")

    def __init__(self, words: Words, ell: int) -> None:
        words = np.asarray(words, dtype=np.uint64)
        rows, width = words.shape
        chunks = -(-rows // CHUNK_BITS)
        padded = np.zeros((chunks * CHUNK_BITS, width), dtype=np.uint64)
        padded[:rows] = words
        grouped = padded.reshape(chunks, CHUNK_BITS, width)

        table = np.zeros((chunks, 1 << CHUNK_BITS, width), dtype=np.uint64)
        for bit in range(CHUNK_BITS):
            span = 1 << bit
            table[:, span : 2 * span] = table[:, :span] + grouped[:, bit][:, None, :]

        self._table = table
        self._rows = rows
        self._width = width
        self._mask = _mask(ell)
        self.build_adds = chunks * ((1 << CHUNK_BITS) - 1) * width

    @property
    def rows(self) -> int:
        return self._rows

    def select_adds(self, selectors: int) -> int:
        chunks = self._table.shape[0]
        return selectors * (chunks - 1) * self._width

    def select(self, bits: Bits) -> Words:
        """out[i] = sum of words[j] over j with bits[i, j] = 1, mod 2^ell."""

        bits = np.asarray(bits, dtype=np.uint8)
        if bits.ndim != 2 or bits.shape[1] != self._rows:
            raise DimensionMismatch(f"selector shape {bits.shape} does not match {self._rows} rows")
        packed = np.packbits(bits, axis=1, bitorder="little")
        chunk_index = np.arange(self._table.shape[0])[None, :]
        picked = self._table[chunk_index, packed]
        return picked.sum(axis=1, dtype=np.uint64) & self._mask


def masked_row_sum(bits: Bits, words: Words, ell: int) -> tuple[Words, int]:
    """Masked row sum of ``words`` and the additions it took."""

    table = SubsetSumTable(words, ell)
    out = table.select(bits)
    return out, table.build_adds + table.select_adds(bits.shape[0])


def _check_key(params: Params, ell: int, rows: int) -> None:
    if ell != params.ell or rows != params.N:
        raise DimensionMismatch(f"cipher with N={rows}, ell={ell} does not match params N={params.N}, ell={params.ell}")


def sample_mask(params: Params, rng: KeyStream) -> Bits:
    """Fresh uniform binary R of shape N x m."""

    return rng.bits((params.N, params.m))


def encrypt_with(pk: PublicKey, mu: int, R: Bits) -> ReducedCipher:  # noqa: N803
    """(mu G + R A)^ell for an explicit R."""

    params = pk.params
    mu = _check_message(mu, params.ell)
    R = np.asarray(R, dtype=np.uint8)  # noqa: N806
    if R.shape != (params.N, params.m):
        raise DimensionMismatch(f"R needs shape {(params.N, params.m)}, got {R.shape}")
    noise_part, adds = masked_row_sum(R, pk.A, params.ell)
    words = (gadget_embed(mu, params) + noise_part) & params.mask
    record("encrypt", adds=adds + params.N, bit_ops=params.ell - 1)
    return ReducedCipher(words=words, ell=params.ell)


def encrypt(pk: PublicKey, mu: int, rng: KeyStream) -> ReducedCipher:
    return encrypt_with(pk, mu, sample_mask(pk.params, rng))


def encrypt_full_with(pk: PublicKey, mu: int, R: Bits) -> Cipher:  # noqa: N803
    """Flatten(mu I_N + BitDecomp(R A)) for an explicit R."""

    params = pk.params
    mu = _check_message(mu, params.ell)
    R = np.asarray(R, dtype=np.uint8)  # noqa: N806
    if R.shape != (params.N, params.m):
        raise DimensionMismatch(f"R needs shape {(params.N, params.m)}, got {R.shape}")
    noise_part, adds = masked_row_sum(R, pk.A, params.ell)
    matrix = _bit_decomp(noise_part, params.ell).astype(np.uint64)
    diagonal = np.arange(params.N)
    matrix[diagonal, diagonal] += np.uint64(mu)
    record("encrypt_full", adds=adds + params.N * params.width * (params.ell - 1), bit_ops=3 * params.N * params.N)
    return Cipher(bits=_flatten(matrix, params.ell), ell=params.ell)


def encrypt_full(pk: PublicKey, mu: int, rng: KeyStream) -> Cipher:
    return encrypt_full_with(pk, mu, sample_mask(pk.params, rng))


def to_reduced(C: Cipher) -> ReducedCipher:  # noqa: N803
    record("to_reduced", adds=C.N * C.width * (C.ell - 1), bit_ops=C.N * C.N)
    return ReducedCipher(words=_bit_decomp_inv(C.bits, C.ell), ell=C.ell)


def to_full(Ct: ReducedCipher) -> Cipher:  # noqa: N803
    record("to_full", bit_ops=Ct.N * Ct.N)
    return Cipher(bits=_bit_decomp(Ct.words, Ct.ell), ell=Ct.ell)


def mp_dec(v: np.ndarray, ell: int) -> int:
    """Recover mu from v[i] = mu * 2^i + e_i, least significant bit first.

    Bit i is read from entry ell-1-i after removing the already known lower
    bits; it is 1 when the residue falls in [2^(ell-2), 3 * 2^(ell-2)).
    """

    words = [int(w) for w in np.asarray(v, dtype=np.uint64)[:ell]]
    if len(words) < ell:
        raise DimensionMismatch(f"mp_dec needs {ell} words, got {len(words)}")
    modulus = 1 << ell
    quarter = 1 << (ell - 2)
    mu = 0
    for i in range(ell):
        # mu holds bits 0..i-1; shifting aligns them with entry ell-1-i
        residue = (words[ell - 1 - i] - (mu << (ell - 1 - i))) % modulus
        if quarter <= residue < 3 * quarter:
            mu |= 1 << i
    record("mp_dec", adds=ell, bit_ops=2 * ell)
    return mu


def leading_products(sk: SecretKey, Ct: ReducedCipher) -> Words:  # noqa: N803
    """First ell entries of (Ct @ s)^ell."""

    params = sk.params
    _check_key(params, Ct.ell, Ct.N)
    head = Ct.words[: params.ell]
    record("decrypt", mults=head.size, adds=params.ell * (params.width - 1))
    return (head * sk.s[None, :]).sum(axis=1, dtype=np.uint64) & params.mask


def decrypt(sk: SecretKey, Ct: ReducedCipher) -> int:  # noqa: N803
    return mp_dec(leading_products(sk, Ct), sk.params.ell)


def noise_of(sk: SecretKey, Ct: ReducedCipher, mu: int) -> int:  # noqa: N803
    """max_i |centered(w_i - mu * 2^i)| over the first ell entries of Ct @ s."""

    ell = sk.params.ell
    w = leading_products(sk, Ct)
    expected = gadget_row(int(mu) & ((1 << ell) - 1), ell)
    diff = (w - expected) & _mask(ell)
    return max(abs(int(v)) for v in np.atleast_1d(centered(diff, ell)))
