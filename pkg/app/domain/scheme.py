from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from app.domain.errors import DimensionMismatch

Words = NDArray[np.uint64]
Bits = NDArray[np.uint8]

STANDARD_WORD_WIDTHS = (8, 16, 32, 64)


@dataclass(frozen=True, slots=True)
class Params:
    """Scheme dimensions and fixed-point widths.

    Args:
        n: Lattice dimension.
        m: Number of public-key samples.
        ell: Word width in bits; the modulus is q = 2**ell.
        m_q: Integer bits of the Q format.
        n_q: Fraction bits of the Q format.
        noise_bound: Largest magnitude of a fresh noise sample.
    """

    n: int
    m: int
    ell: int
    m_q: int
    n_q: int
    noise_bound: int

    @property
    def width(self) -> int:
        """Column count of a reduced cipher, n + 1."""
        return self.n + 1

    @property
    def N(self) -> int:  # noqa: N802
        return self.width * self.ell

    @property
    def q(self) -> int:
        return 1 << self.ell

    @property
    def mask(self) -> np.uint64:
        return np.uint64(self.q - 1)

    @property
    def noise_budget(self) -> int:
        """Per-entry noise below which decryption recovers every bit."""
        return 1 << (self.ell - 2)


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.ascontiguousarray(array)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, slots=True, eq=False)
class SecretKey:
    """s = [1, -t] stored as words mod q."""

    params: Params
    s: Words

    def __post_init__(self) -> None:
        if self.s.shape != (self.params.width,):
            raise DimensionMismatch(
                f"secret key needs {self.params.width} words, got {self.s.shape}",
            )
        object.__setattr__(self, "s", _frozen(self.s.astype(np.uint64)))


@dataclass(frozen=True, slots=True, eq=False)
class PublicKey:
    """A = [b, B] with A @ s equal to the small noise vector e."""

    params: Params
    A: Words  # noqa: N815

    def __post_init__(self) -> None:
        expected = (self.params.m, self.params.width)
        if self.A.shape != expected:
            raise DimensionMismatch(f"public key needs shape {expected}, got {self.A.shape}")
        object.__setattr__(self, "A", _frozen(self.A.astype(np.uint64)))


@dataclass(frozen=True, slots=True, eq=False)
class ReducedCipher:
    """N x (n+1) word matrix, C @ G of the bit cipher C."""

    words: Words
    ell: int

    def __post_init__(self) -> None:
        words = np.asarray(self.words, dtype=np.uint64)
        if words.ndim != 2 or words.shape[0] != words.shape[1] * self.ell:
            raise DimensionMismatch(
                f"reduced cipher must be (n+1)*ell x (n+1), got {words.shape} at ell={self.ell}",
            )
        if self.ell < 64 and np.any(words >> np.uint64(self.ell)):
            raise DimensionMismatch(f"reduced cipher entries exceed {self.ell} bits")
        object.__setattr__(self, "words", _frozen(words))

    @property
    def width(self) -> int:
        return int(self.words.shape[1])

    @property
    def N(self) -> int:  # noqa: N802
        return int(self.words.shape[0])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ReducedCipher):
            return NotImplemented
        return self.ell == other.ell and np.array_equal(self.words, other.words)

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True, slots=True, eq=False)
class Cipher:
    """N x N binary matrix; the original representation of the scheme."""

    bits: Bits
    ell: int

    def __post_init__(self) -> None:
        bits = np.asarray(self.bits, dtype=np.uint8)
        if bits.ndim != 2 or bits.shape[0] != bits.shape[1] or bits.shape[0] % self.ell:
            raise DimensionMismatch(f"cipher must be square with N divisible by ell, got {bits.shape}")
        if np.any(bits > 1):
            raise DimensionMismatch("cipher entries must be binary")
        object.__setattr__(self, "bits", _frozen(bits))

    @property
    def N(self) -> int:  # noqa: N802
        return int(self.bits.shape[0])

    @property
    def width(self) -> int:
        return self.N // self.ell

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Cipher):
            return NotImplemented
        return self.ell == other.ell and np.array_equal(self.bits, other.bits)

    __hash__ = None  # type: ignore[assignment]


@dataclass(slots=True)
class OpCounters:
    """Word-level operation tally for one counting scope."""

    word_mults: int = 0
    word_adds: int = 0
    bit_ops: int = 0
    per_op: dict[str, int] = field(default_factory=dict)

    def merge(self, other: OpCounters) -> None:
        self.word_mults += other.word_mults
        self.word_adds += other.word_adds
        self.bit_ops += other.bit_ops
        for op, count in other.per_op.items():
            self.per_op[op] = self.per_op.get(op, 0) + count

    def snapshot(self) -> OpCounters:
        return OpCounters(
            word_mults=self.word_mults,
            word_adds=self.word_adds,
            bit_ops=self.bit_ops,
            per_op=dict(self.per_op),
        )

    def reset(self) -> None:
        self.word_mults = 0
        self.word_adds = 0
        self.bit_ops = 0
        self.per_op.clear()
