from __future__ import annotations

import hashlib

import numpy as np
from cryptography.hazmat.primitives.ciphers import Cipher as StreamCipher
from cryptography.hazmat.primitives.ciphers import algorithms

from app.domain.scheme import Bits, Words

_NONCE = bytes(16)


class KeyStream:
    """Seedable cryptographically strong generator.

    Bytes come from a ChaCha20 keystream keyed by SHA-256 of the seed label,
    so two streams built from the same seed produce identical draws.

    Args:
        seed: Integer, text or bytes identifying the stream.
    """

    def __init__(self, seed: int | str | bytes) -> None:
        material = seed if isinstance(seed, bytes) else str(seed).encode("utf-8")
        self._key = hashlib.sha256(material).digest()
        self._encryptor = StreamCipher(algorithms.ChaCha20(self._key, _NONCE), mode=None).encryptor()

    def fork(self, label: str) -> KeyStream:
        """Derive an independent child stream; the parent is not advanced."""

        return KeyStream(hashlib.sha256(self._key + b"/" + label.encode("utf-8")).digest())

    def take(self, nbytes: int) -> bytes:
        return self._encryptor.update(bytes(nbytes))

    def words(self, shape: tuple[int, ...], ell: int) -> Words:
        """Uniform ell-bit words."""

        count = int(np.prod(shape, dtype=np.int64))
        raw = np.frombuffer(self.take(8 * count), dtype="<u8").astype(np.uint64)
        if ell < 64:
            raw &= np.uint64((1 << ell) - 1)
        return raw.reshape(shape)

    def bits(self, shape: tuple[int, ...]) -> Bits:
        count = int(np.prod(shape, dtype=np.int64))
        packed = np.frombuffer(self.take((count + 7) // 8), dtype=np.uint8)
        return np.unpackbits(packed, bitorder="little")[:count].reshape(shape)

    def bounded(self, shape: tuple[int, ...], low: int, high: int) -> np.ndarray:
        """Unbiased integers on [low, high] by rejection sampling on uint32."""

        span = high - low + 1
        if span <= 0 or span > 1 << 32:
            raise ValueError(f"cannot sample from [{low}, {high}]")
        count = int(np.prod(shape, dtype=np.int64))
        limit = ((1 << 32) // span) * span
        out = np.empty(0, dtype=np.int64)
        while out.size < count:
            need = count - out.size
            draw = np.frombuffer(self.take(4 * (need + need // 4 + 1)), dtype="<u4").astype(np.int64)
            draw = draw[draw < limit]
            out = np.concatenate([out, draw[:need] % span + low])
        return out.reshape(shape)
