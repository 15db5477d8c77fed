from __future__ import annotations

import hashlib
import struct
from collections.abc import Sequence
from pathlib import Path

import numpy as np

from app.application.crypto.keys import make_params
from app.domain.errors import EngineError, MalformedFrame
from app.domain.protocol import FRAME_HEADER_SIZE, FRAME_MAGIC, Frame, MessageType
from app.domain.scheme import STANDARD_WORD_WIDTHS, Params, PublicKey, ReducedCipher, SecretKey

KEY_MAGIC = b"RCKY"
KEY_FILE_VERSION = 1

_PARAMS = struct.Struct("<6I")
_CIPHER_DIMS = struct.Struct("<II")
_COUNT = struct.Struct("<I")
_LENGTH = struct.Struct("<I")


def encode_params(params: Params) -> bytes:
    return _PARAMS.pack(params.n, params.m, params.ell, params.m_q, params.n_q, params.noise_bound)


def decode_params(buf: bytes, offset: int = 0) -> tuple[Params, int]:
    if len(buf) - offset < _PARAMS.size:
        raise MalformedFrame("truncated params block", needed=_PARAMS.size, available=len(buf) - offset)
    n, m, ell, m_q, n_q, noise_bound = _PARAMS.unpack_from(buf, offset)
    try:
        params = make_params(n, m, ell, m_q, n_q, noise_bound, allow_toy=ell not in STANDARD_WORD_WIDTHS)
    except EngineError as exc:
        raise MalformedFrame(f"params block rejected: {exc}") from exc
    return params, offset + _PARAMS.size


def encode_cipher(cipher: ReducedCipher) -> bytes:
    """(N, n+1) as little-endian u32, then the words row by row as little-endian u64."""

    return _CIPHER_DIMS.pack(cipher.N, cipher.width) + cipher.words.astype("<u8").tobytes()


def decode_cipher(buf: bytes, offset: int, params: Params) -> tuple[ReducedCipher, int]:
    if len(buf) - offset < _CIPHER_DIMS.size:
        raise MalformedFrame("truncated cipher header")
    rows, cols = _CIPHER_DIMS.unpack_from(buf, offset)
    if (rows, cols) != (params.N, params.width):
        raise MalformedFrame(
            f"cipher declares {rows}x{cols}, params require {params.N}x{params.width}",
        )
    offset += _CIPHER_DIMS.size
    nbytes = rows * cols * 8
    if len(buf) - offset < nbytes:
        raise MalformedFrame("truncated cipher words", needed=nbytes, available=len(buf) - offset)
    words = np.frombuffer(buf, dtype="<u8", count=rows * cols, offset=offset).astype(np.uint64).reshape(rows, cols)
    if params.ell < 64 and np.any(words >> np.uint64(params.ell)):
        raise MalformedFrame(f"cipher words exceed {params.ell} bits")
    return ReducedCipher(words=words, ell=params.ell), offset + nbytes


def encode_cipher_list(ciphers: Sequence[ReducedCipher]) -> bytes:
    return _COUNT.pack(len(ciphers)) + b"".join(encode_cipher(c) for c in ciphers)


def decode_cipher_list(buf: bytes, offset: int, params: Params) -> tuple[list[ReducedCipher], int]:
    if len(buf) - offset < _COUNT.size:
        raise MalformedFrame("truncated cipher count")
    (count,) = _COUNT.unpack_from(buf, offset)
    offset += _COUNT.size
    ciphers = []
    for _ in range(count):
        cipher, offset = decode_cipher(buf, offset, params)
        ciphers.append(cipher)
    return ciphers, offset


def encode_frame(frame: Frame) -> bytes:
    return FRAME_MAGIC + bytes([int(frame.msg_type)]) + _LENGTH.pack(frame.length) + frame.payload


def decode_header(header: bytes) -> tuple[MessageType, int]:
    if len(header) != FRAME_HEADER_SIZE:
        raise MalformedFrame(f"frame header needs {FRAME_HEADER_SIZE} bytes, got {len(header)}")
    if header[:4] != FRAME_MAGIC:
        raise MalformedFrame(f"bad frame magic {header[:4]!r}")
    try:
        msg_type = MessageType(header[4])
    except ValueError as exc:
        raise MalformedFrame(f"unknown message type {header[4]}") from exc
    (length,) = _LENGTH.unpack_from(header, 5)
    return msg_type, length


def decode_frame(raw: bytes) -> Frame:
    msg_type, length = decode_header(raw[:FRAME_HEADER_SIZE])
    payload = raw[FRAME_HEADER_SIZE:]
    if len(payload) != length:
        raise MalformedFrame(f"frame declares {length} payload bytes, carries {len(payload)}")
    return Frame(msg_type=msg_type, payload=bytes(payload))


# Message payloads


def hello_frame(params: Params) -> Frame:
    return Frame(MessageType.HELLO_PARAMS, encode_params(params))


def parse_hello(frame: Frame) -> Params:
    _expect(frame, MessageType.HELLO_PARAMS)
    params, offset = decode_params(frame.payload)
    _consumed(frame, offset)
    return params


def gains_frame(gain_ciphers: Sequence[ReducedCipher], initial_signals: Sequence[ReducedCipher]) -> Frame:
    return Frame(MessageType.ENC_GAINS, encode_cipher_list(gain_ciphers) + encode_cipher_list(initial_signals))


def parse_gains(frame: Frame, params: Params) -> tuple[list[ReducedCipher], list[ReducedCipher]]:
    _expect(frame, MessageType.ENC_GAINS)
    gains, offset = decode_cipher_list(frame.payload, 0, params)
    initial, offset = decode_cipher_list(frame.payload, offset, params)
    _consumed(frame, offset)
    return gains, initial


def cipher_frame(msg_type: MessageType, ciphers: Sequence[ReducedCipher]) -> Frame:
    return Frame(msg_type, encode_cipher_list(ciphers))


def parse_ciphers(frame: Frame, msg_type: MessageType, params: Params) -> list[ReducedCipher]:
    _expect(frame, msg_type)
    ciphers, offset = decode_cipher_list(frame.payload, 0, params)
    _consumed(frame, offset)
    return ciphers


def shutdown_frame() -> Frame:
    return Frame(MessageType.SHUTDOWN)


def _expect(frame: Frame, msg_type: MessageType) -> None:
    if frame.msg_type != msg_type:
        raise MalformedFrame(f"expected {msg_type.name}, got {frame.msg_type.name}")


def _consumed(frame: Frame, offset: int) -> None:
    if offset != frame.length:
        raise MalformedFrame(f"{frame.length - offset} trailing bytes in {frame.msg_type.name}")


# Key files


def encode_keys(sk: SecretKey, pk: PublicKey) -> bytes:
    params = sk.params
    return (
        KEY_MAGIC
        + bytes([KEY_FILE_VERSION])
        + encode_params(params)
        + sk.s.astype("<u8").tobytes()
        + pk.A.astype("<u8").tobytes()
    )


def decode_keys(raw: bytes) -> tuple[SecretKey, PublicKey]:
    if raw[:4] != KEY_MAGIC:
        raise MalformedFrame("not a key file")
    if len(raw) < 5 or raw[4] != KEY_FILE_VERSION:
        raise MalformedFrame("unsupported key file version")
    params, offset = decode_params(raw, 5)
    s_count = params.width
    a_count = params.m * params.width
    if len(raw) != offset + 8 * (s_count + a_count):
        raise MalformedFrame("key file length does not match its params block")
    s = np.frombuffer(raw, dtype="<u8", count=s_count, offset=offset).astype(np.uint64)
    offset += 8 * s_count
    A = np.frombuffer(raw, dtype="<u8", count=a_count, offset=offset).astype(np.uint64)  # noqa: N806
    return SecretKey(params=params, s=s), PublicKey(params=params, A=A.reshape(params.m, params.width))


def key_fingerprint(pk: PublicKey) -> str:
    """First 16 hex digits of SHA-256 over the public-key words."""

    return hashlib.sha256(pk.A.astype("<u8").tobytes()).hexdigest()[:16]


def write_key_file(path: Path | str, sk: SecretKey, pk: PublicKey) -> str:
    Path(path).write_bytes(encode_keys(sk, pk))
    return key_fingerprint(pk)


def read_key_file(path: Path | str) -> tuple[SecretKey, PublicKey]:
    return decode_keys(Path(path).read_bytes())
