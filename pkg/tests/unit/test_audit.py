from __future__ import annotations

from dataclasses import replace

from app.core.audit import GENESIS_HASH, FrameAuditChain
from app.domain.protocol import Frame, MessageType
from app.infrastructure.wire import encode_frame, shutdown_frame

SIGNALS = Frame(MessageType.ENC_SIGNALS_TO_CTRL, b"\x00\x00\x00\x00")


def _chain() -> FrameAuditChain:
    chain = FrameAuditChain()
    for direction, frame in (("sent", SIGNALS), ("received", SIGNALS), ("sent", shutdown_frame())):
        chain.record(direction, frame, encode_frame(frame))
    return chain


def test_empty_chain_head():
    assert FrameAuditChain().head == GENESIS_HASH
    assert FrameAuditChain().verify()


def test_entries_link():
    chain = _chain()
    assert chain.verify()
    assert chain.entries[0].prev_hash == GENESIS_HASH
    assert chain.entries[2].prev_hash == chain.entries[1].hash
    assert chain.head == chain.entries[-1].hash
    assert chain.entries[2].length == 0


def test_same_frames_same_head():
    assert _chain().head == _chain().head


def test_direction_changes_head():
    other = FrameAuditChain()
    for direction, frame in (("received", SIGNALS), ("received", SIGNALS), ("sent", shutdown_frame())):
        other.record(direction, frame, encode_frame(frame))
    assert other.head != _chain().head


def test_tampered_entry_detected():
    chain = _chain()
    chain.entries[1] = replace(chain.entries[1], frame_digest="0" * 64)
    assert not chain.verify()


def test_broken_link_detected():
    chain = _chain()
    chain.entries[2] = replace(chain.entries[2], prev_hash=GENESIS_HASH)
    assert not chain.verify()
