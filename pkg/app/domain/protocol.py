from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import Protocol

FRAME_MAGIC = b"RCFR"
FRAME_HEADER_SIZE = 9  # magic (4) + msg_type (1) + payload length (4)


class MessageType(IntEnum):
    HELLO_PARAMS = 0
    ENC_GAINS = 1
    ENC_SIGNALS_TO_CTRL = 2
    ENC_RESULTS_TO_ADAPTER = 3
    SHUTDOWN = 4


@dataclass(frozen=True, slots=True)
class Frame:
    """One length-prefixed message exchanged between adapter and controller."""

    msg_type: MessageType
    payload: bytes = b""

    @property
    def length(self) -> int:
        return len(self.payload)


class Channel(Protocol):
    """Bidirectional frame transport between the two parties.

    Implementations must deliver frames in order and raise ``ChannelClosed``
    from ``recv`` once the peer has gone away.
    """

    async def send(self, frame: Frame) -> None:
        ...

    async def recv(self) -> Frame:
        ...

    async def close(self) -> None:
        ...
