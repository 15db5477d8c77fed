from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Literal

from app.core.logging import get_logger
from app.domain.protocol import Frame

logger = get_logger(__name__)

GENESIS_HASH = "0" * 64

Direction = Literal["sent", "received"]


@dataclass(frozen=True, slots=True)
class AuditEntry:
    index: int
    direction: Direction
    msg_type: int
    length: int
    frame_digest: str
    prev_hash: str
    hash: str


@dataclass(slots=True)
class FrameAuditChain:
    """Tamper-evident SHA-256 chain over the frames an adapter exchanges.

    Every entry links to the previous one, so the head digest fingerprints the
    whole run: equal seeds give equal heads regardless of transport.
    """

    entries: list[AuditEntry] = field(default_factory=list)

    @property
    def head(self) -> str:
        return self.entries[-1].hash if self.entries else GENESIS_HASH

    def _calculate_hash(self, prev_hash: str, payload: dict[str, object]) -> str:
        message = f"{prev_hash}|{json.dumps(payload, sort_keys=True)}"
        return hashlib.sha256(message.encode("utf-8")).hexdigest()

    def _payload(self, index: int, direction: Direction, msg_type: int, length: int, digest: str) -> dict[str, object]:
        return {
            "index": index,
            "direction": direction,
            "msg_type": msg_type,
            "length": length,
            "frame_digest": digest,
        }

    def record(self, direction: Direction, frame: Frame, raw: bytes) -> AuditEntry:
        """Append one frame; ``raw`` is its exact wire encoding."""

        index = len(self.entries)
        digest = hashlib.sha256(raw).hexdigest()
        prev_hash = self.head
        current = self._calculate_hash(
            prev_hash,
            self._payload(index, direction, int(frame.msg_type), frame.length, digest),
        )
        entry = AuditEntry(
            index=index,
            direction=direction,
            msg_type=int(frame.msg_type),
            length=frame.length,
            frame_digest=digest,
            prev_hash=prev_hash,
            hash=current,
        )
        self.entries.append(entry)
        return entry

    def verify(self) -> bool:
        """Re-walk the chain and check every link and hash."""

        prev_hash = GENESIS_HASH
        for entry in self.entries:
            if entry.prev_hash != prev_hash:
                logger.error(
                    "Frame audit chain broken",
                    extra={"rce_extra": json.dumps({"index": entry.index})},
                )
                return False
            expected = self._calculate_hash(
                prev_hash,
                self._payload(entry.index, entry.direction, entry.msg_type, entry.length, entry.frame_digest),
            )
            if expected != entry.hash:
                logger.error(
                    "Frame audit hash mismatch",
                    extra={"rce_extra": json.dumps({"index": entry.index})},
                )
                return False
            prev_hash = entry.hash
        return True
