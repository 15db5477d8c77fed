from __future__ import annotations

import asyncio
import json
from collections.abc import Awaitable, Callable

from app.core.logging import get_logger
from app.domain.errors import ChannelClosed
from app.domain.protocol import FRAME_HEADER_SIZE, Frame
from app.infrastructure.wire import decode_frame, decode_header, encode_frame
from app.monitoring.metrics import FRAME_BYTES_TOTAL, FRAMES_TOTAL

logger = get_logger(__name__)

_CLOSED = None

FrameObserver = Callable[[str, Frame, bytes], None]


def _count(direction: str, frame: Frame) -> None:
    name = frame.msg_type.name
    FRAMES_TOTAL.labels(msg_type=name, direction=direction).inc()
    FRAME_BYTES_TOTAL.labels(msg_type=name).inc(frame.length)


class InProcessChannel:
    """One endpoint of an in-memory duplex channel.

    Frames still travel as their wire encoding so both transports exercise
    the same codec.
    """

    def __init__(
        self,
        inbox: asyncio.Queue[bytes | None],
        outbox: asyncio.Queue[bytes | None],
        observer: FrameObserver | None = None,
    ) -> None:
        self._inbox = inbox
        self._outbox = outbox
        self._observer = observer
        self._closed = False

    async def send(self, frame: Frame) -> None:
        if self._closed:
            raise ChannelClosed("send on a closed channel")
        raw = encode_frame(frame)
        _count("sent", frame)
        if self._observer is not None:
            self._observer("sent", frame, raw)
        await self._outbox.put(raw)

    async def recv(self) -> Frame:
        raw = await self._inbox.get()
        if raw is _CLOSED:
            self._closed = True
            raise ChannelClosed("peer closed the channel")
        frame = decode_frame(raw)
        _count("received", frame)
        if self._observer is not None:
            self._observer("received", frame, raw)
        return frame

    async def close(self) -> None:
        if not self._closed:
            self._closed = True
            await self._outbox.put(_CLOSED)


def duplex_pair(
    observer_a: FrameObserver | None = None,
    observer_b: FrameObserver | None = None,
) -> tuple[InProcessChannel, InProcessChannel]:
    a_to_b: asyncio.Queue[bytes | None] = asyncio.Queue()
    b_to_a: asyncio.Queue[bytes | None] = asyncio.Queue()
    return (
        InProcessChannel(inbox=b_to_a, outbox=a_to_b, observer=observer_a),
        InProcessChannel(inbox=a_to_b, outbox=b_to_a, observer=observer_b),
    )


class StreamChannel:
    """Length-prefixed frames over an asyncio byte stream."""

    def __init__(
        self,
        reader: asyncio.StreamReader,
        writer: asyncio.StreamWriter,
        observer: FrameObserver | None = None,
    ) -> None:
        self._reader = reader
        self._writer = writer
        self._observer = observer

    async def send(self, frame: Frame) -> None:
        raw = encode_frame(frame)
        _count("sent", frame)
        if self._observer is not None:
            self._observer("sent", frame, raw)
        try:
            self._writer.write(raw)
            await self._writer.drain()
        except (ConnectionError, RuntimeError) as exc:
            raise ChannelClosed(f"send failed: {exc}") from exc

    async def recv(self) -> Frame:
        try:
            header = await self._reader.readexactly(FRAME_HEADER_SIZE)
            _, length = decode_header(header)
            payload = await self._reader.readexactly(length)
        except (asyncio.IncompleteReadError, ConnectionError) as exc:
            raise ChannelClosed("peer closed the stream") from exc
        raw = header + payload
        frame = decode_frame(raw)
        _count("received", frame)
        if self._observer is not None:
            self._observer("received", frame, raw)
        return frame

    async def close(self) -> None:
        if self._writer.is_closing():
            return
        self._writer.close()
        try:
            await self._writer.wait_closed()
        except ConnectionError:
            pass


async def open_stream_channel(host: str, port: int, observer: FrameObserver | None = None) -> StreamChannel:
    try:
        reader, writer = await asyncio.open_connection(host, port)
    except OSError as exc:
        raise ChannelClosed(f"cannot connect to {host}:{port}: {exc}", host=host, port=port) from exc
    logger.info("Connected to controller", extra={"rce_extra": json.dumps({"host": host, "port": port})})
    return StreamChannel(reader, writer, observer)


async def serve_stream_channel(
    host: str,
    port: int,
    handler: Callable[[StreamChannel], Awaitable[None]],
) -> tuple[asyncio.Server, int]:
    """Listen for one adapter connection; returns the server and its bound port."""

    async def _on_connect(reader: asyncio.StreamReader, writer: asyncio.StreamWriter) -> None:
        channel = StreamChannel(reader, writer)
        try:
            await handler(channel)
        finally:
            await channel.close()

    server = await asyncio.start_server(_on_connect, host, port)
    bound = int(server.sockets[0].getsockname()[1])
    logger.info("Controller listening", extra={"rce_extra": json.dumps({"host": host, "port": bound})})
    return server, bound
