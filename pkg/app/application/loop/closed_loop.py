from __future__ import annotations

import asyncio
import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

import numpy as np
from numpy.typing import NDArray

from app.application.control.design import (
    composite_gains,
    feedback_gain,
    float_controller_step,
    place_observer,
    plain_controller_step,
)
from app.application.crypto.keys import make_params
from app.application.crypto.keystream import KeyStream
from app.application.fixed_point import q_decode, q_encode
from app.application.loop.adapter import AdapterState, adapter_absorb, adapter_init, adapter_open, adapter_signals
from app.application.loop.controller import serve_controller
from app.application.loop.trace import TraceLog, TraceRow
from app.application.plant.pendulum import advance_sample, linearize, measure
from app.core.audit import FrameAuditChain
from app.core.logging import get_logger
from app.core.settings import SimulationConfig
from app.domain.control import GainSet
from app.domain.errors import ChannelClosed
from app.domain.fixed_point import QFormat
from app.domain.plant import STATE_DIM, LinearModel, PlantParams, PlantState
from app.domain.protocol import Channel, Frame
from app.domain.scheme import STANDARD_WORD_WIDTHS, Params
from app.infrastructure.csv_export import write_trajectory_csv
from app.infrastructure.transport import duplex_pair, open_stream_channel, serve_stream_channel
from app.infrastructure.wire import shutdown_frame

logger = get_logger(__name__)

FloatArray = NDArray[np.float64]


@dataclass(frozen=True, slots=True)
class LoopSetup:
    params: Params
    plant: PlantParams
    model: LinearModel
    gains: GainSet


def build_setup(config: SimulationConfig, plant: PlantParams | None = None) -> LoopSetup:
    """Scheme params, linearization, observer and composite gains for one run."""

    params = make_params(
        config.n,
        config.m,
        config.ell,
        config.m_q,
        config.n_q,
        config.noise_bound,
        allow_toy=config.ell not in STANDARD_WORD_WIDTHS,
    )
    plant = plant or PlantParams()
    model = linearize(plant, config.sample_period)
    L = place_observer(model.A_d, model.C_d, config.observer_poles, seed=config.seed)  # noqa: N806
    K = feedback_gain(config.feedback_sign)  # noqa: N806
    fmt = QFormat(m_q=config.m_q, n_q=config.n_q, ell=config.ell)
    gains = composite_gains(model.A_d, model.B_d, model.C_d, L, K, fmt)
    return LoopSetup(params=params, plant=plant, model=model, gains=gains)


@dataclass(frozen=True, slots=True)
class Snapshot:
    xhat: tuple[float, ...]
    xhat_words: tuple[int, ...] | None
    u_word: int | None


class ControlBackend(Protocol):
    def snapshot(self) -> Snapshot:
        ...

    async def update(self, y: FloatArray) -> tuple[float, tuple[int, ...] | None]:
        """Consume y(k), advance x_hat and return u(k+1) with the encoded y(k)."""
        ...

    async def finish(self) -> None:
        ...


class FloatBackend:
    """Double-precision observer and state feedback."""

    def __init__(self, setup: LoopSetup) -> None:
        self._model = setup.model
        self._L = setup.gains.L
        self._K = setup.gains.K
        self._xhat = np.zeros(STATE_DIM)
        self._u = 0.0

    def snapshot(self) -> Snapshot:
        return Snapshot(xhat=tuple(float(v) for v in self._xhat), xhat_words=None, u_word=None)

    async def update(self, y: FloatArray) -> tuple[float, tuple[int, ...] | None]:
        m = self._model
        self._xhat, self._u = float_controller_step(m.A_d, m.B_d, m.C_d, self._L, self._K, self._xhat, self._u, y)
        return self._u, None

    async def finish(self) -> None:
        return None


class FixedPointBackend:
    """Unencrypted fixed-point twin of the encrypted controller."""

    def __init__(self, setup: LoopSetup) -> None:
        self._gains = setup.gains
        self._xhat_words = [0] * STATE_DIM
        self._u_word = 0

    def snapshot(self) -> Snapshot:
        fmt = self._gains.fmt
        return Snapshot(
            xhat=tuple(q_decode(w, fmt.n_q, fmt.ell) for w in self._xhat_words),
            xhat_words=tuple(self._xhat_words),
            u_word=self._u_word,
        )

    async def update(self, y: FloatArray) -> tuple[float, tuple[int, ...] | None]:
        fmt = self._gains.fmt
        y_words = [q_encode(float(v), fmt) for v in y]
        self._xhat_words, self._u_word = plain_controller_step(self._gains, self._xhat_words, self._u_word, y_words)
        return q_decode(self._u_word, fmt.n_q, fmt.ell), tuple(y_words)

    async def finish(self) -> None:
        return None


class EncryptedBackend:
    """Adapter side of the encrypted loop; the controller sits behind ``channel``."""

    def __init__(self, state: AdapterState, channel: Channel, controller: asyncio.Future[int] | asyncio.Task[int]) -> None:
        self._state = state
        self._channel = channel
        self._controller = controller
        self._opened = False
        self.step_seconds: list[float] = []

    @property
    def state(self) -> AdapterState:
        return self._state

    def snapshot(self) -> Snapshot:
        return Snapshot(
            xhat=tuple(float(v) for v in self._state.xhat),
            xhat_words=tuple(self._state.xhat_words),
            u_word=self._state.u_word,
        )

    async def update(self, y: FloatArray) -> tuple[float, tuple[int, ...] | None]:
        frame = adapter_signals(self._state, y) if self._opened else adapter_open(self._state, y)
        self._opened = True
        started = time.perf_counter()
        await self._channel.send(frame)
        results = await self._recv()
        self.step_seconds.append(time.perf_counter() - started)
        u_next = adapter_absorb(self._state, results)
        return u_next, tuple(self._state.y_words)

    async def _recv(self) -> Frame:
        try:
            return await self._channel.recv()
        except ChannelClosed:
            if self._controller.done() and self._controller.exception() is not None:
                raise self._controller.exception() from None  # type: ignore[misc]
            raise

    async def abort(self) -> None:
        await self._channel.close()

    async def finish(self) -> None:
        try:
            await self._channel.send(shutdown_frame())
        finally:
            await self._channel.close()
        await self._controller


async def _encrypted_backend(
    config: SimulationConfig,
    setup: LoopSetup,
    audit: FrameAuditChain,
) -> tuple[EncryptedBackend, asyncio.Server | None]:
    def observe(direction: str, frame: Frame, raw: bytes) -> None:
        audit.record(direction, frame, raw)  # type: ignore[arg-type]

    server: asyncio.Server | None = None
    controller: asyncio.Future[int] | asyncio.Task[int]
    if config.transport == "inprocess":
        adapter_channel, controller_channel = duplex_pair(observer_a=observe)
        controller = asyncio.create_task(serve_controller(controller_channel))
    else:
        controller = asyncio.get_running_loop().create_future()

        async def handle(channel: Channel) -> None:
            try:
                served = await serve_controller(channel)
            except Exception as exc:  # surfaced through the future
                if not controller.done():
                    controller.set_exception(exc)
            else:
                if not controller.done():
                    controller.set_result(served)

        server, port = await serve_stream_channel(config.socket_host, config.socket_port, handle)
        adapter_channel = await open_stream_channel(config.socket_host, port, observer=observe)

    state, frames = adapter_init(
        setup.params,
        setup.model,
        setup.gains,
        KeyStream(config.seed),
        verify=config.verify,
    )
    for frame in frames:
        await adapter_channel.send(frame)
    return EncryptedBackend(state, adapter_channel, controller), server


def _disturbances(config: SimulationConfig, steps: int) -> tuple[FloatArray, FloatArray]:
    rng = np.random.default_rng(config.seed)
    eta = rng.normal(0.0, config.measurement_noise, size=(steps, 2)) if config.measurement_noise else np.zeros((steps, 2))
    xi = rng.normal(0.0, config.process_noise, size=(steps, 2)) if config.process_noise else np.zeros((steps, 2))
    return eta, xi


async def arun_closed_loop(config: SimulationConfig, plant: PlantParams | None = None) -> TraceLog:
    """Step the plant at the sample rate with one sample of protocol latency.

    At tick k the controller consumes y(k) and produces u(k+1) while the
    plant advances under u(k).
    """

    setup = build_setup(config, plant)
    steps = config.steps
    trace = TraceLog(controller=config.controller, seed=config.seed)
    audit = FrameAuditChain()
    server: asyncio.Server | None = None

    backend: ControlBackend
    if config.controller == "float":
        backend = FloatBackend(setup)
    elif config.controller == "fixed_point":
        backend = FixedPointBackend(setup)
    else:
        backend, server = await _encrypted_backend(config, setup, audit)

    eta, xi = _disturbances(config, steps)
    x = PlantState(*config.initial_state)
    u = 0.0
    logger.info(
        "Closed loop starting",
        extra={"rce_extra": json.dumps({"controller": config.controller, "transport": config.transport, "steps": steps})},
    )
    try:
        for k in range(steps):
            y = measure(x, eta[k])
            before = backend.snapshot()
            u_next, y_words = await backend.update(y)
            trace.append(
                TraceRow(
                    t=k * config.sample_period,
                    state=x.as_tuple(),
                    u=u,
                    xhat=before.xhat,
                    y=(float(y[0]), float(y[1])),
                    xhat_words=before.xhat_words,
                    u_word=before.u_word,
                    y_words=y_words,
                ),
            )
            x = advance_sample(x, u, config.sample_period, config.substeps, setup.plant, xi[k])
            u = u_next
        await backend.finish()
    except BaseException:
        if isinstance(backend, EncryptedBackend):
            await backend.abort()
        raise
    finally:
        if server is not None:
            server.close()
            await server.wait_closed()

    if isinstance(backend, EncryptedBackend):
        trace.audit_head = audit.head
        trace.step_seconds = backend.step_seconds
        trace.max_noise = backend.state.max_noise
    theta1, theta2 = trace.max_angles_after(min(5.0, config.duration_s / 2))
    logger.info(
        "Closed loop finished",
        extra={"rce_extra": json.dumps({"steps": len(trace), "late_max_theta1": theta1, "late_max_theta2": theta2})},
    )
    return trace


def run_closed_loop(
    config: SimulationConfig,
    *,
    trajectory_csv: Path | str | None = None,
    plant: PlantParams | None = None,
) -> TraceLog:
    trace = asyncio.run(arun_closed_loop(config, plant))
    if trajectory_csv is not None:
        write_trajectory_csv(trajectory_csv, trace)
    return trace
