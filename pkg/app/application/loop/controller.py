from __future__ import annotations

import json
import time
from dataclasses import dataclass

from app.application.crypto.counters import counter_scope
from app.application.crypto.gsw import to_full
from app.application.crypto.hom_ops import enc_mat_vec
from app.core.logging import get_logger
from app.domain.control import GAIN_LAYOUT, INPUT_UPDATE_BLOCKS, STATE_UPDATE_BLOCKS, gain_cipher_count
from app.domain.errors import ChannelClosed, MalformedFrame
from app.domain.plant import INPUT_DIM, OUTPUT_DIM, STATE_DIM
from app.domain.protocol import Channel, Frame, MessageType
from app.domain.scheme import Cipher, Params, ReducedCipher
from app.infrastructure.wire import cipher_frame, parse_ciphers, parse_gains, parse_hello
from app.monitoring.metrics import CONTROLLER_STEP_DURATION_SECONDS

logger = get_logger(__name__)

SIGNAL_COUNT = STATE_DIM + INPUT_DIM + OUTPUT_DIM
RESULT_COUNT = STATE_DIM + INPUT_DIM


@dataclass(frozen=True, slots=True)
class ControllerState:
    """Everything the remote controller holds: ciphers and dimensions only.

    ``rows`` are the six composite gain rows in bit form, five for the state
    update followed by one for the input update, each over the stacked
    signal vector [x_hat, u, y].
    """

    params: Params
    rows: tuple[tuple[Cipher, ...], ...]
    xhat: tuple[ReducedCipher, ...]
    u: ReducedCipher


def _split_blocks(gain_ciphers: list[ReducedCipher]) -> dict[str, list[list[ReducedCipher]]]:
    blocks: dict[str, list[list[ReducedCipher]]] = {}
    cursor = 0
    for name, (rows, cols) in GAIN_LAYOUT:
        block = []
        for _ in range(rows):
            block.append(gain_ciphers[cursor : cursor + cols])
            cursor += cols
        blocks[name] = block
    return blocks


def controller_on_hello(frame: Frame) -> Params:
    params = parse_hello(frame)
    logger.info(
        "Controller received parameters",
        extra={"rce_extra": json.dumps({"n": params.n, "ell": params.ell, "N": params.N})},
    )
    return params


def controller_on_gains(frame: Frame, params: Params) -> ControllerState:
    """Convert every gain cipher to bit form once; signals stay reduced."""

    gain_ciphers, initial = parse_gains(frame, params)
    if len(gain_ciphers) != gain_cipher_count():
        raise MalformedFrame(f"expected {gain_cipher_count()} gain ciphers, got {len(gain_ciphers)}")
    if len(initial) != STATE_DIM + INPUT_DIM:
        raise MalformedFrame(f"expected {STATE_DIM + INPUT_DIM} initial signal ciphers, got {len(initial)}")

    blocks = _split_blocks(gain_ciphers)
    rows: list[tuple[Cipher, ...]] = []
    for group, count in ((STATE_UPDATE_BLOCKS, STATE_DIM), (INPUT_UPDATE_BLOCKS, INPUT_DIM)):
        for r in range(count):
            rows.append(tuple(to_full(c) for name in group for c in blocks[name][r]))

    return ControllerState(
        params=params,
        rows=tuple(rows),
        xhat=tuple(initial[:STATE_DIM]),
        u=initial[STATE_DIM],
    )


def controller_step(state: ControllerState, frame: Frame) -> Frame:
    """E(x_hat+), E(u+) from E(x_hat), E(u), E(y); products carry 2 n_q fraction bits.

    The first signal frame carries E(y) only and reuses the initial E(x_hat),
    E(u) that arrived with the gains.
    """

    ciphers = parse_ciphers(frame, MessageType.ENC_SIGNALS_TO_CTRL, state.params)
    if len(ciphers) == OUTPUT_DIM:
        signals = [*state.xhat, state.u, *ciphers]
    elif len(ciphers) == SIGNAL_COUNT:
        signals = ciphers
    else:
        raise MalformedFrame(f"signal frame carries {len(ciphers)} ciphers, expected {OUTPUT_DIM} or {SIGNAL_COUNT}")

    results = enc_mat_vec(state.rows, signals)
    return cipher_frame(MessageType.ENC_RESULTS_TO_ADAPTER, results)


async def serve_controller(channel: Channel) -> int:
    """Answer signal frames until SHUTDOWN; returns the number of steps served."""

    params = controller_on_hello(await channel.recv())
    state = controller_on_gains(await channel.recv(), params)
    steps = 0
    try:
        while True:
            frame = await channel.recv()
            if frame.msg_type == MessageType.SHUTDOWN:
                break
            started = time.perf_counter()
            with counter_scope() as counters:
                reply = controller_step(state, frame)
            CONTROLLER_STEP_DURATION_SECONDS.observe(time.perf_counter() - started)
            if counters.word_mults:
                logger.error(
                    "Controller step multiplied words",
                    extra={"rce_extra": json.dumps({"word_mults": counters.word_mults})},
                )
            await channel.send(reply)
            steps += 1
    except ChannelClosed:
        logger.info("Adapter went away", extra={"rce_extra": json.dumps({"steps": steps})})
    finally:
        await channel.close()
    return steps
