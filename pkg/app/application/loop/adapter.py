from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from app.application.control.design import plain_controller_raw
from app.application.crypto.gsw import decrypt, encrypt, noise_of
from app.application.crypto.keys import keygen
from app.application.crypto.keystream import KeyStream
from app.application.fixed_point import decode_number, q_decode, q_encode, rescale_number
from app.core.logging import get_logger
from app.domain.control import GAIN_LAYOUT, GainSet
from app.domain.fixed_point import QNumber
from app.domain.errors import DimensionMismatch, MalformedFrame, NoiseBudgetExceeded
from app.domain.plant import INPUT_DIM, OUTPUT_DIM, STATE_DIM, LinearModel
from app.domain.protocol import Frame, MessageType
from app.domain.scheme import Params, PublicKey, ReducedCipher, SecretKey
from app.infrastructure.wire import cipher_frame, gains_frame, hello_frame, parse_ciphers
from app.monitoring.metrics import DECRYPTION_NOISE_BITS

logger = get_logger(__name__)


@dataclass(slots=True)
class AdapterState:
    """Plant-side party: keys, gains and the current plaintext interface.

    ``xhat_words`` and ``u_word`` are the rescaled controller outputs of the
    last step; they are re-encrypted with the next measurement.
    """

    params: Params
    sk: SecretKey
    pk: PublicKey
    gains: GainSet
    encryption_rng: KeyStream
    verify: bool = False
    xhat_words: list[int] = field(default_factory=lambda: [0] * STATE_DIM)
    u_word: int = 0
    y_words: list[int] = field(default_factory=lambda: [0] * OUTPUT_DIM)
    steps: int = 0
    max_noise: int = 0

    def encrypt_word(self, word: int) -> ReducedCipher:
        return encrypt(self.pk, word, self.encryption_rng)

    @property
    def xhat(self) -> NDArray[np.float64]:
        n_q, ell = self.gains.fmt.n_q, self.params.ell
        return np.array([q_decode(w, n_q, ell) for w in self.xhat_words])

    @property
    def u(self) -> float:
        return q_decode(self.u_word, self.gains.fmt.n_q, self.params.ell)


def adapter_init(
    params: Params,
    linear_model: LinearModel,
    gains: GainSet,
    rng: KeyStream,
    *,
    verify: bool = False,
) -> tuple[AdapterState, list[Frame]]:
    """Generate keys and encrypt the gains together with x_hat(0) = 0 and u(0) = 0."""

    if gains.fmt.ell != params.ell:
        raise DimensionMismatch(f"gains quantized for ell={gains.fmt.ell}, params use ell={params.ell}")
    if gains.real("F_A").shape != linear_model.A_d.shape:
        raise DimensionMismatch("gains do not match the linear model")

    sk, pk = keygen(params, rng.fork("keys"))
    state = AdapterState(
        params=params,
        sk=sk,
        pk=pk,
        gains=gains,
        encryption_rng=rng.fork("encrypt"),
        verify=verify,
    )

    gain_ciphers = [state.encrypt_word(int(w)) for name, _ in GAIN_LAYOUT for w in gains.words(name).ravel()]
    initial = [state.encrypt_word(w) for w in state.xhat_words] + [state.encrypt_word(state.u_word)]
    logger.info(
        "Adapter encrypted gains",
        extra={"rce_extra": json.dumps({"gain_ciphers": len(gain_ciphers), "initial_ciphers": len(initial)})},
    )
    return state, [hello_frame(params), gains_frame(gain_ciphers, initial)]


def _encode_outputs(state: AdapterState, y: NDArray[np.float64]) -> list[int]:
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (OUTPUT_DIM,):
        raise DimensionMismatch(f"measurement needs {OUTPUT_DIM} entries, got {y.shape}")
    return [q_encode(float(v), state.gains.fmt) for v in y]


def adapter_open(state: AdapterState, y: NDArray[np.float64]) -> Frame:
    """First signal frame: E(y(0)) only."""

    state.y_words = _encode_outputs(state, y)
    return cipher_frame(MessageType.ENC_SIGNALS_TO_CTRL, [state.encrypt_word(w) for w in state.y_words])


def adapter_signals(state: AdapterState, y: NDArray[np.float64]) -> Frame:
    """E(x_hat), E(u) of the last rescaled outputs together with E(y)."""

    state.y_words = _encode_outputs(state, y)
    words = [*state.xhat_words, state.u_word, *state.y_words]
    return cipher_frame(MessageType.ENC_SIGNALS_TO_CTRL, [state.encrypt_word(w) for w in words])


def adapter_absorb(state: AdapterState, frame: Frame) -> float:
    """Decrypt E(x_hat+), E(u+), rescale by n_q and return the input to apply.

    In verification mode the plaintext twin is evaluated on the same words
    and any disagreement aborts the run.
    """

    ciphers = parse_ciphers(frame, MessageType.ENC_RESULTS_TO_ADAPTER, state.params)
    if len(ciphers) != STATE_DIM + INPUT_DIM:
        raise MalformedFrame(f"result frame carries {len(ciphers)} ciphers, expected {STATE_DIM + INPUT_DIM}")
    raw = [decrypt(state.sk, c) for c in ciphers]

    if state.verify:
        expected_xhat, expected_u = plain_controller_raw(state.gains, state.xhat_words, state.u_word, state.y_words)
        expected = [*expected_xhat, expected_u]
        for index, (cipher, word, twin) in enumerate(zip(ciphers, raw, expected, strict=True)):
            noise = noise_of(state.sk, cipher, twin)
            state.max_noise = max(state.max_noise, noise)
            DECRYPTION_NOISE_BITS.observe(math.log2(noise) if noise else 0.0)
            if word != twin or noise >= state.params.noise_budget:
                raise NoiseBudgetExceeded(
                    f"output {index} at step {state.steps} disagrees with the plaintext twin",
                    step=state.steps,
                    output=index,
                    noise_bits=math.log2(noise) if noise else 0.0,
                )

    n_q, ell = state.gains.fmt.n_q, state.params.ell
    rescaled = [rescale_number(QNumber(word=w, frac_bits=2 * n_q, ell=ell), n_q) for w in raw]
    state.xhat_words = [number.word for number in rescaled[:STATE_DIM]]
    state.u_word = rescaled[STATE_DIM].word
    state.steps += 1
    return decode_number(rescaled[STATE_DIM])


def adapter_step(state: AdapterState, frame: Frame, y_next: NDArray[np.float64]) -> tuple[float, Frame]:
    """Absorb one result frame, then encrypt the rescaled outputs with the next measurement."""

    u_applied = adapter_absorb(state, frame)
    return u_applied, adapter_signals(state, y_next)
