from __future__ import annotations

import csv

import numpy as np
import pytest

from app.application.control.design import plain_controller_step
from app.application.crypto.counters import counter_scope
from app.application.crypto.gsw import encrypt
from app.application.crypto.keys import centered
from app.application.crypto.keystream import KeyStream
from app.application.loop.adapter import adapter_absorb, adapter_init, adapter_open, adapter_signals
from app.application.loop.closed_loop import build_setup, run_closed_loop
from app.application.loop.controller import controller_on_gains, controller_on_hello, controller_step
from app.application.plant.pendulum import measure
from app.core.settings import Settings
from app.domain.errors import MalformedFrame
from app.domain.plant import PlantState
from app.domain.protocol import MessageType
from app.infrastructure.csv_export import TRAJECTORY_COLUMNS
from app.infrastructure.wire import cipher_frame, parse_gains

START = PlantState(0.0289, 0.0669, 0.1156, 0.0049, 0.0)


@pytest.fixture(scope="module")
def setup():
    return build_setup(Settings().simulation())


@pytest.fixture(scope="module")
def session(setup):
    state, frames = adapter_init(setup.params, setup.model, setup.gains, KeyStream(7), verify=True)
    params = controller_on_hello(frames[0])
    controller = controller_on_gains(frames[1], params)
    return state, frames, controller


class TestProtocolRound:
    def test_gains_frame_layout(self, session, setup):
        _, frames, _ = session
        assert [f.msg_type for f in frames] == [MessageType.HELLO_PARAMS, MessageType.ENC_GAINS]
        gains, initial = parse_gains(frames[1], setup.params)
        assert (len(gains), len(initial)) == (48, 6)

    def test_no_key_material_in_init_frames(self, session):
        state, frames, _ = session
        t_bytes = state.sk.s[1:].astype("<u8").tobytes()
        for frame in frames:
            assert t_bytes not in frame.payload

    def test_no_plaintext_or_key_words_in_signal_and_result_frames(self, setup):
        state, frames = adapter_init(setup.params, setup.model, setup.gains, KeyStream(13), verify=True)
        controller = controller_on_gains(frames[1], controller_on_hello(frames[0]))

        exchanged, known_words = [], set()
        for k, scale in enumerate((1.0, 0.8, -0.6, 0.3)):
            y = measure(START) * scale
            signals = adapter_open(state, y) if k == 0 else adapter_signals(state, y)
            known_words.update([*state.y_words, *state.xhat_words, state.u_word])
            reply = controller_step(controller, signals)
            adapter_absorb(state, reply)
            known_words.update([*state.xhat_words, state.u_word])
            exchanged += [signals, reply]

        assert {f.msg_type for f in exchanged} == {MessageType.ENC_SIGNALS_TO_CTRL, MessageType.ENC_RESULTS_TO_ADAPTER}
        # s[0] = 1 is public; zero words are indistinguishable from padding
        secret_words = {int(w) for w in state.sk.s[1:]} | {w for w in known_words if w}
        needles = [int(w).to_bytes(8, "little") for w in secret_words]
        for frame in exchanged:
            for needle in needles:
                assert needle not in frame.payload

    def test_same_seed_same_frames(self, setup, session):
        _, frames, _ = session
        _, again = adapter_init(setup.params, setup.model, setup.gains, KeyStream(7), verify=True)
        assert again == frames

    def test_two_steps_match_plaintext_twin(self, setup):
        state, frames = adapter_init(setup.params, setup.model, setup.gains, KeyStream(11), verify=True)
        controller = controller_on_gains(frames[1], controller_on_hello(frames[0]))

        y0 = measure(START)
        opening = adapter_open(state, y0)
        assert len(opening.payload) > 0
        with counter_scope(merge=False) as counters:
            reply = controller_step(controller, opening)
        assert counters.word_mults == 0

        expected_xhat, expected_u = plain_controller_step(setup.gains, [0] * 5, 0, list(state.y_words))
        u_applied = adapter_absorb(state, reply)
        assert state.xhat_words == expected_xhat
        assert state.u_word == expected_u
        assert u_applied == state.u == centered(expected_u, 64) / 2**22

        y1 = measure(START) * 0.9
        previous = (list(state.xhat_words), state.u_word)
        signals = adapter_signals(state, y1)
        reply = controller_step(controller, signals)
        expected_xhat, expected_u = plain_controller_step(setup.gains, *previous, list(state.y_words))
        adapter_absorb(state, reply)
        assert state.xhat_words == expected_xhat
        assert state.u_word == expected_u
        assert state.steps == 2
        assert 0 < state.max_noise < setup.params.noise_budget

    def test_result_count_checked(self, setup, session):
        state, _, controller = session
        stray = encrypt(state.pk, 0, KeyStream("stray"))
        with pytest.raises(MalformedFrame):
            adapter_absorb(state, cipher_frame(MessageType.ENC_RESULTS_TO_ADAPTER, [stray] * 5))
        with pytest.raises(MalformedFrame):
            controller_step(controller, cipher_frame(MessageType.ENC_SIGNALS_TO_CTRL, [stray] * 3))


def _config(**fields):
    return Settings(duration_s=0.2, seed=5, **fields).simulation()


class TestClosedLoop:
    def test_transports_agree(self):
        inprocess = run_closed_loop(_config(verify=True))
        socket = run_closed_loop(_config(verify=True, transport="socket"))
        assert len(inprocess) == 20
        assert inprocess.word_trace() == socket.word_trace()
        assert inprocess.audit_head == socket.audit_head is not None

    def test_encrypted_matches_fixed_point(self):
        encrypted = run_closed_loop(_config(verify=True))
        twin = run_closed_loop(_config(controller="fixed_point"))
        assert encrypted.word_trace() == twin.word_trace()
        assert [r.state for r in encrypted.rows] == [r.state for r in twin.rows]

    def test_repeatable(self):
        first = run_closed_loop(_config())
        second = run_closed_loop(_config())
        assert first.word_trace() == second.word_trace()
        assert first.audit_head == second.audit_head

    def test_float_controller_has_no_words(self):
        trace = run_closed_loop(_config(controller="float"))
        assert trace.audit_head is None
        assert all(words == (None, None, None) for words in trace.word_trace())

    def test_trajectory_csv(self, tmp_path):
        path = tmp_path / "trajectory.csv"
        trace = run_closed_loop(_config(controller="fixed_point"), trajectory_csv=path)
        with path.open(newline="") as handle:
            rows = list(csv.reader(handle))
        assert tuple(rows[0]) == TRAJECTORY_COLUMNS
        assert len(rows) == len(trace) + 1
        assert float(rows[1][1]) == START.theta1
        assert float(rows[2][0]) == pytest.approx(0.01)


@pytest.mark.slow
@pytest.mark.parametrize("controller", ["float", "encrypted"])
def test_ten_seconds_stabilize(controller):
    trace = run_closed_loop(Settings(controller=controller, verify=controller == "encrypted").simulation())
    assert len(trace) == 1000
    assert trace.stabilized(5.0, 0.01)
    assert np.all(np.isfinite([row.u for row in trace.rows]))


@pytest.mark.slow
def test_thousand_steps_word_identical_to_twin():
    encrypted = run_closed_loop(Settings(seed=1).simulation())
    twin = run_closed_loop(Settings(seed=1, controller="fixed_point").simulation())
    assert len(encrypted) == len(twin) == 1000
    assert encrypted.word_trace() == twin.word_trace()
