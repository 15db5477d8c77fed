from __future__ import annotations

import json
import time
from collections.abc import Callable, Sequence
from typing import Any

from app.application.crypto import hom_ops
from app.application.crypto.counters import counter_scope
from app.application.crypto.gsw import encrypt, to_full
from app.application.crypto.keys import keygen, make_params
from app.application.crypto.keystream import KeyStream
from app.core.logging import get_logger
from app.domain.scheme import Cipher, Params, ReducedCipher

logger = get_logger(__name__)

BENCH_OPS = ("add", "mul", "scalar_mul", "scalar_add")
REPRESENTATIONS = ("full", "reduced")


def _bytes(*operands: Cipher | ReducedCipher) -> int:
    return sum(o.bits.nbytes if isinstance(o, Cipher) else o.words.nbytes for o in operands)


def _operation(op: str, representation: str, c1: ReducedCipher, c2: ReducedCipher, alpha: int) -> Callable[[], Any]:
    f1, f2 = to_full(c1), to_full(c2)
    table: dict[tuple[str, str], Callable[[], Any]] = {
        ("add", "reduced"): lambda: hom_ops.add(c1, c2),
        ("mul", "reduced"): lambda: hom_ops.mul(f1, c2),
        ("scalar_mul", "reduced"): lambda: hom_ops.scalar_mul(alpha, c1),
        ("scalar_add", "reduced"): lambda: hom_ops.scalar_add(alpha, c1),
        ("add", "full"): lambda: hom_ops.add_full(f1, f2),
        ("mul", "full"): lambda: hom_ops.mul_full(f1, f2),
        ("scalar_mul", "full"): lambda: hom_ops.scalar_mul_full(alpha, f1),
        ("scalar_add", "full"): lambda: hom_ops.scalar_add_full(alpha, f1),
    }
    return table[(op, representation)]


def _operands(op: str, representation: str, c1: ReducedCipher, c2: ReducedCipher) -> tuple[Cipher | ReducedCipher, ...]:
    binary = op in ("add", "mul")
    if representation == "full":
        return (to_full(c1), to_full(c2)) if binary else (to_full(c1),)
    if op == "mul":
        return (to_full(c1), c2)
    return (c1, c2) if binary else (c1,)


def bench_params(n: int, ell: int) -> Params:
    # one integer and one fraction bit keep every sweep width valid
    return make_params(n, n + 1, ell, 1, 1, 1)


def run_bench(
    ops: Sequence[str] = BENCH_OPS,
    ells: Sequence[int] = (8, 16, 32),
    representations: Sequence[str] = REPRESENTATIONS,
    *,
    n: int = 2,
    seed: int = 0,
) -> list[dict[str, Any]]:
    """One counter-instrumented evaluation per (op, repr, ell).

    Returns rows with op, repr, n, ell, word_mults, word_adds, bit_ops,
    wall_ns and mem_bytes.
    """

    rows: list[dict[str, Any]] = []
    root = KeyStream(f"bench/{seed}")
    for ell in ells:
        params = bench_params(n, ell)
        sk, pk = keygen(params, root.fork(f"keys/{ell}"))
        rng = root.fork(f"draws/{ell}")
        c1 = encrypt(pk, 3, rng)
        c2 = encrypt(pk, 2, rng)
        for op in ops:
            for representation in representations:
                run = _operation(op, representation, c1, c2, alpha=5)
                with counter_scope(merge=False) as counters:
                    started = time.perf_counter_ns()
                    result = run()
                    wall_ns = time.perf_counter_ns() - started
                rows.append(
                    {
                        "op": op,
                        "repr": representation,
                        "n": params.n,
                        "ell": ell,
                        "word_mults": counters.word_mults,
                        "word_adds": counters.word_adds,
                        "bit_ops": counters.bit_ops,
                        "wall_ns": wall_ns,
                        "mem_bytes": _bytes(*_operands(op, representation, c1, c2), result),
                    },
                )
        logger.info("Benchmarked word width", extra={"rce_extra": json.dumps({"ell": ell, "n": n})})
    return rows


def bench_controller_step(seed: int = 0) -> dict[str, Any]:
    """Wall time and counters of one encrypted controller step at the default geometry."""

    # imported here so the primitive sweep does not pull in the plant stack
    from app.application.loop.adapter import adapter_init, adapter_open
    from app.application.loop.closed_loop import build_setup
    from app.application.loop.controller import controller_on_gains, controller_on_hello, controller_step
    from app.application.plant.pendulum import measure
    from app.core.settings import Settings
    from app.domain.plant import PlantState

    config = Settings(seed=seed).simulation()  # type: ignore[call-arg]
    setup = build_setup(config)
    state, (hello, gains) = adapter_init(setup.params, setup.model, setup.gains, KeyStream(seed))
    params = controller_on_hello(hello)
    controller = controller_on_gains(gains, params)
    frame = adapter_open(state, measure(PlantState(*config.initial_state)))

    with counter_scope(merge=False) as counters:
        started = time.perf_counter_ns()
        reply = controller_step(controller, frame)
        wall_ns = time.perf_counter_ns() - started
    return {
        "op": "controller_step",
        "repr": "reduced",
        "n": params.n,
        "ell": params.ell,
        "word_mults": counters.word_mults,
        "word_adds": counters.word_adds,
        "bit_ops": counters.bit_ops,
        "wall_ns": wall_ns,
        "mem_bytes": len(frame.payload) + len(reply.payload),
    }
