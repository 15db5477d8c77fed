from __future__ import annotations

from collections.abc import Iterator
from contextlib import contextmanager
from contextvars import ContextVar

from app.domain.scheme import OpCounters
from app.monitoring.metrics import HOMOMORPHIC_OPERATIONS_TOTAL, WORD_OPERATIONS_TOTAL

_current: ContextVar[OpCounters | None] = ContextVar("rce_op_counters", default=None)


def _scope() -> OpCounters:
    counters = _current.get()
    if counters is None:
        counters = OpCounters()
        _current.set(counters)
    return counters


def record(op: str, *, mults: int = 0, adds: int = 0, bit_ops: int = 0) -> None:
    """Add word-level work to the executing scope."""

    counters = _scope()
    counters.word_mults += mults
    counters.word_adds += adds
    counters.bit_ops += bit_ops
    counters.per_op[op] = counters.per_op.get(op, 0) + 1
    if mults:
        WORD_OPERATIONS_TOTAL.labels(kind="mult").inc(mults)
    if adds:
        WORD_OPERATIONS_TOTAL.labels(kind="add").inc(adds)
    if bit_ops:
        WORD_OPERATIONS_TOTAL.labels(kind="bit").inc(bit_ops)


def record_homomorphic(op: str, representation: str) -> None:
    HOMOMORPHIC_OPERATIONS_TOTAL.labels(op=op, repr=representation).inc()


def op_counters() -> OpCounters:
    """Snapshot of the executing scope's counters."""

    return _scope().snapshot()


def reset_counters() -> None:
    _scope().reset()


@contextmanager
def counter_scope(merge: bool = True) -> Iterator[OpCounters]:
    """Open a fresh counting scope.

    Args:
        merge: Fold the scope's totals into the enclosing scope on exit.
    """

    parent = _scope()
    scoped = OpCounters()
    token = _current.set(scoped)
    try:
        yield scoped
    finally:
        _current.reset(token)
        if merge:
            parent.merge(scoped)
