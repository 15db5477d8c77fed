from __future__ import annotations

import json
from collections.abc import Sequence

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import qr
from scipy.signal import place_poles

from app.application.fixed_point import q_add_plain, q_encode, q_mul_plain, rescale
from app.core.logging import get_logger
from app.domain.control import (
    GAIN_LAYOUT,
    INPUT_UPDATE_BLOCKS,
    PUBLISHED_FEEDBACK_GAIN,
    STATE_UPDATE_BLOCKS,
    GainSet,
)
from app.domain.errors import DimensionMismatch, NotObservable, OutOfRange, PlacementFailed
from app.domain.fixed_point import QFormat
from app.domain.scheme import Words

logger = get_logger(__name__)

RANK_TOLERANCE = 1e-10
POLY_TOLERANCE = 1e-8
MAX_PLACEMENT_ATTEMPTS = 10
CONDITION_LIMIT = 1e12

FloatArray = NDArray[np.float64]


def char_poly(matrix: FloatArray) -> FloatArray:
    """Monic characteristic polynomial, highest degree first (Faddeev-LeVerrier)."""

    matrix = np.asarray(matrix, dtype=np.float64)
    k = matrix.shape[0]
    if matrix.shape != (k, k):
        raise DimensionMismatch(f"char_poly needs a square matrix, got {matrix.shape}")
    coefficients = np.zeros(k + 1)
    coefficients[0] = 1.0
    identity = np.eye(k)
    current = np.zeros((k, k))
    for step in range(1, k + 1):
        current = matrix @ current + coefficients[step - 1] * identity
        coefficients[step] = -np.trace(matrix @ current) / step
    return coefficients


def numeric_rank(matrix: FloatArray, tol: float = RANK_TOLERANCE) -> int:
    """Rank from a column-pivoted QR factorization."""

    _, r, _ = qr(np.asarray(matrix, dtype=np.float64), mode="economic", pivoting=True)
    diagonal = np.abs(np.diag(r))
    if diagonal.size == 0 or diagonal[0] == 0.0:
        return 0
    return int(np.sum(diagonal > tol * diagonal[0]))


def observability_matrix(A: FloatArray, C: FloatArray) -> FloatArray:  # noqa: N803
    blocks = [C]
    for _ in range(A.shape[0] - 1):
        blocks.append(blocks[-1] @ A)
    return np.vstack(blocks)


def _matches_target(A: FloatArray, C: FloatArray, L: FloatArray, target: FloatArray) -> bool:  # noqa: N803
    return bool(np.max(np.abs(char_poly(A - L @ C) - target)) < POLY_TOLERANCE)


def _ackermann_dual(
    A: FloatArray,  # noqa: N803
    C: FloatArray,  # noqa: N803
    target: FloatArray,
    rng: np.random.Generator,
) -> FloatArray | None:
    """One Heymann attempt: collapse the outputs with a random v, then Ackermann."""

    n = A.shape[0]
    v = rng.standard_normal(C.shape[0])
    b = C.T @ v
    At = A.T  # noqa: N806
    columns = [b]
    for _ in range(n - 1):
        columns.append(At @ columns[-1])
    W = np.column_stack(columns)  # noqa: N806
    if np.linalg.cond(W) > CONDITION_LIMIT:
        return None

    phi = np.zeros((n, n))
    for coefficient in target:
        phi = phi @ At + coefficient * np.eye(n)
    last_row = np.linalg.solve(W, np.eye(n))[-1]
    k = last_row @ phi
    return np.outer(k, v)


def place_observer(
    A_d: FloatArray,  # noqa: N803
    C_d: FloatArray,  # noqa: N803
    poles: Sequence[float],
    *,
    seed: int = 0,
    method: str = "auto",
) -> FloatArray:
    """Observer gain L with eig(A_d - L C_d) = poles.

    Args:
        method: 'auto' tries scipy's robust placement on the dual system and
            falls back to randomized single-output Ackermann; 'ackermann'
            uses only the latter.
    """

    A = np.atleast_2d(np.asarray(A_d, dtype=np.float64))  # noqa: N806
    C = np.atleast_2d(np.asarray(C_d, dtype=np.float64))  # noqa: N806
    n = A.shape[0]
    if len(poles) != n or C.shape[1] != n:
        raise DimensionMismatch(f"need {n} poles and {n} columns in C, got {len(poles)} and {C.shape[1]}")
    if numeric_rank(observability_matrix(A, C)) < n:
        raise NotObservable(f"observability matrix has rank < {n}")

    target = np.real(np.poly(np.asarray(poles, dtype=np.float64)))

    if method == "auto":
        try:
            placed = place_poles(A.T, C.T, np.asarray(poles, dtype=np.float64))
            L = placed.gain_matrix.T  # noqa: N806
            if _matches_target(A, C, L, target):
                return L
        except (ValueError, np.linalg.LinAlgError) as exc:
            logger.info(
                "Robust placement unavailable, using Ackermann",
                extra={"rce_extra": json.dumps({"reason": str(exc)})},
            )

    rng = np.random.default_rng(seed)
    for attempt in range(MAX_PLACEMENT_ATTEMPTS):
        L = _ackermann_dual(A, C, target, rng)  # noqa: N806
        if L is not None and _matches_target(A, C, L, target):
            return L
        logger.info(
            "Pole placement attempt rejected",
            extra={"rce_extra": json.dumps({"attempt": attempt})},
        )
    raise PlacementFailed(f"no observer gain met the tolerance after {MAX_PLACEMENT_ATTEMPTS} attempts")


def feedback_gain(sign: int = -1) -> FloatArray:
    """Published state-feedback gain with the sign convention applied, 1 x 5."""

    if sign not in (-1, 1):
        raise ValueError(f"feedback sign must be -1 or 1, got {sign}")
    return sign * np.array([PUBLISHED_FEEDBACK_GAIN])


def _quantize(name: str, values: FloatArray, fmt: QFormat) -> Words:
    try:
        return np.array([[q_encode(float(v), fmt) for v in row] for row in values], dtype=np.uint64)
    except OutOfRange as exc:
        raise OutOfRange(f"gain {name} leaves the Q{fmt.m_q}.{fmt.n_q} range: {exc}", gain=name) from exc


def composite_gains(
    A_d: FloatArray,  # noqa: N803
    B_d: FloatArray,  # noqa: N803
    C_d: FloatArray,  # noqa: N803
    L: FloatArray,  # noqa: N803
    K: FloatArray,  # noqa: N803
    fmt: QFormat,
) -> GainSet:
    """Fold K into the observer update so both outputs are affine in (x_hat, u, y)."""

    L = np.asarray(L, dtype=np.float64)  # noqa: N806
    K = np.atleast_2d(np.asarray(K, dtype=np.float64))  # noqa: N806
    F_A = A_d - L @ C_d  # noqa: N806
    composites = {
        "F_A": F_A,
        "F_B": np.asarray(B_d, dtype=np.float64),
        "F_L": L,
        "K_A": K @ F_A,
        "K_B": K @ B_d,
        "K_L": K @ L,
    }
    for name, shape in GAIN_LAYOUT:
        if composites[name].shape != shape:
            raise DimensionMismatch(f"{name} has shape {composites[name].shape}, expected {shape}")

    quantized = {name: _quantize(name, composites[name], fmt) for name, _ in GAIN_LAYOUT}
    largest = max(float(np.max(np.abs(v))) for v in composites.values())
    logger.info(
        "Built composite gains",
        extra={"rce_extra": json.dumps({"max_abs_gain": largest, "q_format": f"Q{fmt.m_q}.{fmt.n_q}"})},
    )
    return GainSet(L=L, K=K, composites=composites, quantized=quantized, fmt=fmt, meta={"max_abs_gain": largest})


def _stack_signals(xhat: Sequence[int], u: int, y: Sequence[int]) -> list[int]:
    signals = [int(w) for w in xhat] + [int(u)] + [int(w) for w in y]
    if len(signals) != 8:
        raise DimensionMismatch(f"controller needs 5 + 1 + 2 signals, got {len(signals)}")
    return signals


def _affine_words(rows: Words, signals: list[int], ell: int) -> list[int]:
    out = []
    for row in rows:
        acc = 0
        for gain, signal in zip(row, signals, strict=True):
            acc = q_add_plain(acc, q_mul_plain(int(gain), signal, ell), ell)
        out.append(acc)
    return out


def plain_controller_raw(
    gains: GainSet,
    xhat_words: Sequence[int],
    u_word: int,
    y_words: Sequence[int],
) -> tuple[list[int], int]:
    """Fixed-point controller outputs before rescaling (2 n_q fraction bits)."""

    ell = gains.fmt.ell
    signals = _stack_signals(xhat_words, u_word, y_words)
    xhat_next = _affine_words(gains.stacked_words(STATE_UPDATE_BLOCKS), signals, ell)
    (u_next,) = _affine_words(gains.stacked_words(INPUT_UPDATE_BLOCKS), signals, ell)
    return xhat_next, u_next


def plain_controller_step(
    gains: GainSet,
    xhat_words: Sequence[int],
    u_word: int,
    y_words: Sequence[int],
) -> tuple[list[int], int]:
    """The plaintext twin of one encrypted controller step, rescaled to n_q bits."""

    fmt = gains.fmt
    xhat_raw, u_raw = plain_controller_raw(gains, xhat_words, u_word, y_words)
    return [rescale(w, fmt.n_q, fmt.ell) for w in xhat_raw], rescale(u_raw, fmt.n_q, fmt.ell)


def float_controller_step(
    A_d: FloatArray,  # noqa: N803
    B_d: FloatArray,  # noqa: N803
    C_d: FloatArray,  # noqa: N803
    L: FloatArray,  # noqa: N803
    K: FloatArray,  # noqa: N803
    xhat: FloatArray,
    u: float,
    y: FloatArray,
) -> tuple[FloatArray, float]:
    """Double-precision observer then state feedback: u+ = K x_hat+."""

    xhat_next = A_d @ xhat + B_d[:, 0] * u + L @ (y - C_d @ xhat)
    u_next = float((np.atleast_2d(K) @ xhat_next)[0])
    return xhat_next, u_next


def composite_controller_step(gains: GainSet, xhat: FloatArray, u: float, y: FloatArray) -> tuple[FloatArray, float]:
    """Double-precision evaluation of the composite (depth-1) form."""

    signals = np.concatenate([xhat, [u], y])
    xhat_next = gains.stacked_real(STATE_UPDATE_BLOCKS) @ signals
    u_next = float((gains.stacked_real(INPUT_UPDATE_BLOCKS) @ signals)[0])
    return xhat_next, u_next
