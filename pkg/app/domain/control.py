from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from app.domain.fixed_point import QFormat
from app.domain.scheme import Words

# Order and shape of the composite gains on the wire and in the controller.
GAIN_LAYOUT: tuple[tuple[str, tuple[int, int]], ...] = (
    ("F_A", (5, 5)),
    ("F_B", (5, 1)),
    ("F_L", (5, 2)),
    ("K_A", (1, 5)),
    ("K_B", (1, 1)),
    ("K_L", (1, 2)),
)

# Gains applied to the stacked signal vector [xhat (5), u (1), y (2)].
STATE_UPDATE_BLOCKS = ("F_A", "F_B", "F_L")
INPUT_UPDATE_BLOCKS = ("K_A", "K_B", "K_L")

PUBLISHED_FEEDBACK_GAIN = (-12.6, -1.8, -9.8, -0.95, 0.015)
PUBLISHED_OBSERVER_POLES = (0.7, 0.5, 0.8, 0.6, 0.85)


def gain_cipher_count() -> int:
    return sum(rows * cols for _, (rows, cols) in GAIN_LAYOUT)


@dataclass(frozen=True, slots=True, eq=False)
class GainSet:
    """Observer/feedback gains and their depth-1 composites.

    x_hat+ = F_A x_hat + F_B u + F_L y and u+ = K_A x_hat + K_B u + K_L y,
    with F_A = A_d - L C_d, F_B = B_d, F_L = L, K_A = K F_A, K_B = K B_d,
    K_L = K L. ``quantized`` holds the Q-format words of every composite.
    """

    L: NDArray[np.float64]
    K: NDArray[np.float64]
    composites: dict[str, NDArray[np.float64]]
    quantized: dict[str, Words]
    fmt: QFormat
    meta: dict[str, float] = field(default_factory=dict)

    def real(self, name: str) -> NDArray[np.float64]:
        return self.composites[name]

    def words(self, name: str) -> Words:
        return self.quantized[name]

    def stacked_real(self, blocks: tuple[str, ...]) -> NDArray[np.float64]:
        return np.hstack([self.composites[b] for b in blocks])

    def stacked_words(self, blocks: tuple[str, ...]) -> Words:
        return np.hstack([self.quantized[b] for b in blocks])
