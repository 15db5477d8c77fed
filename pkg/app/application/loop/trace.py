from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True, slots=True)
class TraceRow:
    """One sample instant: plant state, applied input, estimate and measurement.

    Word fields are None for the double-precision controller.
    """

    t: float
    state: tuple[float, float, float, float, float]
    u: float
    xhat: tuple[float, ...]
    y: tuple[float, float]
    xhat_words: tuple[int, ...] | None = None
    u_word: int | None = None
    y_words: tuple[int, ...] | None = None

    def words(self) -> tuple[tuple[int, ...] | None, int | None, tuple[int, ...] | None]:
        return self.xhat_words, self.u_word, self.y_words


@dataclass(slots=True)
class TraceLog:
    controller: str
    seed: int
    rows: list[TraceRow] = field(default_factory=list)
    audit_head: str | None = None
    step_seconds: list[float] = field(default_factory=list)
    max_noise: int = 0

    def __len__(self) -> int:
        return len(self.rows)

    def append(self, row: TraceRow) -> None:
        self.rows.append(row)

    def word_trace(self) -> list[tuple[tuple[int, ...] | None, int | None, tuple[int, ...] | None]]:
        return [row.words() for row in self.rows]

    def max_angles_after(self, t_start: float) -> tuple[float, float]:
        """Largest |theta1| and |theta2| over rows with t > t_start."""

        late = [row for row in self.rows if row.t > t_start]
        if not late:
            return (0.0, 0.0)
        return (
            max(abs(row.state[0]) for row in late),
            max(abs(row.state[2]) for row in late),
        )

    def stabilized(self, t_start: float = 5.0, bound: float = 0.01) -> bool:
        theta1, theta2 = self.max_angles_after(t_start)
        return theta1 < bound and theta2 < bound
