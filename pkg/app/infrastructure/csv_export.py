from __future__ import annotations

import csv
from collections.abc import Iterable, Mapping
from pathlib import Path
from typing import Any

from app.application.loop.trace import TraceLog
from app.domain.control import GAIN_LAYOUT, GainSet

TRAJECTORY_COLUMNS = (
    "t",
    "theta1",
    "dtheta1",
    "theta2",
    "dtheta2",
    "T",
    "u",
    "xhat1",
    "xhat2",
    "xhat3",
    "xhat4",
    "xhat5",
    "y1",
    "y2",
)

BENCH_COLUMNS = ("op", "repr", "n", "ell", "word_mults", "word_adds", "bit_ops", "wall_ns", "mem_bytes")

GAIN_COLUMNS = ("gain", "row", "col", "real", "word")


def _write(path: Path | str, columns: Iterable[str], rows: Iterable[Iterable[Any]]) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(columns)
        for row in rows:
            writer.writerow(row)


def trajectory_rows(trace: TraceLog) -> list[list[str]]:
    rows = []
    for row in trace.rows:
        values = [row.t, *row.state, row.u, *row.xhat, *row.y]
        rows.append([repr(float(v)) for v in values])
    return rows


def write_trajectory_csv(path: Path | str, trace: TraceLog) -> None:
    _write(path, TRAJECTORY_COLUMNS, trajectory_rows(trace))


def write_bench_csv(path: Path | str, rows: Iterable[Mapping[str, Any]]) -> None:
    _write(path, BENCH_COLUMNS, ([row.get(c, "") for c in BENCH_COLUMNS] for row in rows))


def write_gain_csv(path: Path | str, gains: GainSet) -> None:
    """Real and quantized composite gains, one entry per line, for audit."""

    rows = []
    for name, (n_rows, n_cols) in GAIN_LAYOUT:
        real = gains.real(name)
        words = gains.words(name)
        for r in range(n_rows):
            for c in range(n_cols):
                rows.append([name, r, c, repr(float(real[r, c])), int(words[r, c])])
    _write(path, GAIN_COLUMNS, rows)
