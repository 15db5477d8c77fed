from __future__ import annotations

import pytest

from app.application.bench import BENCH_OPS, run_bench


@pytest.fixture(scope="module")
def rows():
    return run_bench(BENCH_OPS, (8, 16, 32), n=2, seed=0)


def _row(rows, op, representation, ell):
    (row,) = [r for r in rows if (r["op"], r["repr"], r["ell"]) == (op, representation, ell)]
    return row


def test_one_row_per_combination(rows):
    assert len(rows) == len(BENCH_OPS) * 2 * 3
    assert {r["ell"] for r in rows} == {8, 16, 32}


def test_reduced_operations_never_multiply_words(rows):
    for row in rows:
        if row["repr"] == "reduced":
            assert row["word_mults"] == 0, row


def test_full_path_multiplies_words(rows):
    assert _row(rows, "add", "full", 8)["word_mults"] > 0
    assert _row(rows, "mul", "full", 8)["word_mults"] > 0


def test_reduced_add_scales_with_cipher_size(rows):
    # a reduced add touches every word of an N x (n+1) cipher once
    for ell in (8, 16, 32):
        assert _row(rows, "add", "reduced", ell)["word_adds"] == ell * 3 * 3
    small = _row(rows, "add", "reduced", 8)["word_adds"]
    for ell in (16, 32):
        ratio = _row(rows, "add", "reduced", ell)["word_adds"] / small
        assert ratio == pytest.approx(ell / 8, rel=0.2)


def test_reduced_is_smaller_than_full(rows):
    # bit matrices are stored one byte per bit, so the gap opens once N > 8 (n+1)
    for op in BENCH_OPS:
        for ell in (16, 32):
            reduced = _row(rows, op, "reduced", ell)
            full = _row(rows, op, "full", ell)
            assert 0 < reduced["mem_bytes"] < full["mem_bytes"]
            assert reduced["wall_ns"] >= 0
