from __future__ import annotations

from app.application.crypto import hom_ops
from app.application.selftest import CHECKS, run_selftest


def test_all_checks_pass():
    results = run_selftest(seed=1, trials=20)
    assert [r.name for r in results] == [name for name, _ in CHECKS]
    assert all(r.passed for r in results), [r for r in results if not r.passed]


def test_broken_flatten_is_caught(monkeypatch):
    original = hom_ops._flatten_literal

    def off_by_one(b, ell):
        return original(b, ell) ^ 1

    monkeypatch.setattr(hom_ops, "_flatten_literal", off_by_one)
    results = {r.name: r for r in run_selftest(seed=1, trials=5)}
    assert not results["reduced_add_matches_full"].passed
    assert not results["reduced_scalar_add_matches_full"].passed
    assert results["full_reduced_representations"].passed
    assert results["encrypt_decrypt_roundtrip"].passed


def test_exceptions_become_failed_checks(monkeypatch):
    def explode(*_args):
        raise RuntimeError("primitive broke")

    monkeypatch.setattr(hom_ops, "mul", explode)
    results = {r.name: r for r in run_selftest(seed=2, trials=3)}
    assert not results["reduced_mul_matches_full"].passed
    assert "primitive broke" in results["reduced_mul_matches_full"].detail
