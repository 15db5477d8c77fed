from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from app.application.crypto import hom_ops
from app.application.crypto.counters import counter_scope, op_counters, reset_counters
from app.application.crypto.gsw import decrypt, encrypt, encrypt_with, noise_of, sample_mask, to_full, to_reduced
from app.application.crypto.keys import centered, embed
from app.application.crypto.keystream import KeyStream
from app.domain.errors import DimensionMismatch, OutOfRange

MOD64 = 2**64

words64 = st.integers(0, MOD64 - 1)
small_signed = st.integers(-(2**20), 2**20)
seeds = st.integers(0, 2**32)


def _zero_mask(params):
    return np.zeros((params.N, params.m), dtype=np.uint8)


class TestZeroNoiseExamples:
    def test_add(self, tiny_keys, tiny_params):
        sk, pk = tiny_keys
        c3 = encrypt_with(pk, 3, _zero_mask(tiny_params))
        c2 = encrypt_with(pk, 2, _zero_mask(tiny_params))
        assert decrypt(sk, hom_ops.add(c3, c2)) == 5

    def test_add_zero_cipher_is_identity(self, toy_keys, toy_params):
        _, pk = toy_keys
        cipher = encrypt(pk, 77, KeyStream(1))
        assert hom_ops.add(cipher, encrypt_with(pk, 0, _zero_mask(toy_params))) == cipher

    def test_mul(self, tiny_keys, tiny_params):
        sk, pk = tiny_keys
        c2 = encrypt_with(pk, 2, _zero_mask(tiny_params))
        c3 = encrypt_with(pk, 3, _zero_mask(tiny_params))
        assert decrypt(sk, hom_ops.mul(to_full(c2), c3)) == 6

    def test_mul_by_one(self, tiny_keys, tiny_params):
        sk, pk = tiny_keys
        one = to_full(encrypt_with(pk, 1, _zero_mask(tiny_params)))
        for mu in range(8):
            assert decrypt(sk, hom_ops.mul(one, encrypt_with(pk, mu, _zero_mask(tiny_params)))) == mu

    def test_scalar_add_five_onto_zero(self, tiny_keys, tiny_params):
        sk, pk = tiny_keys
        assert decrypt(sk, hom_ops.scalar_add(5, encrypt_with(pk, 0, _zero_mask(tiny_params)))) == 5

    def test_scalar_add_zero_is_identity(self, toy_keys):
        _, pk = toy_keys
        cipher = encrypt(pk, 9, KeyStream(2))
        assert hom_ops.scalar_add(0, cipher) == cipher


class TestAlphaG:
    def test_examples(self):
        assert hom_ops.alpha_g(3, 3).tolist() == [3, 6, 4]
        assert hom_ops.alpha_g(0, 16).tolist() == [0] * 16
        assert hom_ops.alpha_g(1, 4).tolist() == [1, 2, 4, 8]

    def test_range(self):
        with pytest.raises(OutOfRange):
            hom_ops.alpha_g(8, 3)


class TestHomomorphismReferenceGeometry:
    @given(mu1=words64, mu2=words64, seed=seeds)
    def test_add(self, ref_keys, mu1, mu2, seed):
        sk, pk = ref_keys
        rng = KeyStream(seed)
        assert decrypt(sk, hom_ops.add(encrypt(pk, mu1, rng), encrypt(pk, mu2, rng))) == (mu1 + mu2) % MOD64

    @given(mu1=words64, mu2=small_signed, seed=seeds)
    def test_mul(self, ref_keys, mu1, mu2, seed):
        sk, pk = ref_keys
        rng = KeyStream(seed)
        right = embed(mu2, 64)
        product = hom_ops.mul(to_full(encrypt(pk, mu1, rng)), encrypt(pk, right, rng))
        assert decrypt(sk, product) == (mu1 * right) % MOD64

    @given(alpha=words64, mu=words64, seed=seeds)
    def test_scalar_mul(self, ref_keys, alpha, mu, seed):
        sk, pk = ref_keys
        assert decrypt(sk, hom_ops.scalar_mul(alpha, encrypt(pk, mu, KeyStream(seed)))) == (alpha * mu) % MOD64

    @given(alpha=words64, mu=words64, seed=seeds)
    def test_scalar_add(self, ref_keys, alpha, mu, seed):
        sk, pk = ref_keys
        assert decrypt(sk, hom_ops.scalar_add(alpha, encrypt(pk, mu, KeyStream(seed)))) == (alpha + mu) % MOD64

    def test_scalar_mul_identity_and_annihilator(self, ref_keys):
        sk, pk = ref_keys
        cipher = encrypt(pk, 123456789, KeyStream(3))
        assert decrypt(sk, hom_ops.scalar_mul(1, cipher)) == 123456789
        assert decrypt(sk, hom_ops.scalar_mul(0, cipher)) == 0


BOUNDARY_WORDS = [0, 1, 2**63, MOD64 - 1, 0x9E3779B97F4A7C15]


class TestNoiseGrowth:
    """Noise after each operation stays under its additive or scaled bound."""

    @pytest.fixture(scope="class")
    def fresh_bound(self, ref_params):
        # every row of a fresh cipher carries R @ e with R binary
        return ref_params.m * ref_params.noise_bound

    @pytest.mark.parametrize("mu1", BOUNDARY_WORDS)
    @pytest.mark.parametrize("mu2", BOUNDARY_WORDS)
    def test_add(self, ref_keys, mu1, mu2):
        sk, pk = ref_keys
        rng = KeyStream(f"noise-add/{mu1}/{mu2}")
        c1, c2 = encrypt(pk, mu1, rng), encrypt(pk, mu2, rng)
        e1, e2 = noise_of(sk, c1, mu1), noise_of(sk, c2, mu2)
        assert noise_of(sk, hom_ops.add(c1, c2), (mu1 + mu2) % MOD64) <= e1 + e2

    @pytest.mark.parametrize("mu1", BOUNDARY_WORDS)
    @pytest.mark.parametrize("mu2", BOUNDARY_WORDS)
    def test_mul(self, ref_keys, ref_params, fresh_bound, mu1, mu2):
        sk, pk = ref_keys
        rng = KeyStream(f"noise-mul/{mu1}/{mu2}")
        c1, c2 = encrypt(pk, mu1, rng), encrypt(pk, mu2, rng)
        e1 = noise_of(sk, c1, mu1)
        product = hom_ops.mul(to_full(c1), c2)
        bound = abs(centered(mu2, 64)) * e1 + ref_params.N * fresh_bound
        assert noise_of(sk, product, (mu1 * mu2) % MOD64) <= bound

    def test_mul_small_signal_stays_decryptable(self, ref_keys, ref_params, fresh_bound):
        sk, pk = ref_keys
        rng = KeyStream("noise-mul-small")
        signal = embed(-(2**31), 64)
        product = hom_ops.mul(to_full(encrypt(pk, 2**40, rng)), encrypt(pk, signal, rng))
        noise = noise_of(sk, product, (2**40 * signal) % MOD64)
        assert noise <= 2**31 * fresh_bound + ref_params.N * fresh_bound
        assert noise < 2**62

    @pytest.mark.parametrize("alpha", BOUNDARY_WORDS)
    @pytest.mark.parametrize("mu", BOUNDARY_WORDS)
    def test_scalar_mul(self, ref_keys, ref_params, alpha, mu):
        sk, pk = ref_keys
        cipher = encrypt(pk, mu, KeyStream(f"noise-smul/{alpha}/{mu}"))
        e1 = noise_of(sk, cipher, mu)
        scaled = hom_ops.scalar_mul(alpha, cipher)
        assert noise_of(sk, scaled, (alpha * mu) % MOD64) <= ref_params.N * e1

    @pytest.mark.parametrize("alpha", BOUNDARY_WORDS)
    @pytest.mark.parametrize("mu", BOUNDARY_WORDS)
    def test_scalar_add(self, ref_keys, alpha, mu):
        sk, pk = ref_keys
        cipher = encrypt(pk, mu, KeyStream(f"noise-sadd/{alpha}/{mu}"))
        e1 = noise_of(sk, cipher, mu)
        assert noise_of(sk, hom_ops.scalar_add(alpha, cipher), (alpha + mu) % MOD64) <= e1


@pytest.mark.slow
def test_homomorphism_thousand_pairs(ref_keys):
    sk, pk = ref_keys
    rng = KeyStream("thousand-pairs")
    draws = rng.words((1000, 3), 64)
    for mu1, mu2, alpha in (tuple(int(v) for v in row) for row in draws):
        c1, c2 = encrypt(pk, mu1, rng), encrypt(pk, mu2, rng)
        small = embed((mu2 % (1 << 21)) - (1 << 20), 64)
        assert decrypt(sk, hom_ops.add(c1, c2)) == (mu1 + mu2) % MOD64
        assert decrypt(sk, hom_ops.mul(to_full(c1), encrypt(pk, small, rng))) == (mu1 * small) % MOD64
        assert decrypt(sk, hom_ops.scalar_mul(alpha, c2)) == (alpha * mu2) % MOD64
        assert decrypt(sk, hom_ops.scalar_add(alpha, c2)) == (alpha + mu2) % MOD64


class TestReducedMatchesFull:
    """The reduced operations equal the literal Flatten formulas, bit for bit."""

    @pytest.fixture
    def draw(self, toy_keys, toy_params):
        _, pk = toy_keys

        def _draw(seed):
            rng = KeyStream(seed)
            mu1, mu2 = (int(v) for v in rng.words((2,), 8))
            c1 = to_full(encrypt_with(pk, mu1, sample_mask(toy_params, rng)))
            c2 = to_full(encrypt_with(pk, mu2, sample_mask(toy_params, rng)))
            return c1, c2

        return _draw

    def test_add(self, draw):
        for seed in range(200):
            c1, c2 = draw(seed)
            assert hom_ops.add(to_reduced(c1), to_reduced(c2)) == to_reduced(hom_ops.add_full(c1, c2))

    def test_mul(self, draw):
        for seed in range(200):
            c1, c2 = draw(seed)
            assert hom_ops.mul(c1, to_reduced(c2)) == to_reduced(hom_ops.mul_full(c1, c2))

    def test_scalar_ops(self, draw):
        for alpha in range(0, 256, 5):
            c1, _ = draw(1000 + alpha)
            assert hom_ops.scalar_mul(alpha, to_reduced(c1)) == to_reduced(hom_ops.scalar_mul_full(alpha, c1))
            assert hom_ops.scalar_add(alpha, to_reduced(c1)) == to_reduced(hom_ops.scalar_add_full(alpha, c1))

    def test_full_path_decrypts(self, toy_keys, draw):
        sk, _ = toy_keys
        c1, c2 = draw(5)
        mu1, mu2 = decrypt(sk, to_reduced(c1)), decrypt(sk, to_reduced(c2))
        assert decrypt(sk, to_reduced(hom_ops.add_full(c1, c2))) == (mu1 + mu2) % 256


class TestEncMatVec:
    def test_single_entry_is_mul(self, ref_keys):
        _, pk = ref_keys
        rng = KeyStream("1x1")
        gain = to_full(encrypt(pk, 5, rng))
        signal = encrypt(pk, 7, rng)
        assert hom_ops.enc_mat_vec([[gain]], [signal]) == [hom_ops.mul(gain, signal)]

    def test_zero_messages(self, ref_keys):
        sk, pk = ref_keys
        rng = KeyStream("zeros")
        matrix = [[to_full(encrypt(pk, 0, rng)) for _ in range(2)] for _ in range(2)]
        out = hom_ops.enc_mat_vec(matrix, [encrypt(pk, 0, rng), encrypt(pk, 0, rng)])
        assert [decrypt(sk, c) for c in out] == [0, 0]

    def test_matches_plaintext_product(self, ref_keys):
        sk, pk = ref_keys
        rng = KeyStream("2x2")
        gains = [[int(v) for v in row] for row in rng.words((2, 2), 64)]
        signals = [embed(-1234, 64), embed(98765, 64)]
        matrix = [[to_full(encrypt(pk, g, rng)) for g in row] for row in gains]
        out = hom_ops.enc_mat_vec(matrix, [encrypt(pk, s, rng) for s in signals])
        expected = [sum(g * s for g, s in zip(row, signals)) % MOD64 for row in gains]
        assert [decrypt(sk, c) for c in out] == expected

    def test_shape_mismatch(self, toy_keys):
        _, pk = toy_keys
        cipher = encrypt(pk, 1, KeyStream(0))
        with pytest.raises(DimensionMismatch):
            hom_ops.enc_mat_vec([[to_full(cipher), to_full(cipher)]], [cipher])


class TestCounters:
    def test_reset(self):
        reset_counters()
        snapshot = op_counters()
        assert (snapshot.word_mults, snapshot.word_adds, snapshot.bit_ops) == (0, 0, 0)

    def test_reduced_ops_never_multiply(self, ref_keys):
        _, pk = ref_keys
        rng = KeyStream("counters")
        c1, c2 = encrypt(pk, 3, rng), encrypt(pk, 4, rng)
        f1 = to_full(c1)
        for run in (
            lambda: hom_ops.add(c1, c2),
            lambda: hom_ops.mul(f1, c2),
            lambda: hom_ops.scalar_mul(12345, c1),
            lambda: hom_ops.scalar_add(12345, c1),
            lambda: hom_ops.enc_mat_vec([[f1, f1]], [c1, c2]),
        ):
            with counter_scope(merge=False) as counters:
                run()
            assert counters.word_mults == 0
            assert counters.word_adds > 0

    def test_full_path_multiplies(self, toy_keys):
        _, pk = toy_keys
        rng = KeyStream("full")
        f1, f2 = to_full(encrypt(pk, 3, rng)), to_full(encrypt(pk, 4, rng))
        for run in (
            lambda: hom_ops.add_full(f1, f2),
            lambda: hom_ops.mul_full(f1, f2),
            lambda: hom_ops.scalar_mul_full(7, f1),
            lambda: hom_ops.scalar_add_full(7, f1),
        ):
            with counter_scope(merge=False) as counters:
                run()
            assert counters.word_mults > 0

    def test_scope_merges_into_parent(self, toy_keys):
        _, pk = toy_keys
        cipher = encrypt(pk, 1, KeyStream(0))
        with counter_scope(merge=False) as outer:
            with counter_scope() as inner:
                hom_ops.add(cipher, cipher)
            assert outer.word_adds == inner.word_adds == cipher.words.size
            assert outer.per_op["add"] == 1
