import math
import random

import pytest

from polymac.errors import ParameterMismatchError, UnsupportedParametersError
from polymac.ntt import (
    bit_reverse,
    forward_ntt,
    inverse_ntt,
    is_probable_prime,
    make_context,
    ntt_mul,
)
from polymac.ring import (
    Polynomial,
    RingParams,
    sample_polynomial,
    schoolbook_negacyclic_mul,
)

FRIENDLY = (
    RingParams(4, 17),
    RingParams(8, 7681),
    RingParams(64, 7681),
    RingParams(256, 7681),
    RingParams(1024, 12289),
)


class TestPrimality:
    def test_small_values(self):
        primes = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47}
        for n in range(50):
            assert is_probable_prime(n) == (n in primes)

    def test_known_parameters(self):
        assert is_probable_prime(7681)
        assert is_probable_prime(12289)
        assert is_probable_prime(2**40 + 15)
        assert not is_probable_prime(7683)
        assert not is_probable_prime(2**40 + 13)  # 277 * 3969356057

    def test_carmichael_not_fooled(self):
        for c in (561, 1105, 1729, 41041, 825265):
            assert not is_probable_prime(c)

    def test_against_sympy_free_sieve(self):
        sieve = [True] * 2000
        sieve[0] = sieve[1] = False
        for i in range(2, 45):
            if sieve[i]:
                for j in range(i * i, 2000, i):
                    sieve[j] = False
        for n in range(2000):
            assert is_probable_prime(n) == sieve[n]


class TestContext:
    def test_bit_reverse(self):
        assert [bit_reverse(i, 3) for i in range(8)] == [0, 4, 2, 6, 1, 5, 3, 7]

    @pytest.mark.parametrize("ring", FRIENDLY)
    def test_root_orders(self, ring):
        ctx = make_context(ring)
        n, q = ring.n, ring.q
        assert pow(ctx.psi, n, q) == q - 1
        assert pow(ctx.psi, 2 * n, q) == 1
        assert ctx.psi * ctx.psi_inv % q == 1
        assert ctx.n_inv * n % q == 1

    def test_rejects_non_prime(self):
        with pytest.raises(UnsupportedParametersError, match="prime"):
            make_context(RingParams(4, 15))

    def test_rejects_wrong_residue(self):
        # 13 is prime but 12 is not divisible by 2n = 8
        with pytest.raises(UnsupportedParametersError, match="mod 2n"):
            make_context(RingParams(4, 13))
        with pytest.raises(UnsupportedParametersError, match="mod 2n"):
            make_context(RingParams(1024, 2**40 + 15))

    def test_rejects_non_power_of_two(self):
        with pytest.raises(UnsupportedParametersError, match="power of two"):
            make_context(RingParams(6, 13))


class TestTransform:
    @pytest.mark.parametrize("ring", FRIENDLY[:4])
    def test_round_trip(self, ring):
        ctx = make_context(ring)
        rng = random.Random(ring.n)
        for _ in range(50):
            a = sample_polynomial(ring, rng.randrange(10**9))
            assert inverse_ntt(forward_ntt(a, ctx), ctx).coeffs == a.coeffs

    def test_forward_is_twisted_evaluation(self):
        # value j of the transform is a(psi^(2*brv(j)+1)): evaluation at
        # odd powers of psi, which is what folds x^n = -1 into pointwise
        # products
        ring = RingParams(8, 7681)
        ctx = make_context(ring)
        a = sample_polynomial(ring, 42)
        vals = forward_ntt(a, ctx)
        n, q = ring.n, ring.q
        bits = n.bit_length() - 1
        for j, v in enumerate(vals):
            point = pow(ctx.psi, 2 * bit_reverse(j, bits) + 1, q)
            direct = sum(c * pow(point, i, q) for i, c in enumerate(a.coeffs)) % q
            assert v == direct

    def test_butterfly_count(self):
        ring = RingParams(256, 7681)
        ctx = make_context(ring)
        a = sample_polynomial(ring, 0)
        stats = {}
        forward_ntt(a, ctx, stats)
        assert stats["butterflies"] == (256 // 2) * int(math.log2(256))
        stats = {}
        inverse_ntt(forward_ntt(a, ctx), ctx, stats)
        assert stats["butterflies"] == (256 // 2) * 8

    def test_linearity(self):
        ring = RingParams(16, 12289)
        ctx = make_context(ring)
        q = ring.q
        a = sample_polynomial(ring, 1)
        b = sample_polynomial(ring, 2)
        va, vb = forward_ntt(a, ctx), forward_ntt(b, ctx)
        s = Polynomial(ring, tuple((x + y) % q for x, y in zip(a.coeffs, b.coeffs)))
        assert forward_ntt(s, ctx) == [(x + y) % q for x, y in zip(va, vb)]

    def test_length_mismatch(self):
        ctx = make_context(RingParams(4, 17))
        with pytest.raises(ParameterMismatchError):
            inverse_ntt([1, 2, 3], ctx)


class TestNttMul:
    @pytest.mark.parametrize("ring", FRIENDLY)
    def test_matches_schoolbook(self, ring):
        ctx = make_context(ring)
        rng = random.Random(ring.q)
        reps = 50 if ring.n <= 256 else 5
        for _ in range(reps):
            a = sample_polynomial(ring, rng.randrange(10**9))
            b = sample_polynomial(ring, rng.randrange(10**9))
            assert ntt_mul(a, b, ctx).coeffs == \
                schoolbook_negacyclic_mul(a, b).coeffs

    def test_identity(self):
        ring = RingParams(8, 7681)
        ctx = make_context(ring)
        one = Polynomial.monomial(ring, 0)
        a = sample_polynomial(ring, 9)
        assert ntt_mul(a, one, ctx).coeffs == a.coeffs

    def test_negacyclic_wrap(self):
        # x^(n/2) squared is x^n = -1
        ring = RingParams(8, 7681)
        ctx = make_context(ring)
        h = Polynomial.monomial(ring, 4)
        out = ntt_mul(h, h, ctx)
        assert out.coeffs == (7680, 0, 0, 0, 0, 0, 0, 0)

    def test_ring_mismatch(self):
        ctx = make_context(RingParams(4, 17))
        a = sample_polynomial(RingParams(4, 97), 0)
        with pytest.raises(ParameterMismatchError):
            ntt_mul(a, a, ctx)
