"""Negacyclic number-theoretic transform baseline.

Value-representation multiplier used to cross-check the matrix
pipeline and to compare operation counts. Requires q prime with
q = 1 mod 2n so a 2n-th primitive root of unity exists; the transform
is psi-twisted, so pointwise products realize reduction mod x^n + 1
directly (no zero padding).

Iterative in-place butterflies with twiddles precomputed in
bit-reversed order; each transform performs (n/2) * log2(n) of them.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ParameterMismatchError, UnsupportedParametersError
from .ring import Polynomial, RingParams, is_power_of_two

_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_probable_prime(n: int) -> bool:
    """Miller-Rabin; deterministic for n < 3.3e24 with the fixed bases."""
    if n < 2:
        return False
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def bit_reverse(x: int, bits: int) -> int:
    out = 0
    for _ in range(bits):
        out = (out << 1) | (x & 1)
        x >>= 1
    return out


@dataclass(frozen=True)
class NttContext:
    ring: RingParams
    psi: int
    psi_inv: int
    n_inv: int
    twiddles: tuple      # psi^brv(i) for the forward pass
    inv_twiddles: tuple  # psi_inv^brv(i) for the inverse pass


def make_context(ring: RingParams) -> NttContext:
    n, q = ring.n, ring.q
    if not is_power_of_two(n):
        raise UnsupportedParametersError(f"n={n} is not a power of two")
    if not is_probable_prime(q):
        raise UnsupportedParametersError(f"q={q} is not prime")
    if (q - 1) % (2 * n) != 0:
        raise UnsupportedParametersError(f"q={q} is not 1 mod 2n={2 * n}")

    psi = None
    for g in range(2, q):
        cand = pow(g, (q - 1) // (2 * n), q)
        # psi^n == -1 forces order exactly 2n
        if pow(cand, n, q) == q - 1:
            psi = cand
            break
    if psi is None:
        raise UnsupportedParametersError(f"no 2n-th primitive root found for q={q}")

    bits = n.bit_length() - 1
    psi_inv = pow(psi, -1, q)
    twiddles = tuple(pow(psi, bit_reverse(i, bits), q) for i in range(n))
    inv_twiddles = tuple(pow(psi_inv, bit_reverse(i, bits), q) for i in range(n))
    return NttContext(
        ring=ring,
        psi=psi,
        psi_inv=psi_inv,
        n_inv=pow(n, -1, q),
        twiddles=twiddles,
        inv_twiddles=inv_twiddles,
    )


def _check_ctx(a: Polynomial, ctx: NttContext):
    if a.params != ctx.ring:
        raise ParameterMismatchError(f"ring mismatch: {a.params} vs {ctx.ring}")


def forward_ntt(a: Polynomial, ctx: NttContext, stats: dict | None = None) -> list:
    """Coefficients -> value vector (bit-reversed evaluation order)."""
    _check_ctx(a, ctx)
    n, q = ctx.ring.n, ctx.ring.q
    cur = list(a.coeffs)
    count = 0
    t, m = n, 1
    while m < n:
        t //= 2
        for i in range(m):
            s = ctx.twiddles[m + i]
            j1 = 2 * i * t
            for j in range(j1, j1 + t):
                u = cur[j]
                v = cur[j + t] * s % q
                cur[j] = (u + v) % q
                cur[j + t] = (u - v) % q
                count += 1
        m *= 2
    if stats is not None:
        stats["butterflies"] = count
    return cur


def inverse_ntt(values, ctx: NttContext, stats: dict | None = None) -> Polynomial:
    """Exact inverse of forward_ntt."""
    n, q = ctx.ring.n, ctx.ring.q
    if len(values) != n:
        raise ParameterMismatchError(f"expected {n} values, got {len(values)}")
    cur = list(values)
    count = 0
    t, m = 1, n
    while m > 1:
        h = m // 2
        j1 = 0
        for i in range(h):
            s = ctx.inv_twiddles[h + i]
            for j in range(j1, j1 + t):
                u = cur[j]
                v = cur[j + t]
                cur[j] = (u + v) % q
                cur[j + t] = (u - v) * s % q
                count += 1
            j1 += 2 * t
        t *= 2
        m = h
    n_inv = ctx.n_inv
    if stats is not None:
        stats["butterflies"] = count
    return Polynomial(ctx.ring, tuple(v * n_inv % q for v in cur))


def ntt_mul(a: Polynomial, b: Polynomial, ctx: NttContext) -> Polynomial:
    """Pointwise product in the value domain; equals schoolbook exactly
    on all NTT-friendly parameter sets."""
    _check_ctx(a, ctx)
    _check_ctx(b, ctx)
    q = ctx.ring.q
    va = forward_ntt(a, ctx)
    vb = forward_ntt(b, ctx)
    return inverse_ntt([x * y % q for x, y in zip(va, vb)], ctx)
