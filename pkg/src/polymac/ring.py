"""Exact arithmetic in Z_q[x]/(x^n + 1).

Coefficients are plain Python integers kept in canonical form [0, q-1],
so q can be arbitrarily large. The schoolbook multiplier here is the
ground-truth oracle the rest of the package is checked against.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

import numpy as np

from .errors import (
    ParameterMismatchError,
    TextFormatError,
    UnsupportedShapeError,
)

_INT64_MAX = 2**63 - 1


def is_power_of_two(v: int) -> bool:
    return v >= 1 and (v & (v - 1)) == 0


@dataclass(frozen=True)
class RingParams:
    """The ambient ring: degree bound n and coefficient modulus q.

    q does not need to be prime. n >= 1 is accepted here; algorithms
    that need a power of two (Karatsuba, the pipeline, NTT) check at
    the call site.
    """

    n: int
    q: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.q < 2:
            raise ValueError(f"q must be >= 2, got {self.q}")


@dataclass(frozen=True)
class Polynomial:
    """Coefficient vector; index i holds the coefficient of x^i."""

    params: RingParams
    coeffs: tuple

    def __post_init__(self):
        if len(self.coeffs) != self.params.n:
            raise ValueError(
                f"expected {self.params.n} coefficients, got {len(self.coeffs)}"
            )
        q = self.params.q
        for c in self.coeffs:
            if not (0 <= c < q):
                raise ValueError(f"coefficient {c} outside canonical range [0, {q})")

    @classmethod
    def make(cls, params: RingParams, values) -> "Polynomial":
        """Build a polynomial, reducing arbitrary integers mod q."""
        q = params.q
        return cls(params, tuple(int(v) % q for v in values))

    @classmethod
    def zero(cls, params: RingParams) -> "Polynomial":
        return cls(params, (0,) * params.n)

    @classmethod
    def monomial(cls, params: RingParams, degree: int, coeff: int = 1) -> "Polynomial":
        vals = [0] * params.n
        vals[degree] = coeff
        return cls.make(params, vals)

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coeffs)


def _require_same_params(a: Polynomial, b: Polynomial):
    if a.params != b.params:
        raise ParameterMismatchError(
            f"ring mismatch: {a.params} vs {b.params}"
        )


def poly_add(a: Polynomial, b: Polynomial) -> Polynomial:
    _require_same_params(a, b)
    q = a.params.q
    return Polynomial(a.params, tuple((x + y) % q for x, y in zip(a.coeffs, b.coeffs)))


def poly_sub(a: Polynomial, b: Polynomial) -> Polynomial:
    _require_same_params(a, b)
    q = a.params.q
    return Polynomial(a.params, tuple((x - y) % q for x, y in zip(a.coeffs, b.coeffs)))


def negacyclic_wrap(conv, n: int) -> list:
    """Reduce a full convolution (length <= 2n-1) mod x^n + 1.

    Terms of degree d >= n are subtracted from degree d - n. Returns
    plain integers; no mod-q reduction happens here.
    """
    out = [0] * n
    for d, c in enumerate(conv):
        if d < n:
            out[d] += int(c)
        else:
            out[d - n] -= int(c)
    return out


def _convolve_kronecker(a, b, q: int) -> list:
    """Exact integer convolution via packing into one big multiplication.

    Each coefficient of the product is < min(len) * (q-1)^2, so slots of
    that many bits (rounded to whole bytes) never carry into each other.
    """
    n = max(len(a), len(b))
    bound = n * (q - 1) ** 2
    slot_bytes = (bound.bit_length() + 8) // 8
    out_len = len(a) + len(b) - 1

    def pack(vals):
        buf = bytearray(len(vals) * slot_bytes)
        for i, v in enumerate(vals):
            buf[i * slot_bytes : i * slot_bytes + slot_bytes] = int(v).to_bytes(
                slot_bytes, "little"
            )
        return int.from_bytes(buf, "little")

    prod = pack(a) * pack(b)
    raw = prod.to_bytes(out_len * slot_bytes + slot_bytes, "little")
    return [
        int.from_bytes(raw[i * slot_bytes : (i + 1) * slot_bytes], "little")
        for i in range(out_len)
    ]


def convolve_exact(a, b, q: int) -> list:
    """Full integer convolution of two canonical coefficient lists."""
    bound = min(len(a), len(b)) * (q - 1) ** 2
    if bound <= _INT64_MAX:
        conv = np.convolve(
            np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64)
        )
        return [int(v) for v in conv]
    return _convolve_kronecker(a, b, q)


def schoolbook_negacyclic_mul(a: Polynomial, b: Polynomial) -> Polynomial:
    """Exact product reduced mod (x^n + 1, q).

    c_k = sum_{i+j=k} a_i b_j - sum_{i+j=k+n} a_i b_j   (mod q)

    This is the reference every other multiplier must match bit-exactly.
    """
    _require_same_params(a, b)
    n, q = a.params.n, a.params.q
    conv = convolve_exact(a.coeffs, b.coeffs, q)
    wrapped = negacyclic_wrap(conv, n)
    return Polynomial(a.params, tuple(v % q for v in wrapped))


def _karatsuba_conv(f, g, threshold: int, stats: dict) -> list:
    """Plain-integer convolution, splitting at the midpoint until the
    length falls to the threshold, where a quadratic base case runs."""
    length = len(f)
    if length <= threshold:
        stats["base_muls"] += 1
        out = [0] * (2 * length - 1)
        for i, fi in enumerate(f):
            if fi:
                for j, gj in enumerate(g):
                    out[i + j] += fi * gj
        return out

    m = length // 2
    f0, f1 = f[:m], f[m:]
    g0, g1 = g[:m], g[m:]
    h0 = _karatsuba_conv(f0, g0, threshold, stats)
    h2 = _karatsuba_conv(f1, g1, threshold, stats)
    fs = [x + y for x, y in zip(f0, f1)]
    gs = [x + y for x, y in zip(g0, g1)]
    h1 = _karatsuba_conv(fs, gs, threshold, stats)
    for i in range(len(h1)):
        h1[i] -= h2[i] + h0[i]

    out = [0] * (2 * length - 1)
    for i, v in enumerate(h0):
        out[i] += v
    for i, v in enumerate(h1):
        out[i + m] += v
    for i, v in enumerate(h2):
        out[i + 2 * m] += v
    return out


def karatsuba_negacyclic_mul(
    a: Polynomial, b: Polynomial, threshold: int = 32, stats: dict | None = None
) -> Polynomial:
    """Karatsuba product mod (x^n + 1, q); output identical to schoolbook.

    Intermediate products are carried over the integers and reduced once
    at the end. `stats["base_muls"]` (if a dict is passed) receives the
    number of quadratic base-case multiplications, 3^d for recursion
    depth d.
    """
    _require_same_params(a, b)
    n, q = a.params.n, a.params.q
    if not is_power_of_two(n):
        raise UnsupportedShapeError(f"Karatsuba needs a power-of-two n, got {n}")
    if threshold < 1:
        raise ValueError(f"threshold must be >= 1, got {threshold}")
    if stats is None:
        stats = {}
    stats["base_muls"] = 0
    conv = _karatsuba_conv(list(a.coeffs), list(b.coeffs), threshold, stats)
    wrapped = negacyclic_wrap(conv, n)
    return Polynomial(a.params, tuple(v % q for v in wrapped))


def sample_polynomial(params: RingParams, seed: int) -> Polynomial:
    """Uniform coefficients in [0, q-1] from Python's Mersenne Twister
    (`random.Random(seed)`), so the same (params, seed) reproduces the
    same polynomial on every platform."""
    rng = random.Random(seed)
    q = params.q
    return Polynomial(params, tuple(rng.randrange(q) for _ in range(params.n)))


def format_polynomial(p: Polynomial) -> str:
    """Text form: one line `n q`, then the n decimal coefficients."""
    head = f"{p.params.n} {p.params.q}"
    return head + "\n" + " ".join(str(c) for c in p.coeffs) + "\n"


def parse_polynomial(text: str) -> Polynomial:
    """Parse the text form; coefficients may span multiple lines.

    Raises TextFormatError with a 1-based line number on malformed input.
    """
    lines = text.splitlines()
    header_line = None
    for idx, line in enumerate(lines, start=1):
        if line.strip():
            header_line = idx
            break
    if header_line is None:
        raise TextFormatError("empty input", line=1)

    head = lines[header_line - 1].split()
    if len(head) != 2:
        raise TextFormatError(
            f"header must be `n q`, got {len(head)} tokens", line=header_line
        )
    try:
        n, q = int(head[0]), int(head[1])
    except ValueError:
        raise TextFormatError("header values must be decimal integers", line=header_line)
    if n < 1 or q < 2:
        raise TextFormatError(f"invalid ring parameters n={n} q={q}", line=header_line)

    coeffs = []
    for idx in range(header_line, len(lines)):
        for tok in lines[idx].split():
            try:
                coeffs.append(int(tok))
            except ValueError:
                raise TextFormatError(f"bad coefficient {tok!r}", line=idx + 1)
            if len(coeffs) > n:
                raise TextFormatError(
                    f"more than {n} coefficients", line=idx + 1
                )
    if len(coeffs) != n:
        raise TextFormatError(
            f"expected {n} coefficients, got {len(coeffs)}", line=len(lines)
        )
    return Polynomial.make(RingParams(n, q), coeffs)
