"""Residue number system: base selection, decomposition, CRT recovery.

A base is a list of pairwise-coprime moduli below the configured word
size. Dot products of length l over values < q stay below l*q^2, so a
base whose product exceeds that bound reconstructs them exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import BaseTooSmallError, RnsRangeError


@dataclass(frozen=True)
class RnsBase:
    """Ordered pairwise-coprime moduli with precomputed CRT constants.

    crt_weights[i] = (M / m_i) * ((M / m_i)^-1 mod m_i); reconstruction
    is sum(r_i * crt_weights[i]) mod M.
    """

    moduli: tuple
    word_bits: int
    product: int = field(init=False)
    crt_weights: tuple = field(init=False)

    def __post_init__(self):
        if not self.moduli:
            raise ValueError("empty modulus list")
        limit = 1 << self.word_bits
        for m in self.moduli:
            if not (2 <= m < limit):
                raise ValueError(f"modulus {m} outside [2, 2^{self.word_bits})")
        mods = self.moduli
        for i in range(len(mods)):
            for j in range(i + 1, len(mods)):
                g = math.gcd(mods[i], mods[j])
                if g != 1:
                    raise ValueError(
                        f"moduli {mods[i]} and {mods[j]} share factor {g}"
                    )
        product = math.prod(mods)
        weights = []
        for m in mods:
            big = product // m
            weights.append(big * pow(big, -1, m))
        object.__setattr__(self, "product", product)
        object.__setattr__(self, "crt_weights", tuple(weights))

    def __len__(self):
        return len(self.moduli)

    @property
    def max_modulus(self) -> int:
        return max(self.moduli)


@dataclass(frozen=True)
class RnsSelectionParams:
    """Inputs to base selection: the bound is accumulation_length * q^2."""

    q: int
    accumulation_length: int
    word_bits: int = 8

    def __post_init__(self):
        if self.accumulation_length < 1:
            raise ValueError("accumulation_length must be >= 1")
        if self.word_bits < 2:
            raise ValueError("word_bits must be >= 2")

    @property
    def bound(self) -> int:
        return self.accumulation_length * self.q * self.q


def select_rns_base(p: RnsSelectionParams) -> RnsBase:
    """Greedy descent from 2^word_bits - 1: accept each candidate coprime
    to everything accepted so far, stop once the product exceeds the
    bound. Larger moduli first keeps the base small."""
    bound = p.bound
    accepted = []
    product = 1
    for cand in range((1 << p.word_bits) - 1, 1, -1):
        if all(math.gcd(cand, m) == 1 for m in accepted):
            accepted.append(cand)
            product *= cand
            if product > bound:
                return RnsBase(tuple(accepted), p.word_bits)
    raise BaseTooSmallError(
        f"all coprime moduli below 2^{p.word_bits} reach product {product}, "
        f"short of required bound {bound} (shortfall factor "
        f"{bound / product:.3g})"
    )


def to_residues(x: int, base: RnsBase) -> list:
    if not (0 <= x < base.product):
        raise RnsRangeError(f"value {x} outside [0, {base.product})")
    return [x % m for m in base.moduli]


def crt_reconstruct(residues, base: RnsBase) -> int:
    """The unique x in [0, M) with x = residues[i] mod m_i."""
    if len(residues) != len(base.moduli):
        raise RnsRangeError(
            f"expected {len(base.moduli)} residues, got {len(residues)}"
        )
    for r, m in zip(residues, base.moduli):
        if not (0 <= r < m):
            raise RnsRangeError(f"residue {r} out of range for modulus {m}")
    total = 0
    for r, w in zip(residues, base.crt_weights):
        total += r * w
    return total % base.product


@dataclass(frozen=True)
class RnsCheckRecord:
    """Outcome of one elementwise multiply-and-reconstruct check."""

    x: int
    y: int
    expected: int
    reconstructed: int
    matches: bool
    overflow: bool


def rns_elementwise_check(x: int, y: int, base: RnsBase) -> RnsCheckRecord:
    """Multiply per residue channel, reconstruct, compare against x*y.

    Test utility, not a hot path. A product at or above M cannot be
    represented; the record flags it rather than failing silently.
    """
    expected = x * y
    overflow = expected >= base.product
    xr = [x % m for m in base.moduli]
    yr = [y % m for m in base.moduli]
    zr = [(a * b) % m for a, b, m in zip(xr, yr, base.moduli)]
    reconstructed = crt_reconstruct(zr, base)
    return RnsCheckRecord(
        x=x,
        y=y,
        expected=expected,
        reconstructed=reconstructed,
        matches=(reconstructed == expected),
        overflow=overflow,
    )
