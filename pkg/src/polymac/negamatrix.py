"""The structured operand matrix and its blocked multiplication.

One operand polynomial b becomes an n x n matrix whose first row is b
and where each later row is the previous row shifted right, with the
wrapped-around entry negated (stored as its mod-q complement, so every
entry stays nonnegative). Multiplying the other operand as a row vector
against this matrix is exactly negacyclic multiplication.

Oversized instances are split per a BlockPlan: the vector into k
sub-vectors, the matrix into k^2 sub-matrices; column partial sums are
accumulated exactly and the k result segments concatenated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import MacEngine, _check_dispatch
from .errors import EngineOverflowError, InvalidPlanError, ParameterMismatchError
from .ring import Polynomial, RingParams, is_power_of_two

_INT64_MAX = 2**63 - 1

# idx tables are shared across every matrix of the same n
_rotation_cache: dict = {}


def rotation_index(n: int) -> np.ndarray:
    """Index into the table [b_0..b_{n-1}, -b_0..-b_{n-1}]: entry (r, c)
    reads b_{c-r} for c >= r and the negated b_{n+c-r} below the
    diagonal wrap."""
    cached = _rotation_cache.get(n)
    if cached is not None:
        return cached
    r = np.arange(n)[:, None]
    c = np.arange(n)[None, :]
    idx = ((c - r) % n) + n * (c < r)
    idx.setflags(write=False)
    _rotation_cache[n] = idx
    return idx


def negation_table(coeffs, q: int, dtype) -> np.ndarray:
    """Length-2n lookup table: the coefficients then their mod-q
    complements."""
    n = len(coeffs)
    tab = np.empty(2 * n, dtype=dtype)
    for i, v in enumerate(coeffs):
        tab[i] = v
        tab[n + i] = (q - v) % q
    return tab


@dataclass(frozen=True)
class NegacyclicMatrixZq:
    """Dense n x n operand matrix with entries in [0, q-1]."""

    params: RingParams
    rows: np.ndarray

    def entry(self, r: int, c: int) -> int:
        return int(self.rows[r, c])


def build_matrix(b: Polynomial) -> NegacyclicMatrixZq:
    n, q = b.params.n, b.params.q
    dtype = np.int64 if q - 1 <= _INT64_MAX else object
    tab = negation_table(b.coeffs, q, dtype)
    rows = tab[rotation_index(n)]
    rows.setflags(write=False)
    return NegacyclicMatrixZq(b.params, rows)


def _check_vec(a: Polynomial, M: NegacyclicMatrixZq):
    if a.params != M.params:
        raise ParameterMismatchError(f"ring mismatch: {a.params} vs {M.params}")


def _exact_rows_product(vecs: np.ndarray, M: NegacyclicMatrixZq) -> np.ndarray:
    """Exact integer product of stacked row vectors with the matrix."""
    n, q = M.params.n, M.params.q
    if n * (q - 1) * (q - 1) <= _INT64_MAX:
        return np.dot(vecs.astype(np.int64), M.rows)
    return np.dot(vecs.astype(object), M.rows.astype(object))


def vec_mat_mul(a: Polynomial, M: NegacyclicMatrixZq) -> Polynomial:
    """a times the operand matrix of b == schoolbook product of a and b."""
    _check_vec(a, M)
    q = M.params.q
    prod = _exact_rows_product(np.array([a.coeffs], dtype=object), M)[0]
    return Polynomial(M.params, tuple(int(v) % q for v in prod))


def batch_mul(A: list, M: NegacyclicMatrixZq) -> list:
    """Stack many left operands into one matrix-matrix product."""
    if not A:
        return []
    for a in A:
        _check_vec(a, M)
    q = M.params.q
    stacked = np.array([a.coeffs for a in A], dtype=object)
    prod = _exact_rows_product(stacked, M)
    return [
        Polynomial(M.params, tuple(int(v) % q for v in row)) for row in prod
    ]


@dataclass(frozen=True)
class BlockPlan:
    """Uniform power-of-two grid: the vector splits into `grid`
    sub-vectors of length block_dim, the matrix into grid^2 blocks."""

    n: int
    block_dim: int
    grid: int


def make_block_plan(n: int, block_dim: int) -> BlockPlan:
    if not is_power_of_two(n) or not is_power_of_two(block_dim):
        raise InvalidPlanError(
            f"n={n} and block_dim={block_dim} must both be powers of two"
        )
    if block_dim > n or n % block_dim != 0:
        raise InvalidPlanError(f"block_dim={block_dim} does not divide n={n}")
    return BlockPlan(n=n, block_dim=block_dim, grid=n // block_dim)


def blocked_matmul(A: np.ndarray, B: np.ndarray, plan: BlockPlan, engine: MacEngine):
    """Exact blocked product of (r, n) x (n, n) through the engine.

    Sub-products r_{iJ} = A_i x B_{iJ} go through engine dispatches;
    column-block partials are summed as exact integers before any
    caller-side reduction.
    """
    if B.shape != (plan.n, plan.n) or A.shape[1] != plan.n:
        raise InvalidPlanError(
            f"plan for n={plan.n} cannot tile shapes {A.shape} x {B.shape}"
        )
    g, bd = plan.grid, plan.block_dim
    if g == 1:
        C, _ = engine.matmul(A, B)
        return C
    # guard once against the full operands: every sub-block of a valid
    # pair is itself in range, and its inner dim is at most block_dim
    _check_dispatch(np.asarray(A[:, :bd]), np.asarray(B[:bd]), engine.cfg)
    limit = engine.cfg.max_input
    for M, name in ((np.asarray(A), "A"), (np.asarray(B), "B")):
        if int(M.max()) > limit:
            raise EngineOverflowError(
                f"{name} contains elements above the "
                f"{engine.cfg.input_bits}-bit input limit {limit}"
            )
    a_strips = [A[:, ib * bd : (ib + 1) * bd] for ib in range(g)]
    col_blocks = []
    for jb in range(g):
        acc = None
        for ib in range(g):
            sub = B[ib * bd : (ib + 1) * bd, jb * bd : (jb + 1) * bd]
            part, _ = engine.matmul(a_strips[ib], sub, _prechecked=True)
            acc = part if acc is None else acc + part
        col_blocks.append(acc)
    return np.concatenate(col_blocks, axis=1)


def blocked_vec_mat_mul(
    a: Polynomial, M: NegacyclicMatrixZq, plan: BlockPlan, engine: MacEngine
) -> Polynomial:
    """Identical output to vec_mat_mul for every valid plan."""
    _check_vec(a, M)
    if plan.n != a.params.n:
        raise InvalidPlanError(f"plan n={plan.n} does not match ring n={a.params.n}")
    q = M.params.q
    row = np.array([a.coeffs], dtype=M.rows.dtype)
    C = blocked_matmul(row, M.rows, plan, engine)
    return Polynomial(M.params, tuple(int(v) % q for v in C[0]))
