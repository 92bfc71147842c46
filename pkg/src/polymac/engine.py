"""Integer matrix-multiplication backends standing in for the MAC array.

Two backends produce bit-identical products:

* ``naive`` — one exact whole-matrix product; reports mac_count only.
* ``systolic`` — tiles the operands to the configured array edge,
  multiplies tile by tile, and models per-tile cycles with a simple
  wavefront estimate: (rows + cols + inner - 2) fill/drain plus inner.

No modular reduction happens here; accumulators carry plain integers
and a per-call guard refuses any dispatch whose dot products could
exceed the accumulator width. When the guard bound fits in 53 bits the
product is computed in float64 (exact for integer sums below 2^53 and
much faster than integer loops); otherwise int64 or arbitrary-precision
objects are used.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EngineOverflowError
from .ring import is_power_of_two

# Fixed per-dispatch overhead added to estimated_cycles. Real hardware
# shows a latency floor for small problems; this constant reproduces
# that shape qualitatively. It is a modeling choice, not a measured
# value.
DISPATCH_OVERHEAD_CYCLES = 16

_FLOAT64_EXACT_MAX = 1 << 53
_INT64_MAX = 2**63 - 1

BACKENDS = ("naive", "systolic")


@dataclass(frozen=True)
class EngineConfig:
    """Array edge, input element width, and accumulator width."""

    tile_dim: int = 128
    input_bits: int = 8
    accumulator_bits: int = 32

    def __post_init__(self):
        if not is_power_of_two(self.tile_dim):
            raise ValueError(f"tile_dim must be a power of two, got {self.tile_dim}")
        if self.input_bits < 1 or self.accumulator_bits < 1:
            raise ValueError("bit widths must be positive")
        # derived limits are read on every dispatch; precompute them
        object.__setattr__(self, "_max_input", (1 << self.input_bits) - 1)
        object.__setattr__(self, "_max_accumulator", (1 << self.accumulator_bits) - 1)
        object.__setattr__(
            self, "_max_safe_inner", self._max_accumulator // self._max_input**2
        )

    @property
    def max_input(self) -> int:
        return self._max_input

    @property
    def max_accumulator(self) -> int:
        return self._max_accumulator

    def max_safe_inner(self) -> int:
        """Largest inner dimension whose worst-case dot product fits."""
        return self._max_safe_inner


@dataclass
class EngineStats:
    mac_count: int = 0
    tile_loads: int = 0
    tiles_dispatched: int = 0
    estimated_cycles: int = 0

    def __iadd__(self, other: "EngineStats"):
        self.mac_count += other.mac_count
        self.tile_loads += other.tile_loads
        self.tiles_dispatched += other.tiles_dispatched
        self.estimated_cycles += other.estimated_cycles
        return self


def _check_dispatch(A: np.ndarray, B: np.ndarray, cfg: EngineConfig):
    if A.ndim != 2 or B.ndim != 2 or A.shape[1] != B.shape[0]:
        raise ValueError(f"incompatible shapes {A.shape} x {B.shape}")
    s = A.shape[1]
    if s > cfg.max_safe_inner():
        raise EngineOverflowError(
            f"inner dimension {s} can overflow a {cfg.accumulator_bits}-bit "
            f"accumulator with {cfg.input_bits}-bit inputs; "
            f"max safe inner dimension is {cfg.max_safe_inner()}"
        )
    limit = cfg.max_input
    for M, name in ((A, "A"), (B, "B")):
        if M.size and int(M.max()) > limit:
            raise EngineOverflowError(
                f"{name} contains elements above the {cfg.input_bits}-bit "
                f"input limit {limit}"
            )


def _work_dtype(inner: int, cfg: EngineConfig):
    """Narrowest representation that keeps every dot product exact."""
    peak = inner * cfg.max_input * cfg.max_input
    if peak < _FLOAT64_EXACT_MAX:
        return np.float64
    if peak <= _INT64_MAX:
        return np.int64
    return object


def _exact_product(A: np.ndarray, B: np.ndarray, dtype) -> np.ndarray:
    if A.dtype != dtype:
        A = A.astype(dtype)
    if B.dtype != dtype:
        B = B.astype(dtype)
    # np.dot rather than matmul: it accepts object arrays for the
    # arbitrary-precision fallback and hits BLAS for float64
    return np.dot(A, B)


def _to_int(C: np.ndarray) -> np.ndarray:
    if C.dtype == np.float64:
        return C.astype(np.int64)
    return C


def systolic_simulate_tile(Atile: np.ndarray, Btile: np.ndarray, cfg: EngineConfig):
    """Exact partial product of one tile plus its cycle estimate.

    Cycles = (rows + cols + inner - 2) wavefront fill/drain + inner
    accumulation steps; data-independent by construction.
    """
    r, s = Atile.shape
    s2, t = Btile.shape
    if r > cfg.tile_dim or t > cfg.tile_dim or s > cfg.tile_dim or s != s2:
        raise RuntimeError(f"tile {Atile.shape} x {Btile.shape} exceeds tile_dim")
    cycles = (r + t + s - 2) + s
    return _exact_product(Atile, Btile, _work_dtype(s, cfg)), cycles


def _naive_matmul(A, B, cfg: EngineConfig):
    r, s = A.shape
    t = B.shape[1]
    C = _exact_product(A, B, _work_dtype(s, cfg))
    return C, EngineStats(mac_count=r * s * t)


def _systolic_matmul(A, B, cfg: EngineConfig):
    r, s = A.shape
    t = B.shape[1]
    td = cfg.tile_dim
    dtype = _work_dtype(s, cfg)
    if A.dtype != dtype:
        A = A.astype(dtype)
    if B.dtype != dtype:
        B = B.astype(dtype)
    C = np.zeros((r, t), dtype=dtype)
    stats = EngineStats()
    for i0 in range(0, r, td):
        i1 = min(i0 + td, r)
        for j0 in range(0, t, td):
            j1 = min(j0 + td, t)
            for k0 in range(0, s, td):
                k1 = min(k0 + td, s)
                # tile views, not copies; the load cost shows up in
                # tile_loads and the BLAS call packs internally
                tileA = A[i0:i1, k0:k1]
                tileB = B[k0:k1, j0:j1]
                part, cycles = systolic_simulate_tile(tileA, tileB, cfg)
                C[i0:i1, j0:j1] += part
                stats.mac_count += (i1 - i0) * (j1 - j0) * (k1 - k0)
                stats.tile_loads += 2
                stats.tiles_dispatched += 1
                stats.estimated_cycles += cycles + DISPATCH_OVERHEAD_CYCLES
    return C, stats


def matmul(A, B, cfg: EngineConfig, backend: str = "naive", _prechecked: bool = False):
    """Exact integer product (no modular reduction) plus run statistics.

    Inputs must be nonnegative integers below 2^input_bits; a dispatch
    whose worst-case accumulation exceeds the accumulator width is
    refused with a diagnostic, never silently wrapped. Callers that
    have already validated the full operands (every sub-block of a
    valid pair is valid) may pass _prechecked to skip the guard.
    """
    A = np.asarray(A)
    B = np.asarray(B)
    if not _prechecked:
        _check_dispatch(A, B, cfg)
    if backend == "naive":
        C, stats = _naive_matmul(A, B, cfg)
    elif backend == "systolic":
        C, stats = _systolic_matmul(A, B, cfg)
    else:
        raise ValueError(f"unknown backend {backend!r}; expected one of {BACKENDS}")
    return _to_int(C), stats


class MacEngine:
    """One backend bound to one config, with running stat totals.

    Each call returns its own stats record; `totals` accumulates across
    calls. The compute itself is stateless, so concurrent callers with
    separate engines see deterministic results.
    """

    def __init__(self, cfg: EngineConfig, backend: str = "naive"):
        if backend not in BACKENDS:
            raise ValueError(f"unknown backend {backend!r}; expected one of {BACKENDS}")
        self.cfg = cfg
        self.backend = backend
        self.totals = EngineStats()

    def matmul(self, A, B, _prechecked: bool = False):
        C, stats = matmul(A, B, self.cfg, backend=self.backend, _prechecked=_prechecked)
        self.totals += stats
        return C, stats
