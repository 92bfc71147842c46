"""End-to-end coefficient-representation multiplication.

Flow: pick an RNS base and block plan for the ring and hardware limits,
convert the fixed operand b into per-modulus residue matrices (cached
for reuse), push each residue channel through the blocked engine
multiply, reduce each accumulated dot product mod m_i, reconstruct the
exact integer sums by CRT, and reduce mod q. The result is always
bit-identical to the schoolbook oracle.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .engine import EngineConfig, MacEngine, _work_dtype
from .errors import ConfigurationError, ParameterMismatchError
from .negamatrix import BlockPlan, blocked_matmul, make_block_plan, negation_table, rotation_index
from .ring import Polynomial, RingParams, format_polynomial, is_power_of_two
from .rns import RnsBase, RnsSelectionParams, select_rns_base

DEFAULT_BLOCK_CAP = 1024


@dataclass(frozen=True)
class PipelineConfig:
    ring: RingParams
    base: RnsBase
    plan: BlockPlan
    engine_cfg: EngineConfig

    @property
    def fingerprint(self) -> str:
        """Stable hash over the canonical serialization of all fields."""
        doc = {
            "n": self.ring.n,
            "q": str(self.ring.q),
            "moduli": list(self.base.moduli),
            "word_bits": self.base.word_bits,
            "block_dim": self.plan.block_dim,
            "tile_dim": self.engine_cfg.tile_dim,
            "input_bits": self.engine_cfg.input_bits,
            "accumulator_bits": self.engine_cfg.accumulator_bits,
        }
        blob = json.dumps(doc, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def validate_config(cfg: PipelineConfig):
    """Check every cross-field bound; raise naming the failing one."""
    n, q = cfg.ring.n, cfg.ring.q
    bound = n * q * q
    if cfg.base.product <= bound:
        raise ConfigurationError(
            f"RNS product {cfg.base.product} must exceed n*q^2 = {bound}"
        )
    mmax = cfg.base.max_modulus
    acc_need = n * (mmax - 1) * (mmax - 1)
    if acc_need > cfg.engine_cfg.max_accumulator:
        raise ConfigurationError(
            f"worst-case accumulation n*(m_max-1)^2 = {acc_need} exceeds the "
            f"{cfg.engine_cfg.accumulator_bits}-bit accumulator limit "
            f"{cfg.engine_cfg.max_accumulator}"
        )
    if cfg.plan.n != n:
        raise ConfigurationError(f"plan n={cfg.plan.n} does not match ring n={n}")
    if mmax > cfg.engine_cfg.max_input:
        raise ConfigurationError(
            f"max modulus {mmax} exceeds the {cfg.engine_cfg.input_bits}-bit "
            f"engine input limit"
        )


def gen_config(
    ring: RingParams,
    hw: EngineConfig | None = None,
    word_bits: int = 8,
    block_cap: int = DEFAULT_BLOCK_CAP,
) -> PipelineConfig:
    """Derive a full configuration: RNS base via the greedy rule with
    accumulation length n, block size capped at `block_cap`."""
    if hw is None:
        hw = EngineConfig(input_bits=word_bits)
    if not is_power_of_two(ring.n):
        raise ConfigurationError(f"pipeline needs power-of-two n, got {ring.n}")
    if not is_power_of_two(block_cap):
        raise ConfigurationError(f"block_cap must be a power of two, got {block_cap}")
    base = select_rns_base(
        RnsSelectionParams(q=ring.q, accumulation_length=ring.n, word_bits=word_bits)
    )
    plan = make_block_plan(ring.n, min(ring.n, block_cap))
    cfg = PipelineConfig(ring=ring, base=base, plan=plan, engine_cfg=hw)
    validate_config(cfg)
    return cfg


def _hash_polynomial(p: Polynomial) -> str:
    return hashlib.sha256(format_polynomial(p).encode()).hexdigest()


# Above this many bytes the per-modulus matrices stay as constant-
# diagonal strided views over a length-2n-1 vector instead of dense
# copies. Results are identical; the views cost O(n) to build instead
# of O(k n^2) and BLAS packs strided panels internally anyway.
DENSE_OPERAND_LIMIT_BYTES = 1 << 20


@dataclass(frozen=True)
class NegacyclicOperand:
    """Converted fixed operand: one residue matrix per modulus.

    residue_mats[i] is the n x n operand matrix reduced mod m_i, in the
    engine's working dtype (float64 carrying exact small integers when
    the accumulator bound allows) so dispatches avoid per-call
    conversion. Large instances are strided views, not dense copies.
    """

    source_hash: str
    config_fingerprint: str
    ring: RingParams
    residue_mats: tuple


_INT64_MAX = 2**63 - 1


def _residue_tables(coeffs, moduli, q: int, dtype) -> np.ndarray:
    """(k, 2n) lookup tables: residues of b then of its negation."""
    k, n = len(moduli), len(coeffs)
    tabs = np.empty((k, 2 * n), dtype=dtype)
    if q - 1 <= _INT64_MAX:
        pos = np.asarray(coeffs, dtype=np.int64)
        neg = (q - pos) % q
        for i, m in enumerate(moduli):
            tabs[i, :n] = pos % m
            tabs[i, n:] = neg % m
    else:
        for i, m in enumerate(moduli):
            for j, v in enumerate(coeffs):
                tabs[i, j] = v % m
                tabs[i, n + j] = ((q - v) % q) % m
    return tabs


def _diagonal_view(pos: np.ndarray, neg: np.ndarray) -> np.ndarray:
    """n x n view with entry (r, c) = pos[c-r] for c >= r and the
    negated neg[n+c-r] below the wrap; the matrix is constant along
    diagonals, so one length-2n-1 vector backs the whole thing."""
    n = pos.shape[0]
    diag = np.concatenate([neg[1:], pos])
    step = diag.strides[0]
    view = np.lib.stride_tricks.as_strided(
        diag[n - 1 :], shape=(n, n), strides=(-step, step)
    )
    view.setflags(write=False)
    return view


def convert_operand_b(b: Polynomial, cfg: PipelineConfig) -> NegacyclicOperand:
    if b.params != cfg.ring:
        raise ParameterMismatchError(f"ring mismatch: {b.params} vs {cfg.ring}")
    n = cfg.ring.n
    dtype = _work_dtype(n, cfg.engine_cfg)
    tabs = _residue_tables(b.coeffs, cfg.base.moduli, cfg.ring.q, dtype)
    dense_bytes = len(cfg.base) * n * n * tabs.itemsize
    if dense_bytes <= DENSE_OPERAND_LIMIT_BYTES:
        mats = tabs[:, rotation_index(n)]
        mats.setflags(write=False)
        mats = tuple(mats[i] for i in range(len(cfg.base)))
    else:
        mats = tuple(
            _diagonal_view(tabs[i, :n], tabs[i, n:]) for i in range(len(cfg.base))
        )
    return NegacyclicOperand(
        source_hash=_hash_polynomial(b),
        config_fingerprint=cfg.fingerprint,
        ring=cfg.ring,
        residue_mats=mats,
    )


def convert_operand_a(a: Polynomial, cfg: PipelineConfig) -> np.ndarray:
    """Per-modulus residue row vectors, shape (k, n)."""
    if a.params != cfg.ring:
        raise ParameterMismatchError(f"ring mismatch: {a.params} vs {cfg.ring}")
    dtype = _work_dtype(cfg.ring.n, cfg.engine_cfg)
    k, n = len(cfg.base), cfg.ring.n
    vecs = np.empty((k, n), dtype=dtype)
    if cfg.ring.q - 1 <= _INT64_MAX:
        coeffs = np.asarray(a.coeffs, dtype=np.int64)
        for i, m in enumerate(cfg.base.moduli):
            vecs[i] = coeffs % m
    else:
        for i, m in enumerate(cfg.base.moduli):
            for j, v in enumerate(a.coeffs):
                vecs[i, j] = v % m
    return vecs


def _check_operand(B: NegacyclicOperand, cfg: PipelineConfig):
    if B.config_fingerprint != cfg.fingerprint:
        raise ParameterMismatchError(
            "operand was converted under a different configuration"
        )


def _crt_rows_to_polys(res: np.ndarray, cfg: PipelineConfig) -> list:
    """res: (k, rows, n) int64 residues -> rows exact polynomials.

    CRT runs once per output coefficient after all block merges; the
    reconstructed integer dot product lies in [0, n*q^2) < M, so the
    final mod q is exact.
    """
    q, M = cfg.ring.q, cfg.base.product
    rows = res.shape[1]
    total = np.zeros((rows, res.shape[2]), dtype=object)
    for i, w in enumerate(cfg.base.crt_weights):
        total += res[i].astype(object) * w
    out = []
    for r in range(rows):
        coeffs = tuple(int(v % M) % q for v in total[r])
        out.append(Polynomial(cfg.ring, coeffs))
    return out


def _run_channels(vecs: np.ndarray, B: NegacyclicOperand, cfg: PipelineConfig, engine: MacEngine):
    """Blocked engine multiply per residue channel, reduce mod m_i."""
    k = len(cfg.base)
    rows = vecs.shape[1] if vecs.ndim == 3 else 1
    res = np.empty((k, rows, cfg.ring.n), dtype=np.int64)
    for i, m in enumerate(cfg.base.moduli):
        A = vecs[i] if vecs.ndim == 3 else vecs[i : i + 1]
        C = blocked_matmul(A, B.residue_mats[i], cfg.plan, engine)
        if C.dtype == np.float64:
            C = C.astype(np.int64)
        res[i] = (
            C % m if C.dtype == np.int64 else np.array([[int(v) % m for v in row] for row in C])
        )
    return res


def pipeline_mul(
    a: Polynomial,
    B: NegacyclicOperand,
    cfg: PipelineConfig,
    engine: MacEngine | None = None,
) -> Polynomial:
    """Full RNS-blocked-CRT multiply; exact for every configuration."""
    validate_config(cfg)
    _check_operand(B, cfg)
    if engine is None:
        engine = MacEngine(cfg.engine_cfg, backend="naive")
    vecs = convert_operand_a(a, cfg)
    res = _run_channels(vecs, B, cfg, engine)
    return _crt_rows_to_polys(res, cfg)[0]


def pipeline_batch_mul(
    A: list,
    B: NegacyclicOperand,
    cfg: PipelineConfig,
    engine: MacEngine | None = None,
) -> list:
    """Many left operands against one cached right operand: a single
    matrix-matrix engine dispatch per residue channel."""
    if not A:
        return []
    validate_config(cfg)
    _check_operand(B, cfg)
    if engine is None:
        engine = MacEngine(cfg.engine_cfg, backend="naive")
    stacked = np.stack([convert_operand_a(a, cfg) for a in A], axis=1)
    res = _run_channels(stacked, B, cfg, engine)
    return _crt_rows_to_polys(res, cfg)


class OperandCache:
    """Converted-operand store keyed by (polynomial hash, config
    fingerprint). Eviction is caller-controlled."""

    def __init__(self):
        self._store = {}

    def __len__(self):
        return len(self._store)

    def get_or_convert(self, b: Polynomial, cfg: PipelineConfig) -> NegacyclicOperand:
        key = (_hash_polynomial(b), cfg.fingerprint)
        op = self._store.get(key)
        if op is None:
            op = convert_operand_b(b, cfg)
            self._store[key] = op
        return op

    def evict(self, b: Polynomial, cfg: PipelineConfig):
        self._store.pop((_hash_polynomial(b), cfg.fingerprint), None)

    def clear(self):
        self._store.clear()


class FixedOperandMultiplier:
    """fit/transform-style wrapper around operand reuse.

    ``fit(b)`` converts and caches the fixed operand once;
    ``transform(polys)`` multiplies any number of left operands against
    it through one batched dispatch per residue channel.
    """

    def __init__(self, cfg: PipelineConfig, backend: str = "naive"):
        self.cfg = cfg
        self.backend = backend
        self.operand_ = None

    def get_params(self):
        return {"cfg": self.cfg, "backend": self.backend}

    def set_params(self, **params):
        for key, val in params.items():
            if key not in ("cfg", "backend"):
                raise ValueError(f"unknown parameter {key!r}")
            setattr(self, key, val)
        return self

    def fit(self, b: Polynomial):
        self.operand_ = convert_operand_b(b, self.cfg)
        return self

    def transform(self, polys: list) -> list:
        if self.operand_ is None:
            raise RuntimeError("call fit(b) before transform")
        engine = MacEngine(self.cfg.engine_cfg, backend=self.backend)
        return pipeline_batch_mul(list(polys), self.operand_, self.cfg, engine)


def config_to_dict(
    cfg: PipelineConfig, backend: str = "systolic", block_cap: int = DEFAULT_BLOCK_CAP
) -> dict:
    """Serializable key-value form; q is decimal text since it may
    exceed native word size."""
    return {
        "n": cfg.ring.n,
        "q": str(cfg.ring.q),
        "word_bits": cfg.base.word_bits,
        "tile_dim": cfg.engine_cfg.tile_dim,
        "input_bits": cfg.engine_cfg.input_bits,
        "accumulator_bits": cfg.engine_cfg.accumulator_bits,
        "block_cap": block_cap,
        "backend": backend,
    }


def config_from_dict(doc: dict):
    """Rebuild (PipelineConfig, backend) from the serialized form. The
    RNS base and its CRT constants are always recomputed, never read
    from disk."""
    ring = RingParams(int(doc["n"]), int(doc["q"]))
    hw = EngineConfig(
        tile_dim=int(doc.get("tile_dim", 128)),
        input_bits=int(doc.get("input_bits", doc.get("word_bits", 8))),
        accumulator_bits=int(doc.get("accumulator_bits", 32)),
    )
    cfg = gen_config(
        ring,
        hw=hw,
        word_bits=int(doc.get("word_bits", 8)),
        block_cap=int(doc.get("block_cap", DEFAULT_BLOCK_CAP)),
    )
    return cfg, str(doc.get("backend", "systolic"))


def load_config(path) -> tuple:
    with open(path, "r", encoding="utf-8") as fh:
        return config_from_dict(json.load(fh))
