"""Command-line front end: single multiplications, benchmark grid,
self-tests, and plotting.

Exit codes: 0 ok, 1 verification/self-test failure, 2 usage or parse
errors.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
import time
from dataclasses import dataclass

import numpy as np

from .engine import BACKENDS, EngineConfig, MacEngine
from .errors import PolymacError
from .negamatrix import build_matrix, make_block_plan, vec_mat_mul
from .ntt import make_context, ntt_mul
from .pipeline import (
    DEFAULT_BLOCK_CAP,
    PipelineConfig,
    convert_operand_b,
    gen_config,
    load_config,
    pipeline_mul,
)
from .ring import (
    Polynomial,
    RingParams,
    karatsuba_negacyclic_mul,
    parse_polynomial,
    sample_polynomial,
    schoolbook_negacyclic_mul,
)
from .rns import RnsBase, crt_reconstruct, to_residues
from .errors import UnsupportedParametersError

CSV_HEADER = [
    "n",
    "k",
    "q",
    "backend",
    "rep",
    "wall_time_s",
    "mac_count",
    "tiles_dispatched",
    "estimated_cycles",
    "verified",
]

DEFAULT_DEGREES = (2**8, 2**10, 2**14)
DEFAULT_BASE_SIZES = (8, 16, 128)


# ---------------------------------------------------------------- mul

def _read_poly(path: str) -> Polynomial:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_polynomial(fh.read())


def _multiply(a: Polynomial, b: Polynomial, args) -> Polynomial:
    method = args.method
    if method == "schoolbook":
        return schoolbook_negacyclic_mul(a, b)
    if method == "karatsuba":
        return karatsuba_negacyclic_mul(a, b, threshold=args.threshold)
    if method == "ntt":
        return ntt_mul(a, b, make_context(a.params))
    if args.config:
        cfg, backend = load_config(args.config)
        if cfg.ring != a.params:
            raise PolymacError(
                f"config ring {cfg.ring} does not match input ring {a.params}"
            )
    else:
        cfg = gen_config(a.params)
        backend = "systolic"
    engine = MacEngine(cfg.engine_cfg, backend=args.backend or backend)
    return pipeline_mul(a, convert_operand_b(b, cfg), cfg, engine=engine)


def cmd_mul(args) -> int:
    a = _read_poly(args.a)
    b = _read_poly(args.b)
    result = _multiply(a, b, args)
    print(" ".join(str(c) for c in result.coeffs))
    if args.verify and args.method != "schoolbook":
        oracle = schoolbook_negacyclic_mul(a, b)
        if result != oracle:
            print("verification FAILED against schoolbook oracle", file=sys.stderr)
            return 1
    return 0


# -------------------------------------------------------------- bench

@dataclass
class BenchRecord:
    n: int
    k: int
    q: int
    backend: str
    rep: int
    wall_time_s: float
    mac_count: int
    tiles_dispatched: int
    estimated_cycles: int
    verified: bool


def greedy_coprime_moduli(word_bits: int, count: int):
    """First `count` members of the descending pairwise-coprime
    sequence below 2^word_bits, or None if that many do not exist."""
    accepted = []
    for cand in range((1 << word_bits) - 1, 1, -1):
        if all(math.gcd(cand, m) == 1 for m in accepted):
            accepted.append(cand)
            if len(accepted) == count:
                return accepted
    return None


def synthesize_q(n: int, moduli) -> int | None:
    """Largest q with n*q^2 < product of the forced base; None if no
    q >= 2 fits. Reproduces the benchmark grid shape for a forced k."""
    P = math.prod(moduli)
    q = math.isqrt((P - 1) // n)
    while q >= 2 and n * q * q >= P:
        q -= 1
    return q if q >= 2 else None


def _spot_check(a: Polynomial, b: Polynomial, result: Polynomial, positions) -> bool:
    """Direct negacyclic dot product for selected output coefficients;
    O(n) per position, used where the full oracle is too slow."""
    n, q = a.params.n, a.params.q
    ac, bc = a.coeffs, b.coeffs
    for j in positions:
        total = 0
        for i in range(n):
            d = j - i
            if d >= 0:
                total += ac[i] * bc[d]
            else:
                total -= ac[i] * bc[n + d]
        if result.coeffs[j] != total % q:
            return False
    return True


def run_bench(
    degrees=DEFAULT_DEGREES,
    base_sizes=DEFAULT_BASE_SIZES,
    reps: int = 3,
    backend: str = "systolic",
    seed: int = 0,
    max_n: int | None = None,
    word_bits: int = 8,
    tile_dim: int = 128,
):
    """Run the benchmark grid; yields BenchRecord rows plus a list of
    (n, k, reason) skips."""
    records, skips = [], []
    for n in degrees:
        if max_n is not None and n > max_n:
            continue
        for k in base_sizes:
            moduli = greedy_coprime_moduli(word_bits, k)
            if moduli is None:
                skips.append(
                    (n, k, f"fewer than {k} pairwise-coprime moduli exist "
                           f"below 2^{word_bits}")
                )
                continue
            q = synthesize_q(n, moduli)
            if q is None:
                skips.append((n, k, "no q >= 2 satisfies n*q^2 < base product"))
                continue
            ring = RingParams(n, q)
            base = RnsBase(tuple(moduli), word_bits)
            acc_need = n * (base.max_modulus - 1) ** 2
            acc_bits = max(32, acc_need.bit_length())
            hw = EngineConfig(
                tile_dim=tile_dim, input_bits=word_bits, accumulator_bits=acc_bits
            )
            plan = make_block_plan(n, min(n, DEFAULT_BLOCK_CAP))
            cfg = PipelineConfig(ring=ring, base=base, plan=plan, engine_cfg=hw)

            a = sample_polynomial(ring, seed * 7919 + n * 31 + k)
            b = sample_polynomial(ring, seed * 7919 + n * 31 + k + 1)
            operand = convert_operand_b(b, cfg)
            for rep in range(reps):
                engine = MacEngine(hw, backend=backend)
                t0 = time.perf_counter()
                result = pipeline_mul(a, operand, cfg, engine=engine)
                wall = time.perf_counter() - t0
                if n <= 1024:
                    verified = result == schoolbook_negacyclic_mul(a, b)
                else:
                    rng = np.random.default_rng(seed + rep)
                    positions = rng.integers(0, n, size=16)
                    verified = _spot_check(a, b, result, positions)
                records.append(
                    BenchRecord(
                        n=n,
                        k=k,
                        q=q,
                        backend=backend,
                        rep=rep,
                        wall_time_s=wall,
                        mac_count=engine.totals.mac_count,
                        tiles_dispatched=engine.totals.tiles_dispatched,
                        estimated_cycles=engine.totals.estimated_cycles,
                        verified=verified,
                    )
                )
    return records, skips


def write_csv(path, records, skips):
    """Deterministic grid order; skipped cells become comment lines so
    every data row keeps the full numeric schema."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for n, k, reason in skips:
            fh.write(f"# skipped n={n} k={k}: {reason}\n")
        for r in records:
            writer.writerow(
                [
                    r.n,
                    r.k,
                    r.q,
                    r.backend,
                    r.rep,
                    f"{r.wall_time_s:.6f}",
                    r.mac_count,
                    r.tiles_dispatched,
                    r.estimated_cycles,
                    str(r.verified).lower(),
                ]
            )


def read_csv(path):
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        reader = csv.DictReader(
            line for line in fh if not line.startswith("#")
        )
        for row in reader:
            rows.append(row)
    return rows


def plot_csv(csv_path, out_stem):
    """Two standalone SVG line charts from a results CSV: wall time vs
    n and MAC count vs n, one line per base size."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    rows = read_csv(csv_path)
    by_k = {}
    for row in rows:
        by_k.setdefault(int(row["k"]), {}).setdefault(int(row["n"]), []).append(row)

    outputs = []
    for column, label, suffix in (
        ("wall_time_s", "wall time (s)", "time"),
        ("mac_count", "MAC operations", "macs"),
    ):
        fig, ax = plt.subplots(figsize=(6, 4))
        for k in sorted(by_k):
            ns = sorted(by_k[k])
            ys = [
                sum(float(r[column]) for r in by_k[k][n]) / len(by_k[k][n])
                for n in ns
            ]
            ax.plot(ns, ys, marker="o", label=f"k={k}")
        ax.set_xscale("log", base=2)
        ax.set_yscale("log")
        ax.set_xlabel("polynomial degree n")
        ax.set_ylabel(label)
        ax.legend()
        fig.tight_layout()
        out = f"{out_stem}_{suffix}.svg"
        fig.savefig(out)
        plt.close(fig)
        outputs.append(out)
    return outputs


def cmd_bench(args) -> int:
    records, skips = run_bench(
        reps=args.reps,
        backend=args.backend,
        seed=args.seed,
        max_n=args.max_n,
        word_bits=args.word_bits,
    )
    write_csv(args.out, records, skips)
    for n, k, reason in skips:
        print(f"skipped n={n} k={k}: {reason}")
    print(f"wrote {len(records)} rows to {args.out}")
    if args.plot:
        stem = args.out[:-4] if args.out.endswith(".csv") else args.out
        for out in plot_csv(args.out, stem):
            print(f"wrote {out}")
    if any(not r.verified for r in records):
        print("verification FAILED for some rows", file=sys.stderr)
        return 1
    return 0


# ----------------------------------------------------------- selftest

def _selftest_checks(inject_fault: bool):
    checks = []

    def check(name):
        def deco(fn):
            checks.append((name, fn))
            return fn
        return deco

    @check("schoolbook/karatsuba/ntt agreement (n=64, q=7681)")
    def _agreement():
        ring = RingParams(64, 7681)
        ctx = make_context(ring)
        for seed in range(10):
            a = sample_polynomial(ring, seed)
            b = sample_polynomial(ring, seed + 1000)
            ref = schoolbook_negacyclic_mul(a, b)
            if karatsuba_negacyclic_mul(a, b) != ref:
                return False
            if ntt_mul(a, b, ctx) != ref:
                return False
        return True

    @check("pipeline oracle agreement (n=64, q=2^40+15)")
    def _pipeline():
        ring = RingParams(64, 2**40 + 15)
        cfg = gen_config(ring)
        for seed in range(5):
            a = sample_polynomial(ring, seed)
            b = sample_polynomial(ring, seed + 1000)
            operand = convert_operand_b(b, cfg)
            if inject_fault:
                first = operand.residue_mats[0].copy()
                first[0, 0] = (int(first[0, 0]) + 1) % cfg.base.moduli[0]
                operand = type(operand)(
                    source_hash=operand.source_hash,
                    config_fingerprint=operand.config_fingerprint,
                    ring=operand.ring,
                    residue_mats=(first,) + tuple(operand.residue_mats[1:]),
                )
            if pipeline_mul(a, operand, cfg) != schoolbook_negacyclic_mul(a, b):
                return False
        return True

    @check("pipeline n=1 edge case")
    def _tiny():
        ring = RingParams(1, 97)
        cfg = gen_config(ring)
        a = sample_polynomial(ring, 5)
        b = sample_polynomial(ring, 6)
        return pipeline_mul(a, convert_operand_b(b, cfg), cfg) == (
            schoolbook_negacyclic_mul(a, b)
        )

    @check("RNS round trips (base [255,254,253,251])")
    def _rns():
        base = RnsBase((255, 254, 253, 251), 8)
        import random as _r

        rng = _r.Random(42)
        for _ in range(2000):
            x = rng.randrange(base.product)
            if crt_reconstruct(to_residues(x, base), base) != x:
                return False
        return True

    @check("block-plan invariance (n=64, q=17)")
    def _blocks():
        ring = RingParams(64, 17)
        cfg = gen_config(ring)
        a = sample_polynomial(ring, 9)
        b = sample_polynomial(ring, 10)
        outs = set()
        for bd in (64, 32, 16, 8):
            plan = make_block_plan(64, bd)
            c2 = PipelineConfig(
                ring=ring, base=cfg.base, plan=plan, engine_cfg=cfg.engine_cfg
            )
            outs.add(pipeline_mul(a, convert_operand_b(b, c2), c2).coeffs)
        return len(outs) == 1 and outs.pop() == schoolbook_negacyclic_mul(a, b).coeffs

    @check("backend equivalence (naive vs systolic)")
    def _backends():
        ring = RingParams(128, 12289)
        cfg = gen_config(ring)
        a = sample_polynomial(ring, 11)
        b = sample_polynomial(ring, 12)
        operand = convert_operand_b(b, cfg)
        r1 = pipeline_mul(a, operand, cfg, engine=MacEngine(cfg.engine_cfg, "naive"))
        r2 = pipeline_mul(a, operand, cfg, engine=MacEngine(cfg.engine_cfg, "systolic"))
        return r1 == r2

    @check("structured matrix row regression (n=3, q=7)")
    def _example():
        ring = RingParams(3, 7)
        b = Polynomial.make(ring, (4, 5, 6))
        M = build_matrix(b)
        if M.rows.tolist() != [[4, 5, 6], [1, 4, 5], [2, 1, 4]]:
            return False
        a = Polynomial.make(ring, (1, 2, 3))
        return vec_mat_mul(a, M).coeffs == (5, 2, 0)

    return checks


def cmd_selftest(args) -> int:
    checks = _selftest_checks(args.inject_fault)
    failed = 0
    for name, fn in checks:
        try:
            ok = fn()
        except PolymacError as exc:
            ok = False
            print(f"[ERROR] {name}: {exc}", file=sys.stderr)
        status = "PASS" if ok else "FAIL"
        if not ok:
            failed += 1
        print(f"[{status}] {name}")
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return 1 if failed else 0


# ----------------------------------------------------------------- main

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polymac",
        description="Negacyclic polynomial multiplication via blocked "
        "integer matrix multiplication with RNS/CRT coefficients",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_mul = sub.add_parser("mul", help="multiply two polynomials from text files")
    p_mul.add_argument("a", help="left operand file (`n q` line, then coefficients)")
    p_mul.add_argument("b", help="right operand file")
    p_mul.add_argument(
        "--method",
        choices=("pipeline", "schoolbook", "karatsuba", "ntt"),
        default="schoolbook",
    )
    p_mul.add_argument("--config", help="pipeline config JSON file")
    p_mul.add_argument("--backend", choices=BACKENDS, default=None)
    p_mul.add_argument("--threshold", type=int, default=32, help="Karatsuba cutoff")
    p_mul.add_argument(
        "--verify", action="store_true", help="cross-check against schoolbook"
    )
    p_mul.set_defaults(func=cmd_mul)

    p_bench = sub.add_parser("bench", help="run the benchmark grid, write CSV")
    p_bench.add_argument("--out", default="bench.csv")
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument("--reps", type=int, default=3)
    p_bench.add_argument("--max-n", type=int, default=None)
    p_bench.add_argument("--backend", choices=BACKENDS, default="systolic")
    p_bench.add_argument("--word-bits", type=int, default=8)
    p_bench.add_argument("--plot", action="store_true", help="also emit SVG charts")
    p_bench.set_defaults(func=cmd_bench)

    p_self = sub.add_parser("selftest", help="run the cross-oracle self-test matrix")
    p_self.add_argument(
        "--inject-fault",
        action="store_true",
        help="corrupt one residue to prove the detector reports failures",
    )
    p_self.set_defaults(func=cmd_selftest)

    p_plot = sub.add_parser("plot", help="render SVG charts from an existing CSV")
    p_plot.add_argument("csv")
    p_plot.add_argument("--out", default=None, help="output stem (default: CSV stem)")
    p_plot.set_defaults(func=cmd_plot)

    return parser


def cmd_plot(args) -> int:
    stem = args.out or (args.csv[:-4] if args.csv.endswith(".csv") else args.csv)
    for out in plot_csv(args.csv, stem):
        print(f"wrote {out}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except UnsupportedParametersError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except PolymacError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
