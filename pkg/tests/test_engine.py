import numpy as np
import pytest

from polymac.engine import (
    BACKENDS,
    DISPATCH_OVERHEAD_CYCLES,
    EngineConfig,
    MacEngine,
    matmul,
    systolic_simulate_tile,
)
from polymac.errors import EngineOverflowError


def random_operands(rng, r, s, t, hi):
    A = rng.integers(0, hi + 1, size=(r, s), dtype=np.int64)
    B = rng.integers(0, hi + 1, size=(s, t), dtype=np.int64)
    return A, B


class TestExactness:
    def test_hand_example(self):
        cfg = EngineConfig()
        A = np.array([[1, 2], [3, 4]])
        B = np.array([[5, 6], [7, 8]])
        C, _ = matmul(A, B, cfg)
        assert C.tolist() == [[19, 22], [43, 50]]

    @pytest.mark.parametrize("backend", BACKENDS)
    def test_matches_bigint_schoolbook(self, backend):
        rng = np.random.default_rng(11)
        cfg = EngineConfig(tile_dim=4)
        for _ in range(50):
            r, s, t = (int(rng.integers(1, 13)) for _ in range(3))
            A, B = random_operands(rng, r, s, t, 255)
            C, _ = matmul(A, B, cfg, backend=backend)
            ref = [
                [sum(int(A[i, k]) * int(B[k, j]) for k in range(s)) for j in range(t)]
                for i in range(r)
            ]
            assert C.tolist() == ref

    def test_backends_agree(self):
        rng = np.random.default_rng(5)
        cfg = EngineConfig(tile_dim=8)
        for _ in range(30):
            r, s, t = (int(rng.integers(1, 33)) for _ in range(3))
            A, B = random_operands(rng, r, s, t, 255)
            Cn, _ = matmul(A, B, cfg, backend="naive")
            Cs, _ = matmul(A, B, cfg, backend="systolic")
            assert np.array_equal(Cn, Cs)

    def test_object_dtype_path(self):
        # 60-bit inputs with a wide accumulator force the bigint path
        cfg = EngineConfig(input_bits=60, accumulator_bits=200, tile_dim=2)
        rng = np.random.default_rng(3)
        vals = [[int(rng.integers(0, 2**60)) for _ in range(3)] for _ in range(3)]
        A = np.array(vals, dtype=object)
        B = np.array(vals, dtype=object).T
        C, _ = matmul(A, B, cfg, backend="systolic")
        ref = [
            [sum(A[i, k] * B[k, j] for k in range(3)) for j in range(3)]
            for i in range(3)
        ]
        assert C.tolist() == ref

    def test_result_is_integer_typed(self):
        C, _ = matmul(np.eye(3, dtype=np.int64), np.eye(3, dtype=np.int64),
                      EngineConfig())
        assert C.dtype != np.float64


class TestOverflowGuard:
    def test_inner_too_long_refused(self):
        cfg = EngineConfig(input_bits=8, accumulator_bits=32)
        s = cfg.max_safe_inner() + 1
        A = np.zeros((1, s), dtype=np.int64)
        B = np.zeros((s, 1), dtype=np.int64)
        with pytest.raises(EngineOverflowError, match="max safe inner"):
            matmul(A, B, cfg)

    def test_boundary_inner_accepted(self):
        cfg = EngineConfig(input_bits=8, accumulator_bits=32)
        s = cfg.max_safe_inner()
        A = np.full((1, s), 255, dtype=np.int64)
        B = np.full((s, 1), 255, dtype=np.int64)
        C, _ = matmul(A, B, cfg)
        assert int(C[0, 0]) == s * 255 * 255 <= cfg.max_accumulator

    def test_element_above_input_width_refused(self):
        cfg = EngineConfig(input_bits=8)
        A = np.array([[256]])
        with pytest.raises(EngineOverflowError, match="input limit"):
            matmul(A, A, cfg)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="incompatible"):
            matmul(np.zeros((2, 3)), np.zeros((2, 3)), EngineConfig())

    def test_narrow_accumulator_example(self):
        # 16-bit inputs into a 32-bit accumulator leave room for a
        # single product only
        cfg = EngineConfig(input_bits=16, accumulator_bits=32)
        assert cfg.max_safe_inner() == 1


class TestCycleModel:
    def test_single_tile_square(self):
        # (128+128+128-2) + 128 = 510 per full tile
        cfg = EngineConfig(tile_dim=128)
        A = np.ones((128, 128), dtype=np.int64)
        _, cycles = systolic_simulate_tile(A, A, cfg)
        assert cycles == 510

    def test_one_by_one_tile(self):
        cfg = EngineConfig(tile_dim=1, input_bits=8, accumulator_bits=32)
        A = np.array([[3]])
        _, cycles = systolic_simulate_tile(A, A, cfg)
        assert cycles == (1 + 1 + 1 - 2) + 1 == 2

    def test_tiling_counts_256_cube(self):
        # 256/128 = 2 blocks per axis -> 2*2*2 dispatches
        cfg = EngineConfig(tile_dim=128)
        A = np.ones((256, 256), dtype=np.int64)
        _, stats = matmul(A, A, cfg, backend="systolic")
        assert stats.tiles_dispatched == 8
        assert stats.tile_loads == 16
        assert stats.mac_count == 256**3
        assert stats.estimated_cycles == 8 * (510 + DISPATCH_OVERHEAD_CYCLES)

    def test_ragged_edges(self):
        cfg = EngineConfig(tile_dim=4)
        A = np.ones((5, 6), dtype=np.int64)
        B = np.ones((6, 7), dtype=np.int64)
        _, stats = matmul(A, B, cfg, backend="systolic")
        assert stats.tiles_dispatched == 2 * 2 * 2
        assert stats.mac_count == 5 * 6 * 7

    def test_cycles_data_independent(self):
        cfg = EngineConfig(tile_dim=8)
        rng = np.random.default_rng(1)
        A1, B1 = random_operands(rng, 20, 20, 20, 255)
        A0 = np.zeros_like(A1)
        _, s1 = matmul(A1, B1, cfg, backend="systolic")
        _, s0 = matmul(A0, B1, cfg, backend="systolic")
        assert s1.estimated_cycles == s0.estimated_cycles


class TestMacEngine:
    def test_totals_accumulate(self):
        eng = MacEngine(EngineConfig(tile_dim=4), backend="systolic")
        A = np.ones((4, 4), dtype=np.int64)
        eng.matmul(A, A)
        eng.matmul(A, A)
        assert eng.totals.tiles_dispatched == 2
        assert eng.totals.mac_count == 2 * 4**3

    def test_unknown_backend(self):
        with pytest.raises(ValueError, match="unknown backend"):
            MacEngine(EngineConfig(), backend="gpu")
        with pytest.raises(ValueError, match="unknown backend"):
            matmul(np.eye(2), np.eye(2), EngineConfig(), backend="gpu")

    def test_tile_dim_must_be_power_of_two(self):
        with pytest.raises(ValueError, match="power of two"):
            EngineConfig(tile_dim=96)
