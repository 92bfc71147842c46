"""Exact negacyclic polynomial multiplication on a simulated MAC-array
backend, with RNS coefficient decomposition and CRT reconstruction."""

from .engine import EngineConfig, EngineStats, MacEngine, matmul, systolic_simulate_tile
from .errors import (
    BaseTooSmallError,
    ConfigurationError,
    EngineOverflowError,
    InvalidPlanError,
    ParameterMismatchError,
    PolymacError,
    RnsRangeError,
    TextFormatError,
    UnsupportedParametersError,
    UnsupportedShapeError,
)
from .negamatrix import (
    BlockPlan,
    NegacyclicMatrixZq,
    batch_mul,
    blocked_vec_mat_mul,
    build_matrix,
    make_block_plan,
    vec_mat_mul,
)
from .ntt import NttContext, forward_ntt, inverse_ntt, make_context, ntt_mul
from .pipeline import (
    FixedOperandMultiplier,
    NegacyclicOperand,
    OperandCache,
    PipelineConfig,
    convert_operand_a,
    convert_operand_b,
    gen_config,
    pipeline_batch_mul,
    pipeline_mul,
)
from .ring import (
    Polynomial,
    RingParams,
    format_polynomial,
    karatsuba_negacyclic_mul,
    parse_polynomial,
    poly_add,
    poly_sub,
    sample_polynomial,
    schoolbook_negacyclic_mul,
)
from .rns import (
    RnsBase,
    RnsSelectionParams,
    crt_reconstruct,
    rns_elementwise_check,
    select_rns_base,
    to_residues,
)

__version__ = "0.1.0"
