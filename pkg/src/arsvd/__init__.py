"""Adaptive-rank SVD compression of fully connected network weights.

Each weight matrix keeps the smallest number of singular triplets whose
partial spectral entropy reaches a fraction ``tau`` of the total.
"""

from .compress import (
    CostModel,
    LowRankFactors,
    arsvd_compress,
    cost_model,
    fixed_rank_truncate,
    reconstruction_error,
)
from .entropy import (
    EntropyProfile,
    NormalizedSpectrum,
    RankSelection,
    entropy_profile,
    normalize_spectrum,
    rank_for_spectrum,
    select_rank,
)
from .errors import (
    ArsvdError,
    ContainerError,
    ContractError,
    DivergenceError,
    NumericalError,
    ShapeError,
    SvdConvergenceError,
)
from .formats import load_dataset, load_model, read_container, save_model, write_container
from .harness import (
    BlobSpec,
    ExperimentConfig,
    SpectrumSpec,
    make_blobs,
    make_matrix_with_spectrum,
    run_sweep,
    step_spectrum_model,
)
from .linalg import SvdFactors, frobenius_norm, matmul, matvec, svd
from .model import (
    DenseLayer,
    FactoredLayer,
    FlopMeter,
    Metrics,
    ModelGraph,
    compress_model,
    compress_model_fixed_rank,
    evaluate,
    forward,
    forward_factored,
    macro_f1,
    parameter_count,
    predict,
)
from .report import CompressionReport, emit_report, read_report
from .train import TrainConfig, train_mlp

__version__ = "0.1.0"
