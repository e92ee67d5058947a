"""t-SVD tensor algebra, PSTNN proximal maps and ADMM recovery solvers.

Tensors are float64 ``numpy`` arrays of shape ``(n1, n2, n3)``.
"""

__version__ = "0.1.0"

from .metrics import MetricReport, psnr, rse, ssim
from .prox import ProxParams, psvt_matrix, pstnn_prox_tensor, soft_threshold
from .solvers import RecoveryResult, SolverConfig, complete, rpca
from .synth import corrupt_sparse, gen_low_tubal_rank, phase_diagram, sample_mask
from .t_algebra import (
    TSvdFactors,
    conj_transpose,
    identity_tensor,
    multi_rank,
    pstnn,
    t_product,
    t_svd,
    tnn,
    tubal_rank,
)
from .tensor_core import fft_mode3, fold, fro_norm, ifft_mode3, inf_norm, inner, unfold

__all__ = [
    "MetricReport", "ProxParams", "RecoveryResult", "SolverConfig", "TSvdFactors",
    "complete", "conj_transpose", "corrupt_sparse", "gen_low_tubal_rank", "phase_diagram", "sample_mask", "fft_mode3", "fold", "fro_norm", "identity_tensor",
    "ifft_mode3", "inf_norm", "inner", "multi_rank", "psnr", "pstnn", "pstnn_prox_tensor",
    "psvt_matrix", "rpca", "rse", "soft_threshold", "ssim", "t_product", "t_svd", "tnn",
    "tubal_rank", "unfold",
]
