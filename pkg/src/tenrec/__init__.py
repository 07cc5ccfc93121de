"""Robust low-rank recovery of 3-way tensors with t-SVD based solvers."""
from . import errors
from .media import NoiseSpec, inject_noise, load_any, save_any
from .metrics import QualityReport, psnr, quality, ssim
from .nonlocal_trpca import GroupingConfig, GroupingMethod, PatchIndex, nn_trpca
from .pipeline import METHODS, restore
from .shrinkage import log_weights, soft_threshold, t_svt, t_wsvt
from .solvers import Decomposition, SolverConfig, SolverReport, kkt_residuals, n_trpca, solve_batch, tnn_trpca
from .tensor_core import (
    bcirc,
    bdiag,
    fft3,
    ifft3,
    read_t3rc,
    t_product,
    t_svd,
    t_transpose,
    taln,
    tnn,
    tubal_singular_values,
    write_t3rc,
)

__version__ = "0.1.0"
