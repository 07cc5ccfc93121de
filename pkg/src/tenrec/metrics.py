"""PSNR and SSIM for 3-way image tensors."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ShapeMismatch, TooSmall
from .tensor_core import as_tensor

SSIM_WINDOW = 8
SSIM_K1 = 0.01
SSIM_K2 = 0.03


@dataclass(frozen=True)
class QualityReport:
    psnr: float
    ssim: float

    def to_dict(self) -> dict:
        return {"psnr": "inf" if math.isinf(self.psnr) else self.psnr, "ssim": self.ssim}


def _pair(reference, estimate):
    ref = as_tensor(reference, "reference")
    est = as_tensor(estimate, "estimate")
    if ref.shape != est.shape:
        raise ShapeMismatch(f"reference {ref.shape} and estimate {est.shape} differ")
    return ref, est


def psnr(reference, estimate, peak: float = 255.0) -> float:
    """``10 log10(peak^2 / MSE)``; ``math.inf`` when the inputs are identical."""
    ref, est = _pair(reference, estimate)
    mse = float(np.mean((ref - est) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak ** 2 / mse)


def ssim(reference, estimate, peak: float = 255.0, window: int = SSIM_WINDOW) -> float:
    """Mean single-scale SSIM over all ``window x window`` windows of every frontal slice.

    Window statistics are unweighted population moments;
    ``C1 = (0.01 peak)^2``, ``C2 = (0.03 peak)^2``.
    """
    ref, est = _pair(reference, estimate)
    if min(ref.shape[:2]) < window:
        raise TooSmall(f"spatial size {ref.shape[:2]} is smaller than the {window}x{window} window")
    c1 = (SSIM_K1 * peak) ** 2
    c2 = (SSIM_K2 * peak) ** 2

    def local_mean(a):
        return sliding_window_view(a, (window, window), axis=(0, 1)).mean(axis=(-2, -1))

    mx, my = local_mean(ref), local_mean(est)
    vx = local_mean(ref * ref) - mx * mx
    vy = local_mean(est * est) - my * my
    cxy = local_mean(ref * est) - mx * my
    num = (2 * mx * my + c1) * (2 * cxy + c2)
    den = (mx * mx + my * my + c1) * (vx + vy + c2)
    return float(np.mean(num / den))


def quality(reference, estimate, peak: float = 255.0) -> QualityReport:
    return QualityReport(psnr(reference, estimate, peak), ssim(reference, estimate, peak))
