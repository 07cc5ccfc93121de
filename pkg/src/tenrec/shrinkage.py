"""Proximal operators: soft thresholding, t-SVT and weighted t-SVT."""
from __future__ import annotations

import numpy as np

from .errors import InvalidTheta, NumericalFailure, ShapeMismatch, WeightOrderViolation, WeightSymmetryViolation
from .tensor_core import as_tensor, ifft3


def soft_threshold(x, tau):
    """``sign(x) * max(|x| - tau, 0)``; works on scalars and arrays alike."""
    if np.any(np.asarray(tau) < 0):
        raise ValueError(f"tau must be nonnegative, got {tau}")
    out = np.sign(x) * np.maximum(np.abs(x) - tau, 0.0)
    return float(out) if np.ndim(out) == 0 else out


def soft_threshold_tensor(a, tau: float) -> np.ndarray:
    return soft_threshold(as_tensor(a), tau)


def log_weights(sigma, theta: float) -> np.ndarray:
    """Derivative of ``log(theta * s + 1)`` at each singular value: ``theta / (theta * s + 1)``.

    ``sigma`` may be a vector or an ``(r, n3)`` array of tubal singular values;
    sorted-nonincreasing input gives nondecreasing weights bounded by ``theta``.
    """
    if not theta > 0:
        raise InvalidTheta(f"theta must be positive, got {theta}")
    sigma = np.asarray(sigma, dtype=np.float64)
    if np.any(sigma < 0):
        raise ValueError("singular values must be nonnegative")
    return theta / (theta * sigma + 1.0)


def check_weights(w: np.ndarray, shape: tuple[int, int, int]) -> np.ndarray:
    """Validate an ``(r, n3)`` weight array for a tensor of the given shape."""
    n1, n2, n3 = shape
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (min(n1, n2), n3):
        raise ShapeMismatch(f"weights {w.shape} do not match tensor {shape}")
    if np.any(w < 0):
        raise WeightOrderViolation("weights must be nonnegative")
    bad = np.flatnonzero(np.any(np.diff(w, axis=0) < 0, axis=0))
    if bad.size:
        raise WeightOrderViolation(f"weight columns {bad.tolist()} are not nondecreasing")
    mirror = w[:, (-np.arange(n3)) % n3]
    if not np.allclose(w, mirror, rtol=1e-12, atol=0.0):
        raise WeightSymmetryViolation(
            "weights for conjugate Fourier slices i and n3-i must be equal for the result to be real"
        )
    return w


def shrink_spectrum(ybar: np.ndarray, thresholds: np.ndarray):
    """Shrink every Fourier-slice singular value by its own threshold.

    ``ybar`` is a conjugate-symmetric Fourier stack ``(n1, n2, n3)`` or a batch
    ``(B, n1, n2, n3)``; ``thresholds`` is ``(r, n3)`` or ``(B, r, n3)``.
    Returns the shrunk stack and the surviving singular values, shaped like
    ``thresholds``. Only the leading half of the spectrum is decomposed.
    """
    single = ybar.ndim == 3
    if single:
        ybar, thresholds = ybar[None], thresholds[None]
    b, n1, n2, n3 = ybar.shape
    r = min(n1, n2)
    xbar = np.empty_like(ybar)
    sv = np.empty((b, r, n3))
    for i in range(n3 // 2 + 1):
        j = (-i) % n3
        sl = ybar[..., i].real if i == j else ybar[..., i]
        try:
            u, s, vh = np.linalg.svd(sl, full_matrices=False)
        except np.linalg.LinAlgError as exc:
            raise NumericalFailure(f"slice SVD did not converge: {exc}") from exc
        s = np.maximum(s - thresholds[:, :, i], 0.0)
        sv[:, :, i] = s
        xbar[..., i] = (u * s[:, None, :]) @ vh
        if j != i:
            xbar[..., j] = xbar[..., i].conj()
            sv[:, :, j] = s
    if single:
        return xbar[0], sv[0]
    return xbar, sv


def t_svt(y, tau: float) -> np.ndarray:
    """Tensor singular value thresholding, the prox of ``tau * ||.||_T``."""
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    y = as_tensor(y)
    r, n3 = min(y.shape[:2]), y.shape[2]
    xbar, _ = shrink_spectrum(np.fft.fft(y, axis=2), np.full((r, n3), float(tau)))
    return ifft3(xbar)


def t_wsvt(y, w, tau: float) -> np.ndarray:
    """Weighted t-SVT: Fourier singular value ``j`` of slice ``i`` shrinks by ``tau * w[j, i]``.

    Globally minimises ``tau/n3 * sum w * sigma(X) + 0.5 * ||X - Y||_F^2`` when
    each weight column is nondecreasing.
    """
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    y = as_tensor(y)
    w = check_weights(w, y.shape)
    xbar, _ = shrink_spectrum(np.fft.fft(y, axis=2), tau * w)
    return ifft3(xbar)

