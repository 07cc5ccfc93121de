"""t-SVD algebra for real third-order tensors.

Tensors are plain ``float64`` numpy arrays of shape ``(n1, n2, n3)``; their
mode-3 Fourier transforms are ``complex128`` arrays of the same shape. The
forward FFT is unnormalised and the inverse carries the ``1/n3`` factor, so
that the tensor nuclear norm equals ``(1/n3) * sum`` of the Fourier-slice
singular values.
"""
from __future__ import annotations

import struct
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import (
    FormatError,
    InvalidTensor,
    InvalidTheta,
    NonRealResult,
    NumericalFailure,
    ShapeMismatch,
)

#: Singular values below this fraction of the largest one are set to zero.
RANK_CLAMP = 1e-12
#: Relative imaginary residue tolerated (and discarded) by :func:`ifft3`.
IMAG_TOL = 1e-9

T3RC_MAGIC = b"T3RC"


class TSvdFactors(NamedTuple):
    u: np.ndarray
    s: np.ndarray
    v: np.ndarray


def as_tensor(a, name: str = "tensor") -> np.ndarray:
    """Validate ``a`` as a finite real 3-way array and return it as float64."""
    arr = np.asarray(a)
    if np.iscomplexobj(arr):
        raise InvalidTensor(f"{name} must be real-valued")
    arr = arr.astype(np.float64, copy=False)
    if arr.ndim != 3:
        raise InvalidTensor(f"{name} must be 3-way, got shape {arr.shape}")
    if min(arr.shape) < 1:
        raise InvalidTensor(f"{name} has an empty dimension: {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidTensor(f"{name} contains NaN or Inf")
    return arr


def identity_tensor(n: int, n3: int) -> np.ndarray:
    """Identity tensor: ``I_n`` on the first frontal slice, zeros elsewhere."""
    eye = np.zeros((n, n, n3))
    eye[:, :, 0] = np.eye(n)
    return eye


def half_spectrum(n3: int) -> int:
    """Number of leading Fourier slices that determine a real tensor's spectrum."""
    return n3 // 2 + 1


def _self_conjugate(i: int, n3: int) -> bool:
    return i == 0 or 2 * i == n3


# --- Fourier transform -----------------------------------------------------

def fft3(a) -> np.ndarray:
    """Unnormalised DFT along mode 3. Any ``n3`` works (pocketfft, no padding)."""
    return np.fft.fft(as_tensor(a), axis=2)


def ifft3(f) -> np.ndarray:
    """Inverse of :func:`fft3`, returning the real part.

    Raises :class:`NonRealResult` when the discarded imaginary part exceeds
    ``IMAG_TOL * ||f||_F``, which means the stack was not conjugate-symmetric.
    """
    f = np.asarray(f, dtype=np.complex128)
    if f.ndim != 3:
        raise InvalidTensor(f"Fourier stack must be 3-way, got shape {f.shape}")
    return real_ifft(f)


def real_ifft(f: np.ndarray) -> np.ndarray:
    """Inverse DFT along the last axis with the :func:`ifft3` realness check (any leading batch axes)."""
    out = np.fft.ifft(f, axis=-1)
    residue = np.linalg.norm(out.imag)
    scale = np.linalg.norm(f)
    if residue > IMAG_TOL * scale:
        raise NonRealResult(
            f"imaginary residue {residue:.3e} exceeds {IMAG_TOL:g} * ||f||_F = {IMAG_TOL * scale:.3e}"
        )
    return np.ascontiguousarray(out.real)


# --- matricizations (small-size oracles: O((n*n3)^2) memory) ---------------

def bcirc(a) -> np.ndarray:
    """Block circulant matrix; block ``(r, c)`` is frontal slice ``(r - c) mod n3``."""
    a = as_tensor(a)
    n1, n2, n3 = a.shape
    out = np.empty((n1 * n3, n2 * n3))
    for r in range(n3):
        for c in range(n3):
            out[r * n1:(r + 1) * n1, c * n2:(c + 1) * n2] = a[:, :, (r - c) % n3]
    return out


def bdiag(f) -> np.ndarray:
    """Block diagonal matrix of the frontal slices of a Fourier stack."""
    f = np.asarray(f, dtype=np.complex128)
    n1, n2, n3 = f.shape
    out = np.zeros((n1 * n3, n2 * n3), dtype=np.complex128)
    for i in range(n3):
        out[i * n1:(i + 1) * n1, i * n2:(i + 1) * n2] = f[:, :, i]
    return out


def unfold(a) -> np.ndarray:
    """Stack the frontal slices vertically: ``(n1*n3, n2)``."""
    a = as_tensor(a)
    return np.concatenate([a[:, :, k] for k in range(a.shape[2])], axis=0)


def fold(m, shape: tuple[int, int, int]) -> np.ndarray:
    """Inverse of :func:`unfold`."""
    n1, n2, n3 = shape
    m = np.asarray(m)
    if m.shape != (n1 * n3, n2):
        raise ShapeMismatch(f"cannot fold {m.shape} into {shape}")
    return np.stack([m[k * n1:(k + 1) * n1] for k in range(n3)], axis=2)


# --- products --------------------------------------------------------------

def t_product(*tensors) -> np.ndarray:
    """t-product of two or more tensors, evaluated slice-wise in the Fourier domain."""
    if len(tensors) < 2:
        raise TypeError("t_product needs at least two tensors")
    arrs = [as_tensor(t) for t in tensors]
    n3 = arrs[0].shape[2]
    for left, right in zip(arrs, arrs[1:]):
        if left.shape[1] != right.shape[0] or right.shape[2] != n3:
            raise ShapeMismatch(f"t_product of {left.shape} and {right.shape}")
    acc = np.fft.fft(arrs[0], axis=2)
    for b in arrs[1:]:
        acc = np.einsum("ijk,jlk->ilk", acc, np.fft.fft(b, axis=2))
    return ifft3(acc)


def t_transpose(a) -> np.ndarray:
    """Transpose every frontal slice and reverse the order of slices 2..n3."""
    a = as_tensor(a)
    at = np.transpose(a, (1, 0, 2))
    order = [0] + list(range(a.shape[2] - 1, 0, -1))
    return np.ascontiguousarray(at[:, :, order])


# --- decompositions --------------------------------------------------------

def _svd(mat: np.ndarray, full: bool, real: bool):
    if real:
        mat = mat.real
    try:
        return np.linalg.svd(mat, full_matrices=full)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"slice SVD did not converge: {exc}") from exc


def fourier_svd(fbar: np.ndarray, full: bool = False):
    """SVD of every Fourier slice of a conjugate-symmetric stack.

    Only slices ``0 .. n3//2`` are decomposed; the remaining factors are
    conjugates of their partners. Self-conjugate slices are decomposed as real
    matrices so the factors transform back to real tensors. Returns lists
    ``(U, s, Vh)`` of length ``n3``.
    """
    n3 = fbar.shape[2]
    us, ss, vhs = [None] * n3, [None] * n3, [None] * n3
    for i in range(half_spectrum(n3)):
        u, s, vh = _svd(fbar[:, :, i], full, _self_conjugate(i, n3))
        us[i], ss[i], vhs[i] = u, s, vh
        j = (-i) % n3
        if j != i:
            us[j], ss[j], vhs[j] = u.conj(), s, vh.conj()
    return us, ss, vhs


def _clamp(sv: np.ndarray) -> np.ndarray:
    top = sv.max() if sv.size else 0.0
    if top > 0:
        sv = np.where(sv < RANK_CLAMP * top, 0.0, sv)
    return sv


def tubal_singular_values(a) -> np.ndarray:
    """``(min(n1, n2), n3)`` array; column ``i`` holds the sorted singular values of Fourier slice ``i``."""
    a = as_tensor(a)
    fbar = np.fft.fft(a, axis=2)
    n3 = a.shape[2]
    half = half_spectrum(n3)
    cols = [_singular_values(fbar[:, :, i], _self_conjugate(i, n3)) for i in range(half)]
    sv = np.empty((min(a.shape[:2]), n3))
    for i in range(n3):
        sv[:, i] = cols[i if i < half else n3 - i]
    return _clamp(sv)


def _singular_values(mat: np.ndarray, real: bool) -> np.ndarray:
    if real:
        mat = mat.real
    try:
        return np.linalg.svd(mat, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"slice SVD did not converge: {exc}") from exc


def t_svd(a) -> TSvdFactors:
    """Full t-SVD ``a = u * s * v^T`` with orthogonal ``u``, ``v`` and f-diagonal ``s``."""
    a = as_tensor(a)
    n1, n2, n3 = a.shape
    us, ss, vhs = fourier_svd(np.fft.fft(a, axis=2), full=True)
    top = max(s.max() for s in ss) if min(n1, n2) else 0.0
    ubar = np.stack(us, axis=2)
    vbar = np.stack([vh.conj().T for vh in vhs], axis=2)
    sbar = np.zeros((n1, n2, n3), dtype=np.complex128)
    r = min(n1, n2)
    for i, s in enumerate(ss):
        if top > 0:
            s = np.where(s < RANK_CLAMP * top, 0.0, s)
        sbar[np.arange(r), np.arange(r), i] = s
    return TSvdFactors(ifft3(ubar), ifft3(sbar), ifft3(vbar))


# --- norms -----------------------------------------------------------------

def tnn(a) -> float:
    """Tensor nuclear norm: mean over Fourier slices of the slice nuclear norms."""
    sv = tubal_singular_values(a)
    return float(sv.sum() / sv.shape[1])


def taln(a, theta: float) -> float:
    """Adjustable log norm ``(1/n3) * sum log(theta * sigma + 1)`` over Fourier singular values."""
    if not theta > 0:
        raise InvalidTheta(f"theta must be positive, got {theta}")
    sv = tubal_singular_values(a)
    return float(np.log1p(theta * sv).sum() / sv.shape[1])


def l1(a) -> float:
    return float(np.abs(as_tensor(a)).sum())


def linf(a) -> float:
    return float(np.abs(as_tensor(a)).max())


def fro(a) -> float:
    return float(np.linalg.norm(as_tensor(a)))


# --- raw tensor files ------------------------------------------------------

def write_t3rc(path, a) -> None:
    """Write ``a`` as ``T3RC`` + three little-endian u32 dims + f64 values (i fastest, then j, then k)."""
    a = as_tensor(a)
    header = T3RC_MAGIC + struct.pack("<3I", *a.shape)
    Path(path).write_bytes(header + a.astype("<f8").tobytes(order="F"))


def read_t3rc(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < 16 or data[:4] != T3RC_MAGIC:
        raise FormatError(f"{path}: not a T3RC tensor file")
    dims = struct.unpack("<3I", data[4:16])
    count = dims[0] * dims[1] * dims[2]
    if len(data) != 16 + 8 * count:
        raise FormatError(f"{path}: expected {count} values for dims {dims}, got {(len(data) - 16) / 8:g}")
    values = np.frombuffer(data, dtype="<f8", offset=16)
    return as_tensor(values.reshape(dims, order="F").astype(np.float64), name=str(path))
