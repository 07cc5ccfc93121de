"""Independent reference implementations used only by the tests.

Each oracle takes the slow textbook route (explicit DFT matrices, block
circulant products, Python loops) so it shares no code path with the
library under test.
"""
import itertools

import numpy as np


def dft_matrix(n: int) -> np.ndarray:
    k = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(k, k) / n)


def dft_mode3(a: np.ndarray) -> np.ndarray:
    return np.einsum("kl,ijl->ijk", dft_matrix(a.shape[2]), a)


def bcirc_loop(a: np.ndarray) -> np.ndarray:
    n1, n2, n3 = a.shape
    out = np.zeros((n1 * n3, n2 * n3))
    for i, j in itertools.product(range(n1 * n3), range(n2 * n3)):
        r, c = divmod(i, n1)[0], divmod(j, n2)[0]
        out[i, j] = a[i % n1, j % n2, (r - c) % n3]
    return out


def unfold_loop(b: np.ndarray) -> np.ndarray:
    return np.vstack([b[:, :, k] for k in range(b.shape[2])])


def t_product_bcirc(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n1, n3 = a.shape[0], a.shape[2]
    m = bcirc_loop(a) @ unfold_loop(b)
    return np.stack([m[k * n1:(k + 1) * n1] for k in range(n3)], axis=2)


def kron_block_diag(a: np.ndarray) -> np.ndarray:
    """(F kron I_n1) bcirc(A) (F^-1 kron I_n2)."""
    n1, n2, n3 = a.shape
    f = dft_matrix(n3)
    return np.kron(f, np.eye(n1)) @ bcirc_loop(a) @ np.kron(np.linalg.inv(f), np.eye(n2))


def wsvt_slice(y: np.ndarray, thresholds: np.ndarray) -> np.ndarray:
    """Weighted SVT of one complex matrix: shrink singular value j by thresholds[j]."""
    u, s, vh = np.linalg.svd(y, full_matrices=False)
    return (u * np.maximum(s - thresholds, 0.0)) @ vh


def t_wsvt_loop(y: np.ndarray, w: np.ndarray, tau: float) -> np.ndarray:
    ybar = dft_mode3(y)
    xbar = np.stack([wsvt_slice(ybar[:, :, i], tau * w[:, i]) for i in range(y.shape[2])], axis=2)
    f_inv = np.linalg.inv(dft_matrix(y.shape[2]))
    return np.einsum("kl,ijl->ijk", f_inv, xbar).real


def weighted_objective(x: np.ndarray, y: np.ndarray, w: np.ndarray, tau: float) -> float:
    n3 = x.shape[2]
    xbar = dft_mode3(x)
    total = 0.0
    for i in range(n3):
        total += float(np.sum(w[:, i] * np.linalg.svd(xbar[:, :, i], compute_uv=False)))
    return tau * total / n3 + 0.5 * float(np.sum((x - y) ** 2))


def ssim_loop(x: np.ndarray, y: np.ndarray, peak: float = 255.0, win: int = 8) -> float:
    c1, c2 = (0.01 * peak) ** 2, (0.03 * peak) ** 2
    vals = []
    n1, n2, n3 = x.shape
    for k in range(n3):
        for i in range(n1 - win + 1):
            for j in range(n2 - win + 1):
                a = x[i:i + win, j:j + win, k].ravel()
                b = y[i:i + win, j:j + win, k].ravel()
                ma, mb = a.mean(), b.mean()
                va, vb = ((a - ma) ** 2).mean(), ((b - mb) ** 2).mean()
                cov = ((a - ma) * (b - mb)).mean()
                vals.append((2 * ma * mb + c1) * (2 * cov + c2) / ((ma ** 2 + mb ** 2 + c1) * (va + vb + c2)))
    return float(np.mean(vals))


def nearest_patches(x: np.ndarray, ref, candidates, m: int):
    """Brute force: sort by (distance, top, left) with the reference pinned first."""
    p = ref.p

    def dist(c):
        d = x[c.top:c.top + p, c.left:c.left + p] - x[ref.top:ref.top + p, ref.left:ref.left + p]
        return float(np.sum(d * d))

    others = sorted((c for c in candidates if c != ref), key=lambda c: (dist(c), c.top, c.left))
    return [ref] + others[:m - 1]
