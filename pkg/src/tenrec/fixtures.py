"""Deterministic synthetic data shared by tests, scripts and the CLI demo."""
from __future__ import annotations

import numpy as np

from .tensor_core import t_product


def low_tubal_rank(n: int = 30, n3: int = 5, rank: int = 2, seed: int = 0) -> np.ndarray:
    """``n x n x n3`` tensor of tubal rank ``rank``: t-product of N(0, 1/n) factors."""
    rng = np.random.default_rng(seed)
    a = rng.normal(0.0, 1.0 / np.sqrt(n), (n, rank, n3))
    b = rng.normal(0.0, 1.0 / np.sqrt(n), (rank, n, n3))
    return t_product(a, b)


def sparse_sign_noise(shape, rate: float, seed: int = 0) -> np.ndarray:
    """``round(rate * size)`` entries set to +-1 at random, zeros elsewhere."""
    rng = np.random.default_rng(seed)
    out = np.zeros(shape)
    idx = rng.choice(out.size, int(round(rate * out.size)), replace=False)
    out.flat[idx] = rng.choice([-1.0, 1.0], idx.size)
    return out


def sparse_uniform_corruption(x: np.ndarray, rate: float, seed: int = 0, low=-1.0, high=1.0) -> np.ndarray:
    """Replace ``round(rate * size)`` random entries of ``x`` by uniform draws in ``[low, high)``."""
    rng = np.random.default_rng(seed)
    out = np.array(x, dtype=np.float64)
    idx = rng.choice(out.size, int(round(rate * out.size)), replace=False)
    out.flat[idx] = rng.uniform(low, high, idx.size)
    return out


def texture_tiles(tile: int = 8, kinds: int = 3, seed: int = 1) -> list[np.ndarray]:
    """Color sinusoid tiles with values in [0.15, 0.85]."""
    rng = np.random.default_rng(seed)
    y, x = np.mgrid[0:tile, 0:tile] / tile
    tiles = []
    for _ in range(kinds):
        freq = rng.uniform(0.5, 2.0, (3, 2))
        phase = rng.uniform(0.0, 2 * np.pi, 3)
        tiles.append(np.stack(
            [0.5 + 0.35 * np.sin(2 * np.pi * (freq[c, 0] * x + freq[c, 1] * y) + phase[c]) for c in range(3)],
            axis=2,
        ))
    return tiles


def tiled_texture(size: int = 64, tile: int = 8, kinds: int = 3, seed: int = 2) -> np.ndarray:
    """``size x size x 3`` image in [0, 255] built from a random layout of texture tiles.

    Every tile recurs many times at scattered positions, so the image is
    strongly self-similar at the patch level while its frontal slices are far
    from low rank (the layout is not periodic).
    """
    tiles = texture_tiles(tile, kinds)
    g = size // tile
    layout = np.random.default_rng(seed).integers(0, kinds, (g, g))
    rows = [np.concatenate([tiles[layout[i, j]] for j in range(g)], axis=1) for i in range(g)]
    return 255.0 * np.concatenate(rows, axis=0)
