"""Image, frame-stack and raw tensor I/O, plus the impulse noise model."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import FormatError, InconsistentFrameSize, InvalidConfig
from .tensor_core import as_tensor, read_t3rc, write_t3rc

RAW_SUFFIXES = {".t3rc", ".raw"}
FRAME_SUFFIXES = {".pgm", ".png", ".bmp", ".tif", ".tiff", ".jpg", ".jpeg"}
RESAMPLERS = {"nearest": Image.NEAREST, "bilinear": Image.BILINEAR}


@dataclass(frozen=True)
class NoiseSpec:
    rate: float
    seed: int = 0
    low: float = 0.0
    high: float = 255.0
    channel_coupled: bool = True

    def __post_init__(self):
        if not 0.0 <= self.rate <= 1.0:
            raise InvalidConfig(f"noise rate must lie in [0, 1], got {self.rate}")
        if not self.low < self.high:
            raise InvalidConfig(f"value range must satisfy low < high, got ({self.low}, {self.high})")


def inject_noise(x, spec: NoiseSpec):
    """Random-valued impulse noise at exactly ``round(rate * n1 * n2)`` spatial positions.

    Positions are drawn without replacement; each corrupted entry gets an
    independent uniform value in ``[low, high)``. With ``channel_coupled`` the
    same positions are hit in every frontal slice, otherwise positions are
    drawn per slice. The generator is numpy's PCG64 seeded with ``spec.seed``.
    Returns ``(corrupted, mask)``.
    """
    x = as_tensor(x, "x")
    n1, n2, n3 = x.shape
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    count = int(round(spec.rate * n1 * n2))
    flat = x.reshape(n1 * n2, n3, order="F").copy()
    mask = np.zeros_like(flat)
    if spec.channel_coupled:
        pos = rng.choice(n1 * n2, size=count, replace=False)
        flat[pos] = rng.uniform(spec.low, spec.high, size=(count, n3))
        mask[pos] = 1.0
    else:
        for k in range(n3):
            pos = rng.choice(n1 * n2, size=count, replace=False)
            flat[pos, k] = rng.uniform(spec.low, spec.high, size=count)
            mask[pos, k] = 1.0
    shape = (n1, n2, n3)
    return flat.reshape(shape, order="F"), mask.reshape(shape, order="F")


def _open(path) -> Image.Image:
    try:
        img = Image.open(path)
        img.load()
    except FileNotFoundError:
        raise
    except (UnidentifiedImageError, OSError) as exc:
        raise FormatError(f"{path}: cannot decode image ({exc})") from exc
    return img


def _to_array(img: Image.Image) -> np.ndarray:
    if img.mode in ("I;16", "I;16B", "I;16L", "I"):
        arr = np.asarray(img, dtype=np.float64)
        return arr * (255.0 / 65535.0)
    if img.mode not in ("L", "RGB"):
        img = img.convert("RGB")
    return np.asarray(img, dtype=np.float64)


def load_image(path) -> np.ndarray:
    """Gray images become ``n1 x n2 x 1``, color images ``n1 x n2 x 3``; values in [0, 255]."""
    arr = _to_array(_open(path))
    if arr.ndim == 2:
        arr = arr[:, :, None]
    return as_tensor(arr, str(path))


def frame_paths(directory) -> list[Path]:
    paths = sorted(p for p in Path(directory).iterdir() if p.suffix.lower() in FRAME_SUFFIXES)
    if not paths:
        raise FormatError(f"{directory}: no frames found")
    return paths


def load_video(paths: Sequence, scale: float | None = None, resample: str = "bilinear") -> np.ndarray:
    """Stack gray frames along mode 3 in the given order, optionally resized by ``scale``."""
    if resample not in RESAMPLERS:
        raise InvalidConfig(f"resample must be one of {sorted(RESAMPLERS)}, got {resample!r}")
    frames = []
    for p in paths:
        img = _open(p)
        if img.mode not in ("L", "I;16", "I;16B", "I;16L", "I"):
            img = img.convert("L")
        if scale is not None and scale != 1:
            w, h = img.size
            img = img.convert("F").resize((max(1, round(w * scale)), max(1, round(h * scale))), RESAMPLERS[resample])
            frames.append(np.asarray(img, dtype=np.float64))
        else:
            frames.append(_to_array(img))
    shapes = {f.shape for f in frames}
    if len(shapes) > 1:
        raise InconsistentFrameSize(f"frames have differing sizes: {sorted(shapes)}")
    if not frames:
        raise FormatError("no frames given")
    return as_tensor(np.stack(frames, axis=2), "video")


def load_raw(path) -> np.ndarray:
    return read_t3rc(path)


def save_raw(path, x) -> None:
    write_t3rc(path, x)


def to_uint8(x) -> np.ndarray:
    return np.clip(np.rint(np.asarray(x, dtype=np.float64)), 0, 255).astype(np.uint8)


def save_image(path, x) -> None:
    """Write a ``n1 x n2 x 1`` or ``n1 x n2 x 3`` tensor, clamped and rounded to 8 bits."""
    x = as_tensor(x)
    if x.shape[2] == 1:
        Image.fromarray(to_uint8(x[:, :, 0]), mode="L").save(path)
    elif x.shape[2] == 3:
        Image.fromarray(to_uint8(x), mode="RGB").save(path)
    else:
        raise FormatError(f"cannot save {x.shape[2]} slices as one image; write a frame directory or raw tensor")


def save_video(directory, x, suffix: str = ".pgm") -> list[Path]:
    x = as_tensor(x)
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    width = max(4, len(str(x.shape[2])))
    paths = []
    for k in range(x.shape[2]):
        p = out / f"frame_{k:0{width}d}{suffix}"
        Image.fromarray(to_uint8(x[:, :, k]), mode="L").save(p)
        paths.append(p)
    return paths


def load_any(path) -> np.ndarray:
    """Dispatch on the path: a directory is a frame sequence, ``.t3rc`` is raw, else an image."""
    path = Path(path)
    if path.is_dir():
        return load_video(frame_paths(path))
    if not path.exists():
        raise FileNotFoundError(path)
    if path.suffix.lower() in RAW_SUFFIXES:
        return load_raw(path)
    return load_image(path)


def save_any(path, x) -> None:
    path = Path(path)
    if path.suffix.lower() in RAW_SUFFIXES:
        save_raw(path, x)
    elif path.suffix == "" or x.shape[2] not in (1, 3):
        save_video(path, x)
    else:
        save_image(path, x)
