"""Cubic-convolution reference upsampling and 1/scale-pel lookups.

Frames ("luma frames") are plain 2-D ``uint8`` numpy arrays indexed
``[row, col]``; :func:`as_luma` validates and normalises them.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

KEYS_A = -0.5


def as_luma(frame) -> np.ndarray:
    """Return ``frame`` as a C-contiguous 2-D uint8 array or raise ValueError."""
    a = np.asarray(frame)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError(f"luma frame must be a non-empty 2-D array, got shape {a.shape}")
    if a.dtype != np.uint8:
        if np.issubdtype(a.dtype, np.floating) and not np.all(np.isfinite(a)):
            raise ValueError("luma frame contains non-finite samples")
        if a.min() < 0 or a.max() > 255 or not np.array_equal(a, np.round(a)):
            raise ValueError("luma samples must be integers in [0, 255]")
        a = a.astype(np.uint8)
    return np.ascontiguousarray(a)


def keys_kernel(x, a: float = KEYS_A):
    """Keys cubic convolution kernel."""
    x = np.abs(np.asarray(x, dtype=np.float64))
    x2, x3 = x * x, x * x * x
    near = (a + 2.0) * x3 - (a + 3.0) * x2 + 1.0
    far = a * x3 - 5.0 * a * x2 + 8.0 * a * x - 4.0 * a
    return np.where(x <= 1.0, near, np.where(x < 2.0, far, 0.0))


def _phase_weights(scale: int, a: float) -> np.ndarray:
    t = np.arange(scale, dtype=np.float64) / scale
    # taps at source offsets -1, 0, +1, +2 relative to floor(position)
    return np.stack(
        [keys_kernel(1.0 + t, a), keys_kernel(t, a), keys_kernel(1.0 - t, a), keys_kernel(2.0 - t, a)],
        axis=1,
    )


def _upsample_axis(src: np.ndarray, scale: int, axis: int, a: float) -> np.ndarray:
    src = np.moveaxis(src, axis, -1)
    n = src.shape[-1]
    pad = [(0, 0)] * (src.ndim - 1) + [(1, 2)]
    padded = np.pad(src, pad, mode="edge")
    taps = [padded[..., k : k + n] for k in range(4)]
    out = np.empty(src.shape[:-1] + (n * scale,), dtype=np.float64)
    for p, (w0, w1, w2, w3) in enumerate(_phase_weights(scale, a)):
        out[..., p::scale] = w0 * taps[0] + w1 * taps[1] + w2 * taps[2] + w3 * taps[3]
    return np.moveaxis(out, -1, axis)


@dataclass(frozen=True)
class UpsampledReference:
    """Reference frame interpolated onto a ``scale``-times finer lattice.

    ``plane[scale*r, scale*c]`` is exactly source sample ``(r, c)``; fine
    lattice point ``(v, u)`` sits at source position ``(v/scale, u/scale)``.
    """

    scale: int
    plane: np.ndarray
    source_width: int
    source_height: int


def upsample(frame, scale: int = 8, a: float = KEYS_A) -> UpsampledReference:
    """Separable cubic convolution upsampling, horizontal pass first.

    Borders are edge-replicated. The plane is stored as float64 and is not
    re-quantised.
    """
    if int(scale) != scale or scale < 1:
        raise ValueError(f"scale must be a positive integer, got {scale}")
    scale = int(scale)
    src = as_luma(frame).astype(np.float64)
    h, w = src.shape
    try:
        if scale == 1:
            plane = src.copy()
        else:
            plane = _upsample_axis(src, scale, axis=1, a=a)
            plane = _upsample_axis(plane, scale, axis=0, a=a)
    except MemoryError as exc:
        raise MemoryError(
            f"cannot allocate {h * scale}x{w * scale} upsampled reference"
        ) from exc
    plane.setflags(write=False)
    return UpsampledReference(scale, plane, w, h)


def round_half_away(x):
    """Round to nearest integer, ties away from zero (numpy's round is half-even)."""
    x = np.asarray(x, dtype=np.float64)
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def fine_index(pos, scale: int, size: int):
    """Fine-lattice index for source position(s) ``pos``, clamped to ``[0, size-1]``."""
    idx = round_half_away(np.asarray(pos, dtype=np.float64) * scale)
    return np.clip(idx, 0, size - 1).astype(np.int64)


def sample_at(ref: UpsampledReference, col, row):
    """Look up the plane at the nearest fine-lattice point to ``(col, row)``.

    Positions outside the plane are clamped (edge replication). Accepts
    scalars or broadcastable arrays.
    """
    h, w = ref.plane.shape
    u = fine_index(col, ref.scale, w)
    v = fine_index(row, ref.scale, h)
    out = ref.plane[v, u]
    return float(out) if np.ndim(out) == 0 else out
