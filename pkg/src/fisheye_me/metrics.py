"""Block residual metrics and frame luminance PSNR."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

PEAK = 255.0


def _pair(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a, b


def block_ssd(a, b):
    """Sum of squared differences. Integer inputs give an exact integer."""
    a, b = _pair(a, b)
    if np.issubdtype(a.dtype, np.integer) and np.issubdtype(b.dtype, np.integer):
        d = a.astype(np.int64) - b.astype(np.int64)
        return int(np.sum(d * d))
    d = a.astype(np.float64) - b.astype(np.float64)
    return float(np.sum(d * d))


def block_sad(a, b):
    a, b = _pair(a, b)
    if np.issubdtype(a.dtype, np.integer) and np.issubdtype(b.dtype, np.integer):
        return int(np.sum(np.abs(a.astype(np.int64) - b.astype(np.int64))))
    return float(np.sum(np.abs(a.astype(np.float64) - b.astype(np.float64))))


@dataclass(frozen=True)
class FrameScore:
    mse: float
    psnr_db: float  # math.inf when mse == 0
    samples: int

    @property
    def infinite(self) -> bool:
        return math.isinf(self.psnr_db)


def psnr_from_mse(mse: float) -> float:
    if mse == 0:
        return math.inf
    return 10.0 * math.log10(PEAK * PEAK / mse)


def luma_psnr(a, b) -> FrameScore:
    a, b = _pair(a, b)
    if a.ndim != 2:
        raise ValueError("luma_psnr expects 2-D frames")
    ssd = block_ssd(a, b)
    n = a.size
    mse = ssd / n
    return FrameScore(mse, psnr_from_mse(mse), n)


def mean_psnr(values) -> tuple[float | None, int]:
    """Arithmetic mean of finite PSNR values; returns ``(mean, n_excluded)``.

    Infinite entries (identical frames) are excluded and counted.
    """
    finite = [v for v in values if v is not None and math.isfinite(v)]
    excluded = len(values) - len(finite)
    if not finite:
        return None, excluded
    return sum(finite) / len(finite), excluded
