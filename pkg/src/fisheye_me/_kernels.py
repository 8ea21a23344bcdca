"""Hot loops of the two full searches.

Each kernel fills a complete cost surface of shape ``(2R+1, 2R+1)`` indexed
``[dy + R, dx + R]``. Entries that were never evaluated keep a sentinel
(-1 for the integer TME surface, NaN for the EME surface) so callers can
count evaluated candidates instead of assuming them.

Two interchangeable backends exist: numba ``@njit`` kernels and a pure numpy
path. Set ``FISHEYE_ME_NO_NUMBA=1`` to force numpy (also used automatically
when numba is not importable). ``FISHEYE_ME_THREADS`` caps numba's threads.
Both backends evaluate the same floating-point expressions in the same order
(only +, *, / and sqrt, all correctly rounded), so their cost surfaces agree
bit for bit.

The re-projection scale uses the trig-free identity

    2 f sin(atan(r/f) / 2) / r == sqrt(2 / (s (s + 1))),  s = sqrt(1 + r^2/f^2)

which is also well conditioned at r = 0 (scale 1).
"""
from __future__ import annotations

import math
import os

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

try:
    import numba
    from numba import njit, prange

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("FISHEYE_ME_NO_NUMBA", "") in ("", "0")

if HAVE_NUMBA:
    if "NUMBA_THREADING_LAYER" not in os.environ:
        numba.config.THREADING_LAYER_PRIORITY = ["omp", "tbb", "workqueue"]
    if os.environ.get("FISHEYE_ME_THREADS"):
        numba.set_num_threads(int(os.environ["FISHEYE_ME_THREADS"]))


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"


# --------------------------------------------------------------------------
# translational search


def tme_surface_numpy(tgt, refp, bx, by, R):
    """``refp`` is the reference edge-padded by ``R`` on every side."""
    bh, bw = tgt.shape
    n = 2 * R + 1
    out = np.full((n, n), -1, dtype=np.int64)
    t = tgt.astype(np.int64)[:, None, :]
    for iy in range(n):
        strip = refp[by + iy : by + iy + bh, bx : bx + 2 * R + bw]
        win = sliding_window_view(strip, bw, axis=1).astype(np.int64)  # (bh, n, bw)
        d = win - t
        out[iy] = np.einsum("inj,inj->n", d, d)
    return out


def eme_fine_indices(xp, yp, dx, dy, f, pitch_x, pitch_y, cx, cy, scale, h, w):
    """Fine-lattice ``(u, v)`` indices of perspective points shifted by ``(dx, dy)`` steps.

    ``dx``/``dy`` broadcast against ``xp``/``yp``. The arithmetic mirrors the
    numba kernel expression for expression.
    """
    xs = xp + dx * pitch_x
    ys = yp + dy * pitch_y
    s = np.sqrt(1.0 + (xs * xs + ys * ys) / (f * f))
    k = np.sqrt(2.0 / (s * (s + 1.0)))
    col = (xs * k) / pitch_x + cx
    row = (ys * k) / pitch_y + cy
    u = _round_clip(col * scale, w)
    v = _round_clip(row * scale, h)
    return u, v


def _round_clip(x, size):
    r = np.where(x >= 0.0, np.floor(x + 0.5), -np.floor(-x + 0.5))
    return np.clip(r, 0, size - 1).astype(np.int64)


def eme_surface_numpy(xp, yp, tvals, plane, scale, pitch_x, pitch_y, f, cx, cy, R):
    """``xp``/``yp``: perspective-domain sensor mm of the block pixels (flat)."""
    n = 2 * R + 1
    h, w = plane.shape
    out = np.full((n, n), np.nan)
    dxs = np.arange(-R, R + 1, dtype=np.float64)[:, None]
    for iy in range(n):
        u, v = eme_fine_indices(
            xp[None, :], yp[None, :], dxs, float(iy - R), f, pitch_x, pitch_y, cx, cy, scale, h, w
        )
        d = tvals[None, :] - plane[v, u]
        # sequential accumulation, same order as the compiled loop
        out[iy] = np.cumsum(d * d, axis=1)[:, -1]
    return out


if HAVE_NUMBA:

    @njit(cache=True, inline="always")
    def _round_clip_nb(x, size):
        if x >= 0.0:
            r = np.floor(x + 0.5)
        else:
            r = -np.floor(-x + 0.5)
        if r < 0.0:
            return 0
        if r > size - 1:
            return size - 1
        return int(r)

    @njit(cache=True, parallel=True)
    def tme_surface_numba(tgt, refp, bx, by, R):
        bh, bw = tgt.shape
        n = 2 * R + 1
        out = np.full((n, n), -1, dtype=np.int64)
        for iy in prange(n):
            for ix in range(n):
                acc = 0
                for i in range(bh):
                    row = by + iy + i
                    for j in range(bw):
                        d = np.int64(tgt[i, j]) - np.int64(refp[row, bx + ix + j])
                        acc += d * d
                out[iy, ix] = acc
        return out

    @njit(cache=True, parallel=True)
    def eme_surface_numba(xp, yp, tvals, plane, scale, pitch_x, pitch_y, f, cx, cy, R):
        n = 2 * R + 1
        h, w = plane.shape
        npix = xp.shape[0]
        out = np.full((n, n), np.nan)
        for iy in prange(n):
            dy = float(iy - R)
            for ix in range(n):
                dx = float(ix - R)
                acc = 0.0
                for k in range(npix):
                    xs = xp[k] + dx * pitch_x
                    ys = yp[k] + dy * pitch_y
                    s = math.sqrt(1.0 + (xs * xs + ys * ys) / (f * f))
                    kk = math.sqrt(2.0 / (s * (s + 1.0)))
                    col = (xs * kk) / pitch_x + cx
                    row = (ys * kk) / pitch_y + cy
                    u = _round_clip_nb(col * scale, w)
                    v = _round_clip_nb(row * scale, h)
                    d = tvals[k] - plane[v, u]
                    acc += d * d
                out[iy, ix] = acc
        return out

else:  # pragma: no cover
    tme_surface_numba = None
    eme_surface_numba = None


def tme_surface(tgt, refp, bx, by, R):
    if USE_NUMBA:
        return tme_surface_numba(tgt, refp, bx, by, R)
    return tme_surface_numpy(tgt, refp, bx, by, R)


def eme_surface(xp, yp, tvals, plane, scale, pitch_x, pitch_y, f, cx, cy, R):
    args = (
        np.ascontiguousarray(xp, dtype=np.float64),
        np.ascontiguousarray(yp, dtype=np.float64),
        np.ascontiguousarray(tvals, dtype=np.float64),
        plane,
        int(scale),
        float(pitch_x),
        float(pitch_y),
        float(f),
        float(cx),
        float(cy),
        int(R),
    )
    if USE_NUMBA:
        return eme_surface_numba(*args)
    return eme_surface_numpy(*args)
