"""Equisolid renderings of a translating, fronto-parallel textured plane.

A plane perpendicular to the optical axis that slides parallel to itself
moves by an exact translation in the perspective image, which makes the
equisolid re-projection model exact and gives a ground-truth motion.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .projection import CameraModel, backproject_xy
from .sampling import as_luma, upsample

INVALID_FILL = 128


@dataclass(frozen=True)
class PlanarScene:
    texture: np.ndarray
    texture_pitch_mm: float  # size of one texel on the plane
    depth_mm: float
    translation_mm: tuple[float, float] = (0.0, 0.0)  # per frame, plane coordinates

    def __post_init__(self):
        object.__setattr__(self, "texture", as_luma(self.texture))
        if not self.depth_mm > 0:
            raise ValueError("plane depth must be > 0")
        if not self.texture_pitch_mm > 0:
            raise ValueError("texture pitch must be > 0")

    def perspective_shift_steps(self, cam: CameraModel) -> tuple[float, float]:
        """Per-frame image shift in the perspective domain, in candidate steps.

        Texture content moves opposite to the plane offset, so a positive
        ``tx`` shows up as a positive motion vector (target -> reference).
        """
        tx, ty = self.translation_mm
        return (
            tx * cam.f / self.depth_mm / cam.pitch_x,
            ty * cam.f / self.depth_mm / cam.pitch_y,
        )


def translation_for_steps(cam: CameraModel, depth_mm: float, steps_x: float, steps_y: float = 0.0):
    """Plane translation (mm) producing the given perspective-domain shift."""
    return (
        steps_x * cam.pitch_x * depth_mm / cam.f,
        steps_y * cam.pitch_y * depth_mm / cam.f,
    )


def _bilinear(tex: np.ndarray, u, v):
    h, w = tex.shape
    u = np.clip(u, 0.0, w - 1)
    v = np.clip(v, 0.0, h - 1)
    u0 = np.floor(u).astype(np.int64)
    v0 = np.floor(v).astype(np.int64)
    u1 = np.minimum(u0 + 1, w - 1)
    v1 = np.minimum(v0 + 1, h - 1)
    fu = u - u0
    fv = v - v0
    t = tex.astype(np.float64)
    top = t[v0, u0] * (1.0 - fu) + t[v0, u1] * fu
    bot = t[v1, u0] * (1.0 - fu) + t[v1, u1] * fu
    return top * (1.0 - fv) + bot * fv


def render_equisolid(scene: PlanarScene, cam: CameraModel, frame_index: int) -> np.ndarray:
    rows, cols = np.mgrid[0 : cam.image_height_px, 0 : cam.image_width_px]
    x, y = cam.pixel_grid_mm(cols, rows)
    xp, yp, valid = backproject_xy(x, y, cam.f)
    # ray through perspective point (xp, yp, f) meets the plane Z = depth here
    tx, ty = scene.translation_mm
    px = np.where(valid, xp, 0.0) * (scene.depth_mm / cam.f) + frame_index * tx
    py = np.where(valid, yp, 0.0) * (scene.depth_mm / cam.f) + frame_index * ty
    th, tw = scene.texture.shape
    u = px / scene.texture_pitch_mm + (tw - 1) / 2.0
    v = py / scene.texture_pitch_mm + (th - 1) / 2.0
    val = _bilinear(scene.texture, u, v)
    out = np.clip(np.floor(val + 0.5), 0, 255).astype(np.uint8)
    out[~valid] = INVALID_FILL
    return out


def noise_texture(size: int = 512, cells: int = 64, seed: int = 0) -> np.ndarray:
    """Smooth random texture: uniform noise on a coarse grid, cubic-upsampled."""
    if size % cells:
        raise ValueError("size must be a multiple of cells")
    rng = np.random.default_rng(seed)
    coarse = rng.integers(0, 256, size=(cells, cells), dtype=np.uint8)
    plane = upsample(coarse, size // cells).plane
    return np.clip(np.floor(plane + 0.5), 0, 255).astype(np.uint8)


def render_sequence(scene: PlanarScene, cam: CameraModel, n_frames: int) -> list[np.ndarray]:
    return [render_equisolid(scene, cam, k) for k in range(n_frames)]
