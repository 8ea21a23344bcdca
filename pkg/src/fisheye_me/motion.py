"""Translational, equisolid and hybrid block motion estimation / compensation.

Conventions
-----------
* A motion vector points from the target block to its match in the
  reference: the compensated block reads the reference at ``origin + mv``.
* Full search scans ``dy`` (outer) and ``dx`` (inner) ascending from ``-R``;
  the first minimum wins. On equal SSD the translational candidate wins the
  mode decision.
* For equisolid ME one candidate step is one sensor pixel pitch applied in
  the perspective domain (``dx * pitch_x`` mm).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import _kernels
from .projection import CameraModel, backproject_xy
from .sampling import UpsampledReference, as_luma, upsample


class Mode(enum.Enum):
    TRANSLATIONAL = "translational"
    EQUISOLID = "equisolid"
    # equisolid ME impossible (a pixel at >= 90 deg incidence); TME used
    EQUISOLID_INVALID = "equisolid_invalid"


class MotionVector(NamedTuple):
    dx: int
    dy: int


class Block(NamedTuple):
    col: int
    row: int
    width: int
    height: int

    def slices(self):
        return (slice(self.row, self.row + self.height), slice(self.col, self.col + self.width))


@dataclass(frozen=True)
class SearchConfig:
    search_range: int = 128
    block_size: int = 16
    upsample_scale: int = 8

    def __post_init__(self):
        for name in ("search_range", "block_size", "upsample_scale"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v}")

    @property
    def candidate_count(self) -> int:
        return (2 * self.search_range + 1) ** 2


@dataclass(frozen=True)
class SearchResult:
    mv: MotionVector
    ssd: float
    evaluated: int  # candidates actually scored, counted from the cost surface


@dataclass
class BlockResult:
    block: Block
    mode: Mode
    mv_tme: MotionVector
    ssd_tme: int
    mv_eme: MotionVector | None = None
    ssd_eme: int | None = None  # SSD of the quantised block that would be written
    ssd_eme_search: float | None = None  # real-valued SSD minimised by the search
    evaluated_tme: int = 0
    evaluated_eme: int = 0

    @property
    def chosen_ssd(self) -> int:
        return self.ssd_eme if self.mode is Mode.EQUISOLID else self.ssd_tme


@dataclass
class CompensationResult:
    compensated: np.ndarray  # hybrid (or TME-only when EME was skipped)
    compensated_tme: np.ndarray
    compensated_eme: np.ndarray | None
    blocks: list[BlockResult] = field(default_factory=list)
    block_size: int = 16

    @property
    def shape(self):
        return self.compensated.shape

    def totals(self) -> dict:
        tme = sum(b.ssd_tme for b in self.blocks)
        out = {"tme": tme, "hybrid": sum(b.chosen_ssd for b in self.blocks)}
        if self.compensated_eme is not None:
            out["eme"] = sum(
                b.ssd_eme if b.ssd_eme is not None else b.ssd_tme for b in self.blocks
            )
        return out

    def mode_counts(self) -> dict:
        counts = {m.value: 0 for m in Mode}
        for b in self.blocks:
            counts[b.mode.value] += 1
        return counts


def tile_blocks(width: int, height: int, size: int) -> list[Block]:
    """Row-major tiling; right/bottom blocks are truncated when needed."""
    return [
        Block(c, r, min(size, width - c), min(size, height - r))
        for r in range(0, height, size)
        for c in range(0, width, size)
    ]


def _check_block(block: Block, shape):
    h, w = shape
    if (
        block.col < 0
        or block.row < 0
        or block.width < 1
        or block.height < 1
        or block.col + block.width > w
        or block.row + block.height > h
    ):
        raise ValueError(f"block {block} does not lie inside a {w}x{h} frame")


def _argmin(surface, R) -> tuple[MotionVector, int]:
    idx = int(np.argmin(surface))  # first minimum in C order = (dy, dx) scan
    iy, ix = divmod(idx, surface.shape[1])
    return MotionVector(ix - R, iy - R), idx


def tme_search(target, ref, block: Block, cfg: SearchConfig, padded_ref=None) -> SearchResult:
    """Exhaustive integer-pel search with edge-replicated reference reads.

    ``padded_ref`` (the reference edge-padded by ``R``) may be supplied to
    avoid re-padding for every block of a frame.
    """
    R = cfg.search_range
    target = as_luma(target)
    _check_block(block, target.shape)
    if padded_ref is None:
        padded_ref = np.pad(as_luma(ref), R, mode="edge")
    tgt = np.ascontiguousarray(target[block.slices()])
    surface = _kernels.tme_surface(tgt, padded_ref, block.col, block.row, R)
    mv, idx = _argmin(surface, R)
    return SearchResult(mv, int(surface.flat[idx]), int(np.count_nonzero(surface >= 0)))


def block_perspective_mm(block: Block, cam: CameraModel):
    """Perspective-domain sensor coordinates of every block pixel, row-major.

    Returns ``None`` when any pixel lies at or beyond 90 degrees incidence.
    """
    rows, cols = np.mgrid[block.row : block.row + block.height, block.col : block.col + block.width]
    x, y = cam.pixel_grid_mm(cols.ravel(), rows.ravel())
    xp, yp, valid = backproject_xy(x, y, cam.f)
    if not valid.all():
        return None
    return xp, yp


def eme_search(target, up_ref: UpsampledReference, block: Block, cam: CameraModel, cfg: SearchConfig):
    """Full search with the translation applied in the perspective domain.

    Returns a :class:`SearchResult`, or ``None`` when the block is invalid
    for equisolid ME (caller falls back to translational).
    """
    target = as_luma(target)
    _check_block(block, target.shape)
    coords = block_perspective_mm(block, cam)
    if coords is None:
        return None
    xp, yp = coords
    R = cfg.search_range
    cx, cy = cam.center
    tvals = target[block.slices()].astype(np.float64).ravel()
    surface = _kernels.eme_surface(
        xp, yp, tvals, up_ref.plane, up_ref.scale, cam.pitch_x, cam.pitch_y, cam.f, cx, cy, R
    )
    mv, idx = _argmin(surface, R)
    return SearchResult(mv, float(surface.flat[idx]), int(np.count_nonzero(~np.isnan(surface))))


def eme_block_samples(up_ref: UpsampledReference, block: Block, cam: CameraModel, mv: MotionVector):
    """Real-valued reference samples for ``block`` displaced by ``mv`` in the perspective domain."""
    coords = block_perspective_mm(block, cam)
    if coords is None:
        raise ValueError(f"block {block} is invalid for equisolid ME")
    xp, yp = coords
    cx, cy = cam.center
    h, w = up_ref.plane.shape
    u, v = _kernels.eme_fine_indices(
        xp, yp, float(mv.dx), float(mv.dy), cam.f, cam.pitch_x, cam.pitch_y, cx, cy, up_ref.scale, h, w
    )
    return up_ref.plane[v, u].reshape(block.height, block.width)


def quantize(samples) -> np.ndarray:
    """Round half away from zero and clip to 8 bits."""
    s = np.asarray(samples, dtype=np.float64)
    r = np.where(s >= 0.0, np.floor(s + 0.5), -np.floor(-s + 0.5))
    return np.clip(r, 0, 255).astype(np.uint8)


def tme_block(padded_ref, block: Block, mv: MotionVector, R: int) -> np.ndarray:
    r0 = block.row + mv.dy + R
    c0 = block.col + mv.dx + R
    return padded_ref[r0 : r0 + block.height, c0 : c0 + block.width]


def _ssd_int(a, b) -> int:
    d = a.astype(np.int64) - b.astype(np.int64)
    return int(np.sum(d * d))


def hybrid_compensate(
    target,
    ref,
    cam: CameraModel,
    cfg: SearchConfig,
    mode: str = "hybrid",
    up_ref: UpsampledReference | None = None,
) -> CompensationResult:
    """Per-block TME and equisolid ME, keeping whichever has the lower SSD.

    ``mode="tme"`` skips the equisolid path entirely. The mode decision
    compares the SSD of the blocks that would actually be written, so the
    hybrid frame SSD never exceeds the TME-only frame SSD.
    """
    if mode not in ("tme", "eme", "hybrid"):
        raise ValueError(f"unknown mode {mode!r}")
    target = as_luma(target)
    ref = as_luma(ref)
    if target.shape != ref.shape:
        raise ValueError(f"target {target.shape} and reference {ref.shape} differ in size")
    h, w = target.shape
    if (cam.image_width_px, cam.image_height_px) != (w, h):
        raise ValueError(
            f"camera is {cam.image_width_px}x{cam.image_height_px} but frames are {w}x{h}"
        )
    R = cfg.search_range
    padded = np.pad(ref, R, mode="edge")
    run_eme = mode != "tme"
    if run_eme and up_ref is None:
        up_ref = upsample(ref, cfg.upsample_scale)

    out_tme = np.empty_like(target)
    out_eme = np.empty_like(target) if run_eme else None
    out_hyb = np.empty_like(target)
    results = []
    for block in tile_blocks(w, h, cfg.block_size):
        sl = block.slices()
        tgt = target[sl]
        t = tme_search(target, ref, block, cfg, padded_ref=padded)
        tme_px = tme_block(padded, block, t.mv, R)
        out_tme[sl] = tme_px
        res = BlockResult(block, Mode.TRANSLATIONAL, t.mv, t.ssd, evaluated_tme=t.evaluated)
        chosen = tme_px
        if run_eme:
            e = eme_search(target, up_ref, block, cam, cfg)
            if e is None:
                res.mode = Mode.EQUISOLID_INVALID
                out_eme[sl] = tme_px
            else:
                eme_px = quantize(eme_block_samples(up_ref, block, cam, e.mv))
                out_eme[sl] = eme_px
                res.mv_eme = e.mv
                res.ssd_eme = _ssd_int(tgt, eme_px)
                res.ssd_eme_search = e.ssd
                res.evaluated_eme = e.evaluated
                if res.ssd_eme < res.ssd_tme:
                    res.mode = Mode.EQUISOLID
                    chosen = eme_px
        out_hyb[sl] = chosen
        results.append(res)
    return CompensationResult(out_hyb, out_tme, out_eme, results, cfg.block_size)


RED = (255, 0, 0)
GREEN = (0, 255, 0)


def render_decision_map(result: CompensationResult, background=None, alpha: float = 0.5) -> np.ndarray:
    """Block-aligned RGB decision map: red translational, green equisolid.

    With ``background`` (a luma frame, usually ``result.compensated``) the map
    is blended over it: ``floor(alpha*color + (1-alpha)*gray)``.
    """
    h, w = result.shape
    rgb = np.empty((h, w, 3), dtype=np.uint8)
    for b in result.blocks:
        rgb[b.block.slices()] = GREEN if b.mode is Mode.EQUISOLID else RED
    if background is None:
        return rgb
    gray = as_luma(background).astype(np.float64)[..., None]
    if alpha == 0.5:
        return ((rgb.astype(np.uint16) + gray.astype(np.uint16)) // 2).astype(np.uint8)
    return np.floor(alpha * rgb + (1.0 - alpha) * gray).astype(np.uint8)
