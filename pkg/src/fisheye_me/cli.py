"""Command-line driver: ``estimate``, ``synth`` and ``sweep``.

Exit codes: 0 success, 2 configuration/usage error, 3 I/O or file-format
error, 4 internal error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from . import io as fio
from .metrics import luma_psnr
from .motion import SearchConfig, hybrid_compensate, render_decision_map
from .projection import CameraModel
from .synth import PlanarScene, noise_texture, render_sequence, translation_for_steps

log = logging.getLogger("fisheye_me")

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_INTERNAL = 0, 2, 3, 4
DEFAULT_BLOCK_SIZES = (8, 16, 32, 64)
PRESETS = {"circular": (5.2, 5.2), "fullframe": (4.6, 2.9)}


class ConfigError(ValueError):
    pass


def _wxh(text: str, kind=float):
    try:
        a, b = text.lower().split("x")
        return kind(a), kind(b)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected WxH, got {text!r}") from None


def _int_list(text: str):
    try:
        return [int(v) for v in text.split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_camera(args, width: int, height: int) -> CameraModel:
    sw, sh = args.sensor_mm if args.sensor_mm else PRESETS[args.camera_preset]
    try:
        return CameraModel(args.f_mm, sw, sh, width, height, args.fov_deg)
    except ValueError as exc:
        raise ConfigError(f"invalid camera: {exc}") from exc


def _search_config(args, block_size: int) -> SearchConfig:
    try:
        return SearchConfig(args.search_range, block_size, args.scale)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _load_frames(args) -> list[np.ndarray]:
    if args.input is None:
        raise ConfigError("--input is required")
    frames = list(fio.read_sequence(args.input, args.format, args.size))
    if len(frames) < 2:
        raise ConfigError(f"need at least 2 frames, {args.input} has {len(frames)}")
    return frames


def select_pairs(n_frames: int, start: int, stride: int, count: int | None) -> list[tuple[int, int]]:
    """``(reference, target)`` index pairs; the predecessor predicts its successor."""
    if stride < 1 or start < 0:
        raise ConfigError("--stride must be >= 1 and --start >= 0")
    pairs = []
    ref = start
    while ref + 1 < n_frames and (count is None or len(pairs) < count):
        pairs.append((ref, ref + 1))
        ref += stride
    if not pairs:
        raise ConfigError("frame-pair selection is empty")
    if count is not None and len(pairs) < count:
        raise ConfigError(f"only {len(pairs)} pairs available, {count} requested")
    return pairs


def _timestamp(args):
    return None if args.no_timestamp else datetime.now(timezone.utc).isoformat(timespec="seconds")


def run_estimate(args, frames, block_size: int, out_dir: Path) -> fio.RunReport:
    h, w = frames[0].shape
    cam = build_camera(args, w, h)
    cfg = _search_config(args, block_size)
    pairs = select_pairs(len(frames), args.start, args.stride, args.pairs)
    out_dir.mkdir(parents=True, exist_ok=True)
    config = {
        "camera": cam.to_dict(),
        "search_range": cfg.search_range,
        "block_size": cfg.block_size,
        "upsample_scale": cfg.upsample_scale,
        "mode": args.mode,
        "input": str(args.input),
        "pair_selection": {"start": args.start, "stride": args.stride, "count": len(pairs)},
    }
    report = fio.RunReport(config, timestamp=_timestamp(args))
    for idx, (r, t) in enumerate(pairs):
        log.info("pair %d: frame %d -> %d (block %d)", idx, r, t, block_size)
        res = hybrid_compensate(frames[t], frames[r], cam, cfg, mode="tme" if args.mode == "tme" else "hybrid")
        target = frames[t]
        ps_tme = luma_psnr(target, res.compensated_tme).psnr_db
        ps_hme = ssd_hme = ps_eme = None
        stem = f"pair{idx:04d}"
        if args.mode != "tme":
            ps_hme = luma_psnr(target, res.compensated).psnr_db
            ssd_hme = res.totals()["hybrid"]
            dmap = render_decision_map(res)
            fio.write_png(out_dir / f"{stem}_map.png", dmap)
            fio.write_png(out_dir / f"{stem}_overlay.png", render_decision_map(res, res.compensated))
        if args.mode == "eme":
            ps_eme = luma_psnr(target, res.compensated_eme).psnr_db
            fio.write_pgm(out_dir / f"{stem}_eme.pgm", res.compensated_eme)
        if args.mode == "hybrid":
            fio.write_pgm(out_dir / f"{stem}_hme.pgm", res.compensated)
        if args.mode == "tme" or args.compare:
            fio.write_pgm(out_dir / f"{stem}_tme.pgm", res.compensated_tme)
        report.pairs.append(
            fio.PairResult(
                idx, r, t, ps_tme, ps_hme, res.totals()["tme"], ssd_hme, res.mode_counts(), ps_eme
            )
        )
    return report


def cmd_estimate(args) -> dict:
    frames = _load_frames(args)
    out = Path(args.out)
    report = run_estimate(args, frames, args.block_size, out)
    path = Path(args.report) if args.report else out / "report.json"
    doc = fio.write_report(report, path)
    log.info("report written to %s", path)
    return doc


def cmd_sweep(args) -> dict:
    frames = _load_frames(args)
    out = Path(args.out)
    sizes = args.block_sizes or list(DEFAULT_BLOCK_SIZES)
    reports, table = [], []
    for bs in sizes:
        rep = run_estimate(args, frames, bs, out / f"bs{bs}")
        rep.timestamp = None
        d = rep.to_dict()
        reports.append(d)
        s = d["summary"]
        table.append(
            {
                "block_size": bs,
                "tme_db": s["mean_psnr_tme_db"],
                "hme_db": s["mean_psnr_hme_db"],
                "delta_db": s["mean_delta_db"],
                "tme_infinite": s["excluded_infinite_tme"],
                "hme_infinite": s["excluded_infinite_hme"],
            }
        )
    doc = {"format": "fisheye-me-sweep/1"}
    ts = _timestamp(args)
    if ts is not None:
        doc["timestamp"] = ts
    doc.update({"block_sizes": sizes, "table": table, "reports": reports})
    path = Path(args.report) if args.report else out / "sweep.json"
    out.mkdir(parents=True, exist_ok=True)
    fio.dump_json(doc, path)
    return doc


def load_scene(path) -> tuple[PlanarScene, CameraModel, dict]:
    """Parse a scene file (JSON). See README for the keys."""
    try:
        spec = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"scene file {path}: {exc}") from exc
    try:
        cam_spec = dict(spec.get("camera", {}))
        preset = cam_spec.pop("preset", "circular")
        if preset not in PRESETS:
            raise ConfigError(f"unknown camera preset {preset!r}")
        sw, sh = PRESETS[preset]
        width = int(cam_spec.pop("width", 256))
        height = int(cam_spec.pop("height", width))
        cam = CameraModel(
            float(cam_spec.pop("focal_length_mm", 1.8)),
            float(cam_spec.pop("sensor_width_mm", sw)),
            float(cam_spec.pop("sensor_height_mm", sh)),
            width,
            height,
            float(cam_spec.pop("fov_deg", 185.0)),
        )
        if cam_spec:
            raise ConfigError(f"unknown camera keys: {sorted(cam_spec)}")
        tex_spec = spec.get("texture", {"noise": {}})
        if "path" in tex_spec:
            tex_path = Path(path).parent / tex_spec["path"]
            texture = fio.read_image(tex_path)
        else:
            n = tex_spec.get("noise", {})
            texture = noise_texture(int(n.get("size", 512)), int(n.get("cells", 64)), int(n.get("seed", 0)))
        depth = float(spec.get("depth_mm", 1000.0))
        if "translation_mm" in spec:
            tx, ty = (float(v) for v in spec["translation_mm"])
        else:
            sx, sy = (float(v) for v in spec.get("shift_steps", [0, 0]))
            tx, ty = translation_for_steps(cam, depth, sx, sy)
        scene = PlanarScene(texture, float(spec.get("texture_pitch_mm", 15.625)), depth, (tx, ty))
    except (TypeError, KeyError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"scene file {path}: {exc}") from exc
    return scene, cam, spec


def cmd_synth(args) -> dict:
    if not args.scene:
        raise ConfigError("--scene is required")
    scene, cam, spec = load_scene(args.scene)
    n = int(spec.get("frames", 2))
    if n < 1:
        raise ConfigError("frames must be >= 1")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    frames = render_sequence(scene, cam, n)
    fmt = spec.get("format", "y4m")
    if fmt == "y4m":
        seq = out / "sequence.y4m"
        fio.write_y4m(seq, frames, spec.get("frame_rate", "25:1"))
    elif fmt == "pgm":
        seq = out / "frames"
        seq.mkdir(exist_ok=True)
        for k, f in enumerate(frames):
            fio.write_pgm(seq / f"frame_{k:04d}.pgm", f)
    else:
        raise ConfigError(f"unknown output format {fmt!r}")
    sx, sy = scene.perspective_shift_steps(cam)
    truth = {
        "format": "fisheye-me-truth/1",
        "sequence": seq.name,
        "camera": cam.to_dict(),
        "depth_mm": scene.depth_mm,
        "texture_pitch_mm": scene.texture_pitch_mm,
        "translation_mm_per_frame": list(scene.translation_mm),
        # motion of frame k relative to its predecessor, in candidate steps
        "frames": [
            {"index": k, "shift_steps": [0.0, 0.0] if k == 0 else [sx, sy]} for k in range(n)
        ],
    }
    fio.dump_json(truth, out / "ground_truth.json")
    return truth


def _add_common(p: argparse.ArgumentParser, estimate: bool = True) -> None:
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--report", help="report path (default: inside --out)")
    p.add_argument("--no-timestamp", action="store_true", help="omit the timestamp field")
    p.add_argument("-v", "--verbose", action="store_true")
    if not estimate:
        return
    p.add_argument("--input", help="Y4M file, raw planar file or directory of PGM/PNG frames")
    p.add_argument("--format", choices=["y4m", "raw", "images"], help="input format (default: by path)")
    p.add_argument("--size", type=lambda s: _wxh(s, int), help="frame size WxH (raw input)")
    p.add_argument("--camera-preset", choices=sorted(PRESETS), default="circular")
    p.add_argument("--f-mm", type=float, default=1.8, help="focal length in mm")
    p.add_argument("--sensor-mm", type=_wxh, help="sensor size WxH in mm (overrides preset)")
    p.add_argument("--fov-deg", type=float, default=185.0)
    p.add_argument("--search-range", type=int, default=128)
    p.add_argument("--scale", type=int, default=8, help="reference upsampling factor")
    p.add_argument("--mode", choices=["tme", "eme", "hybrid"], default="hybrid")
    p.add_argument("--pairs", type=int, help="number of frame pairs (default: all)")
    p.add_argument("--stride", type=int, default=1, help="frames between selected pairs")
    p.add_argument("--start", type=int, default=0, help="first reference frame")
    p.add_argument("--compare", action="store_true", help="also write TME-only frames")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fisheye-me", description="Hybrid translational/equisolid motion estimation for fisheye video"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="motion-compensate frame pairs and report PSNR")
    _add_common(p)
    p.add_argument("--block-size", type=int, default=16)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("sweep", help="estimate over several block sizes, Table-style summary")
    _add_common(p)
    p.add_argument("--block-sizes", type=_int_list, help="comma list (default 8,16,32,64)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("synth", help="render a planar-scene fisheye sequence with ground truth")
    _add_common(p, estimate=False)
    p.add_argument("--scene", help="scene description (JSON)")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s"
    )
    try:
        args.func(args)
    except ConfigError as exc:
        print(f"fisheye-me: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, fio.FrameFormatError) as exc:
        print(f"fisheye-me: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error")
        print(f"fisheye-me: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
