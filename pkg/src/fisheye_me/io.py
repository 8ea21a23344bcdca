"""Frame I/O (Y4M, raw planar, PGM, PNG) and JSON run reports."""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np
from PIL import Image

from .sampling import as_luma


class FrameFormatError(ValueError):
    """Malformed or inconsistent frame data; ``offset`` is the byte offset."""

    def __init__(self, message: str, offset: int | None = None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)


class MalformedHeader(FrameFormatError):
    pass


class TruncatedPayload(FrameFormatError):
    pass


class DimensionMismatch(FrameFormatError):
    pass


# --------------------------------------------------------------------------
# Y4M

Y4M_MAGIC = b"YUV4MPEG2"
_MAX_HEADER = 4096

# chroma sample count per frame as a function of (w, h)
_CHROMA = {
    "420jpeg": lambda w, h: 2 * ((w + 1) // 2) * ((h + 1) // 2),
    "420paldv": lambda w, h: 2 * ((w + 1) // 2) * ((h + 1) // 2),
    "420mpeg2": lambda w, h: 2 * ((w + 1) // 2) * ((h + 1) // 2),
    "420": lambda w, h: 2 * ((w + 1) // 2) * ((h + 1) // 2),
    "422": lambda w, h: 2 * ((w + 1) // 2) * h,
    "444": lambda w, h: 2 * w * h,
    "mono": lambda w, h: 0,
}


@dataclass(frozen=True)
class SequenceSource:
    format: str  # "y4m" | "raw" | "images"
    width: int
    height: int
    frame_rate: str | None
    frame_count: int
    colorspace: str = "mono"


def _read_line(data: bytes, start: int) -> tuple[bytes, int]:
    end = data.find(b"\n", start, start + _MAX_HEADER)
    if end < 0:
        raise MalformedHeader("unterminated header line", start)
    return data[start:end], end + 1


def _parse_y4m_header(data: bytes) -> tuple[SequenceSource, int]:
    line, pos = _read_line(data, 0)
    tokens = line.split(b" ")
    if tokens[0] != Y4M_MAGIC:
        raise MalformedHeader("missing YUV4MPEG2 signature", 0)
    width = height = None
    rate = None
    cs = "420jpeg"
    offset = len(Y4M_MAGIC) + 1
    for tok in tokens[1:]:
        if not tok:
            offset += 1
            continue
        key, val = chr(tok[0]), tok[1:].decode("ascii", "replace")
        try:
            if key == "W":
                width = int(val)
            elif key == "H":
                height = int(val)
            elif key == "F":
                num, den = val.split(":")
                rate = f"{int(num)}:{int(den)}"
            elif key == "C":
                cs = val
        except ValueError:
            raise MalformedHeader(f"bad header token {tok!r}", offset) from None
        offset += len(tok) + 1
    if width is None or height is None or width < 1 or height < 1:
        raise MalformedHeader("header lacks positive W/H", 0)
    if cs not in _CHROMA:
        raise MalformedHeader(f"unsupported colorspace C{cs}", 0)
    return SequenceSource("y4m", width, height, rate, -1, cs), pos


def _iter_y4m(data: bytes) -> Iterator[np.ndarray]:
    src, pos = _parse_y4m_header(data)
    w, h = src.width, src.height
    luma = w * h
    chroma = _CHROMA[src.colorspace](w, h)
    while pos < len(data):
        line, body = _read_line(data, pos)
        if not line.startswith(b"FRAME"):
            raise MalformedHeader("expected FRAME marker", pos)
        end = body + luma + chroma
        if end > len(data):
            raise TruncatedPayload(
                f"frame needs {luma + chroma} bytes, only {len(data) - body} remain", body
            )
        yield np.frombuffer(data, dtype=np.uint8, count=luma, offset=body).reshape(h, w).copy()
        pos = end


def probe_y4m(path) -> SequenceSource:
    data = Path(path).read_bytes()
    src, _ = _parse_y4m_header(data)
    n = sum(1 for _ in _iter_y4m(data))
    return SequenceSource("y4m", src.width, src.height, src.frame_rate, n, src.colorspace)


def read_y4m(path) -> Iterator[np.ndarray]:
    """Yield the luma plane of every frame; chroma planes are skipped."""
    return _iter_y4m(Path(path).read_bytes())


def write_y4m(path, frames, frame_rate: str = "25:1", colorspace: str = "mono") -> None:
    """Write luma frames; for 4:2:0/4:2:2/4:4:4 the chroma planes are neutral 128."""
    if colorspace not in _CHROMA:
        raise ValueError(f"unsupported colorspace {colorspace}")
    frames = [as_luma(f) for f in frames]
    if not frames:
        raise ValueError("no frames to write")
    h, w = frames[0].shape
    num, den = frame_rate.split(":")
    chroma = bytes([128]) * _CHROMA[colorspace](w, h)
    with open(path, "wb") as fh:
        fh.write(f"YUV4MPEG2 W{w} H{h} F{int(num)}:{int(den)} Ip A1:1 C{colorspace}\n".encode())
        for i, f in enumerate(frames):
            if f.shape != (h, w):
                raise DimensionMismatch(f"frame {i} is {f.shape[1]}x{f.shape[0]}, expected {w}x{h}")
            fh.write(b"FRAME\n")
            fh.write(f.tobytes())
            fh.write(chroma)


# --------------------------------------------------------------------------
# raw planar


def read_raw(path, width: int, height: int, chroma: str = "mono") -> Iterator[np.ndarray]:
    """Headerless 8-bit planar frames (``chroma`` as in Y4M, default luma only)."""
    data = Path(path).read_bytes()
    luma = width * height
    frame = luma + _CHROMA[chroma](width, height)
    n, rest = divmod(len(data), frame)
    for i in range(n):
        off = i * frame
        yield np.frombuffer(data, dtype=np.uint8, count=luma, offset=off).reshape(height, width).copy()
    if rest:
        raise TruncatedPayload(
            f"trailing {rest} bytes do not form a {width}x{height} frame", n * frame
        )


def write_raw(path, frames) -> None:
    with open(path, "wb") as fh:
        for f in frames:
            fh.write(as_luma(f).tobytes())


# --------------------------------------------------------------------------
# still images


def write_pgm(path, frame) -> None:
    f = as_luma(frame)
    h, w = f.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(f.tobytes())


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    fields = []
    pos = 0
    while len(fields) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            pos = data.find(b"\n", pos)
            if pos < 0:
                raise MalformedHeader("unterminated comment", len(data))
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise MalformedHeader("incomplete PGM header", start)
        fields.append((data[start:pos], start))
    pos += 1  # single whitespace byte after maxval
    if fields[0][0] != b"P5":
        raise MalformedHeader("not a binary PGM (P5)", 0)
    try:
        w, h, maxval = (int(v) for v, _ in fields[1:])
    except ValueError:
        raise MalformedHeader("non-numeric PGM header field", fields[1][1]) from None
    if maxval != 255:
        raise MalformedHeader(f"only maxval 255 is supported, got {maxval}", fields[3][1])
    if len(data) - pos < w * h:
        raise TruncatedPayload(f"PGM payload needs {w * h} bytes", pos)
    return np.frombuffer(data, dtype=np.uint8, count=w * h, offset=pos).reshape(h, w).copy()


def write_png(path, image) -> None:
    """8-bit grayscale (2-D) or RGB (H x W x 3) PNG."""
    a = np.asarray(image)
    if a.dtype != np.uint8 or a.ndim not in (2, 3) or (a.ndim == 3 and a.shape[2] != 3):
        raise ValueError("write_png expects uint8 gray or RGB arrays")
    Image.fromarray(np.ascontiguousarray(a)).save(path, format="PNG")


def read_png(path) -> np.ndarray:
    with Image.open(path) as im:
        if im.mode not in ("L", "RGB"):
            im = im.convert("RGB" if im.mode in ("RGBA", "P", "CMYK", "YCbCr") else "L")
        return np.asarray(im).copy()


def read_image(path) -> np.ndarray:
    """Luma frame from a PGM or PNG file."""
    p = Path(path)
    if p.suffix.lower() == ".pgm":
        return read_pgm(p)
    a = read_png(p) if p.suffix.lower() == ".png" else np.asarray(Image.open(p).convert("L"))
    if a.ndim == 3:
        raise DimensionMismatch(f"{p} is a colour image; a luma frame is required")
    return a


def read_image_sequence(paths) -> Iterator[np.ndarray]:
    shape = None
    for p in paths:
        f = read_image(p)
        if shape is None:
            shape = f.shape
        elif f.shape != shape:
            raise DimensionMismatch(f"{p} is {f.shape[1]}x{f.shape[0]}, expected {shape[1]}x{shape[0]}")
        yield f


def read_sequence(path, fmt: str | None = None, size: tuple[int, int] | None = None) -> Iterator[np.ndarray]:
    """Dispatch on ``fmt`` ("y4m", "raw", "images") or on the path.

    Directories are read as sorted PGM/PNG sequences; ``size=(w, h)`` is
    required for raw input and, if given for other formats, checked.
    """
    p = Path(path)
    if fmt is None:
        if p.is_dir():
            fmt = "images"
        elif p.suffix.lower() == ".y4m":
            fmt = "y4m"
        elif p.suffix.lower() in (".pgm", ".png"):
            fmt = "images"
        else:
            fmt = "raw"
    if fmt == "y4m":
        it = read_y4m(p)
    elif fmt == "raw":
        if size is None:
            raise ValueError("raw input requires a frame size")
        it = read_raw(p, *size)
    elif fmt == "images":
        files = (
            sorted(q for q in p.iterdir() if q.suffix.lower() in (".pgm", ".png"))
            if p.is_dir()
            else [p]
        )
        it = read_image_sequence(files)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if size is None or fmt == "raw":
        return it
    return _check_size(it, size)


def _check_size(frames, size):
    w, h = size
    for f in frames:
        if f.shape != (h, w):
            raise DimensionMismatch(f"frame is {f.shape[1]}x{f.shape[0]}, expected {w}x{h}")
        yield f


# --------------------------------------------------------------------------
# reports

SCHEMA_PATH = Path(__file__).with_name("report_schema.json")


def _db(x: float | None) -> float | None:
    if x is None or not math.isfinite(x):
        return None
    return round(x, 4)


@dataclass
class PairResult:
    index: int
    reference_frame: int
    target_frame: int
    psnr_tme: float
    psnr_hme: float | None
    ssd_tme: int
    ssd_hme: int | None
    modes: dict
    psnr_eme: float | None = None

    @property
    def delta(self) -> float | None:
        if self.psnr_hme is None or not (math.isfinite(self.psnr_hme) and math.isfinite(self.psnr_tme)):
            return None
        return self.psnr_hme - self.psnr_tme

    def to_dict(self) -> dict:
        tme, hme = _db(self.psnr_tme), _db(self.psnr_hme)
        d = {
            "index": self.index,
            "reference_frame": self.reference_frame,
            "target_frame": self.target_frame,
            "psnr_tme_db": tme,
            "psnr_tme_infinite": math.isinf(self.psnr_tme),
            "psnr_hme_db": hme,
            "psnr_hme_infinite": self.psnr_hme is not None and math.isinf(self.psnr_hme),
            # derived from the rounded values so the stored fields stay consistent
            "delta_db": None if self.delta is None else round(hme - tme, 4),
            "ssd_tme": self.ssd_tme,
            "ssd_hme": self.ssd_hme,
            "modes": dict(self.modes),
        }
        if self.psnr_eme is not None:
            d["psnr_eme_db"] = _db(self.psnr_eme)
            d["psnr_eme_infinite"] = math.isinf(self.psnr_eme)
        return d


def _mean(values):
    finite = [v for v in values if v is not None and math.isfinite(v)]
    return (sum(finite) / len(finite) if finite else None), len(values) - len(finite)


@dataclass
class RunReport:
    config: dict
    pairs: list[PairResult] = field(default_factory=list)
    timestamp: str | None = None

    def summary(self) -> dict:
        ordered = sorted(self.pairs, key=lambda p: p.index)
        tme, ex_t = _mean([p.psnr_tme for p in ordered])
        hme, ex_h = _mean([p.psnr_hme for p in ordered])
        delta, ex_d = _mean([p.delta for p in ordered])
        return {
            "pair_count": len(ordered),
            "mean_psnr_tme_db": tme,
            "mean_psnr_hme_db": hme,
            "mean_delta_db": delta,
            "excluded_infinite_tme": ex_t,
            "excluded_infinite_hme": ex_h,
            "excluded_delta": ex_d,
        }

    def to_dict(self) -> dict:
        s = self.summary()
        for k in ("mean_psnr_tme_db", "mean_psnr_hme_db", "mean_delta_db"):
            s[k] = _db(s[k])
        d = {"format": "fisheye-me-report/1"}
        if self.timestamp is not None:
            d["timestamp"] = self.timestamp
        d["config"] = self.config
        d["pairs"] = [p.to_dict() for p in sorted(self.pairs, key=lambda p: p.index)]
        d["summary"] = s
        return d


def dump_json(doc: dict, path) -> None:
    tmp = Path(str(path) + ".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, allow_nan=False)
        fh.write("\n")
    os.replace(tmp, path)


def write_report(report: RunReport, path) -> dict:
    doc = report.to_dict()
    dump_json(doc, path)
    return doc


def load_schema() -> dict:
    return json.loads(SCHEMA_PATH.read_text(encoding="utf-8"))
