"""Perspective and equisolid projection functions and pixel/sensor transforms.

Radii and sensor coordinates are in millimetres, angles in radians. The radius
maps accept scalars or numpy arrays; scalar in, float out.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

SQRT2 = math.sqrt(2.0)


class DomainExceeded(ValueError):
    """Raised when a radius or angle has no image under the requested map.

    Back-projection is undefined at and beyond 90 degrees incidence, which a
    185 degree fisheye routinely contains, so callers catch this to mark
    pixels (or whole blocks) as un-projectable.
    """


class SensorPoint(NamedTuple):
    x_mm: float
    y_mm: float

    @property
    def radius(self) -> float:
        return math.hypot(self.x_mm, self.y_mm)

    @property
    def azimuth(self) -> float:
        return math.atan2(self.y_mm, self.x_mm)


class PixelPos(NamedTuple):
    col: float
    row: float


def _out(x, scalar):
    return float(x) if scalar else x


def _check_f(f):
    if not np.all(np.asarray(f) > 0):
        raise DomainExceeded(f"focal length must be positive, got {f}")


def equisolid_radius(theta, f):
    """Sensor radius ``2 f sin(theta / 2)`` of a ray at incidence ``theta``."""
    _check_f(f)
    scalar = np.ndim(theta) == 0
    t = np.asarray(theta, dtype=np.float64)
    if np.any(t < 0) or np.any(t > math.pi) or not np.all(np.isfinite(t)):
        raise DomainExceeded("incidence angle must lie in [0, pi]")
    return _out(2.0 * f * np.sin(t / 2.0), scalar)


def perspective_radius(theta, f):
    """Pinhole sensor radius ``f tan(theta)``; undefined from 90 degrees on."""
    _check_f(f)
    scalar = np.ndim(theta) == 0
    t = np.asarray(theta, dtype=np.float64)
    if np.any(t < 0) or np.any(t >= math.pi / 2) or not np.all(np.isfinite(t)):
        raise DomainExceeded("pinhole incidence angle must lie in [0, pi/2)")
    return _out(f * np.tan(t), scalar)


def equisolid_to_perspective(r_e, f):
    """Back-project an equisolid radius to the perspective domain.

    ``r_p = f tan(2 arcsin(r_e / 2f))``, valid for ``0 <= r_e < f*sqrt(2)``.
    """
    _check_f(f)
    scalar = np.ndim(r_e) == 0
    r = np.asarray(r_e, dtype=np.float64)
    if np.any(r < 0) or not np.all(np.isfinite(r)):
        raise DomainExceeded("equisolid radius must be finite and non-negative")
    if np.any(r >= f * SQRT2):
        raise DomainExceeded("equisolid radius >= f*sqrt(2) (incidence >= 90 degrees)")
    return _out(f * np.tan(2.0 * np.arcsin(r / (2.0 * f))), scalar)


def perspective_to_equisolid(r_p, f):
    """Re-project a perspective radius onto the equisolid sensor.

    ``r_e = 2 f sin(arctan(r_p / f) / 2)``; total on ``r_p >= 0`` and bounded
    above by ``f*sqrt(2)``.
    """
    _check_f(f)
    scalar = np.ndim(r_p) == 0
    r = np.asarray(r_p, dtype=np.float64)
    if np.any(r < 0) or np.any(np.isnan(r)):
        raise DomainExceeded("perspective radius must be non-negative")
    return _out(2.0 * f * np.sin(0.5 * np.arctan(r / f)), scalar)


def _radial(p: SensorPoint, f, fn) -> SensorPoint:
    r = p.radius
    if r == 0.0:
        return SensorPoint(0.0, 0.0)
    k = fn(r, f) / r
    return SensorPoint(p.x_mm * k, p.y_mm * k)


def backproject_point(p: SensorPoint, f: float) -> SensorPoint:
    """Equisolid sensor point -> perspective sensor point, azimuth kept."""
    return _radial(p, f, equisolid_to_perspective)


def reproject_point(p: SensorPoint, f: float) -> SensorPoint:
    """Perspective sensor point -> equisolid sensor point, azimuth kept."""
    return _radial(p, f, perspective_to_equisolid)


def backproject_xy(x, y, f):
    """Array form of :func:`backproject_point`.

    Returns ``(xp, yp, valid)``; invalid entries (incidence >= 90 degrees)
    are NaN in the outputs instead of raising.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    r = np.hypot(x, y)
    valid = r < f * SQRT2
    rv = np.where(valid, r, 0.0)
    rp = f * np.tan(2.0 * np.arcsin(rv / (2.0 * f)))
    with np.errstate(invalid="ignore", divide="ignore"):
        k = np.where(rv > 0, rp / np.where(rv > 0, rv, 1.0), 1.0)
    xp = np.where(valid, x * k, np.nan)
    yp = np.where(valid, y * k, np.nan)
    return xp, yp, valid


def reproject_xy(x, y, f):
    """Array form of :func:`reproject_point`."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    r = np.hypot(x, y)
    re = 2.0 * f * np.sin(0.5 * np.arctan(r / f))
    k = np.where(r > 0, re / np.where(r > 0, r, 1.0), 1.0)
    return x * k, y * k


@dataclass(frozen=True)
class CameraModel:
    """Equisolid fisheye camera with a centred optical axis.

    Pixel pitch is derived from sensor and image size and may differ per axis
    (the full-frame preset has non-square pixels).
    """

    focal_length_mm: float
    sensor_width_mm: float
    sensor_height_mm: float
    image_width_px: int
    image_height_px: int
    fov_deg: float = 185.0

    def __post_init__(self):
        if not self.focal_length_mm > 0:
            raise ValueError(f"focal length must be > 0, got {self.focal_length_mm}")
        if not (self.sensor_width_mm > 0 and self.sensor_height_mm > 0):
            raise ValueError(
                f"sensor dimensions must be > 0, got "
                f"{self.sensor_width_mm}x{self.sensor_height_mm} mm"
            )
        if int(self.image_width_px) < 1 or int(self.image_height_px) < 1:
            raise ValueError("image dimensions must be >= 1")
        if not 0 < self.fov_deg <= 360:
            raise ValueError(f"fov must be in (0, 360], got {self.fov_deg}")
        r_max = equisolid_radius(math.radians(self.fov_deg) / 2.0, self.focal_length_mm)
        half_diag = 0.5 * math.hypot(self.sensor_width_mm, self.sensor_height_mm)
        if r_max > half_diag:
            raise ValueError(
                f"image circle radius {r_max:.4f} mm exceeds half the sensor "
                f"diagonal {half_diag:.4f} mm"
            )

    @classmethod
    def circular(cls, width: int = 1088, height: int | None = None, **kw) -> "CameraModel":
        """Circular-fisheye preset: f = 1.8 mm, 5.2 mm square sensor, 185 deg."""
        return cls(1.8, 5.2, 5.2, width, width if height is None else height, **kw)

    @classmethod
    def fullframe(cls, width: int = 1216, height: int = 768, **kw) -> "CameraModel":
        """Full-frame preset: f = 1.8 mm, 4.6 x 2.9 mm sensor, 185 deg."""
        return cls(1.8, 4.6, 2.9, width, height, **kw)

    @property
    def f(self) -> float:
        return self.focal_length_mm

    @property
    def pitch_x(self) -> float:
        return self.sensor_width_mm / self.image_width_px

    @property
    def pitch_y(self) -> float:
        return self.sensor_height_mm / self.image_height_px

    @property
    def center(self) -> tuple[float, float]:
        return (self.image_width_px - 1) / 2.0, (self.image_height_px - 1) / 2.0

    def to_dict(self) -> dict:
        return {
            "focal_length_mm": self.focal_length_mm,
            "sensor_width_mm": self.sensor_width_mm,
            "sensor_height_mm": self.sensor_height_mm,
            "image_width_px": self.image_width_px,
            "image_height_px": self.image_height_px,
            "fov_deg": self.fov_deg,
        }

    def pixel_grid_mm(self, col, row):
        """Vectorised :func:`pixel_to_sensor` returning ``(x_mm, y_mm)``."""
        cx, cy = self.center
        return (
            (np.asarray(col, dtype=np.float64) - cx) * self.pitch_x,
            (np.asarray(row, dtype=np.float64) - cy) * self.pitch_y,
        )


def pixel_to_sensor(p: PixelPos, cam: CameraModel) -> SensorPoint:
    cx, cy = cam.center
    return SensorPoint((p.col - cx) * cam.pitch_x, (p.row - cy) * cam.pitch_y)


def sensor_to_pixel(s: SensorPoint, cam: CameraModel) -> PixelPos:
    cx, cy = cam.center
    return PixelPos(s.x_mm / cam.pitch_x + cx, s.y_mm / cam.pitch_y + cy)
