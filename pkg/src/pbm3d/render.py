"""Visualisations of polarization maps.

DoP maps are grey levels with black at DoP 0 and white at DoP 0.5 or more.
AoP maps use the hue circle, so the angles -pi/2 and pi/2, which describe
the same orientation, get the same colour.
"""

from __future__ import annotations

import os

import numpy as np

from .exceptions import ImageIOError, ValidationError
from .fileio import write_plane
from .polar import CameraImage, polarization_maps, stokes_from_camera

__all__ = ["DOP_WHITE", "dop_image", "aop_image", "write_ppm", "render_maps"]

DOP_WHITE = 0.5


def dop_image(dop, white=DOP_WHITE):
    """Grey levels in [0, 1]: ``dop / white``, clipped."""
    if not white > 0:
        raise ValidationError(f"white level must be positive, got {white}")
    return np.clip(np.asarray(dop, dtype=np.float64) / white, 0.0, 1.0)


def _hue_to_rgb(h):
    # fully saturated, full value HSV to RGB
    k = np.stack([(5 + 6 * h) % 6, (3 + 6 * h) % 6, (1 + 6 * h) % 6], axis=-1)
    return 1.0 - np.clip(np.minimum(k, 4 - k), 0.0, 1.0)


def aop_image(aop, mask=None, value=None):
    """RGB image ``(H, W, 3)`` in [0, 1] with hue ``(aop + pi/2) / pi``.

    ``value`` optionally scales brightness per pixel (e.g. by the DoP map);
    masked pixels are black.
    """
    aop = np.asarray(aop, dtype=np.float64)
    rgb = _hue_to_rgb((aop + np.pi / 2) / np.pi % 1.0)
    if value is not None:
        rgb = rgb * np.clip(np.asarray(value, dtype=np.float64), 0.0, 1.0)[..., None]
    if mask is not None:
        rgb[np.asarray(mask, dtype=bool)] = 0.0
    return rgb


def write_ppm(path, rgb):
    """8-bit binary PPM from an ``(H, W, 3)`` array in [0, 1]."""
    rgb = np.asarray(rgb, dtype=np.float64)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValidationError(f"expected an (H, W, 3) array, got {rgb.shape}")
    q = np.rint(np.clip(rgb, 0.0, 1.0) * 255).astype(np.uint8)
    try:
        with open(os.fspath(path), "wb") as f:
            f.write(b"P6\n%d %d\n255\n" % (rgb.shape[1], rgb.shape[0]))
            f.write(q.tobytes())
    except OSError as e:
        raise ImageIOError(f"cannot write {path}: {e}") from e


def render_maps(img: CameraImage, dop_path=None, aop_path=None):
    """Write the DoP map as an 8-bit PGM and the AoP map as a PPM.

    Returns ``(dop_grey, aop_rgb)``.
    """
    maps = polarization_maps(stokes_from_camera(img))
    grey = dop_image(maps.dop)
    rgb = aop_image(maps.aop, maps.mask | maps.aop_mask)
    if dop_path is not None:
        write_plane(dop_path, grey, "pgm8")
    if aop_path is not None:
        write_ppm(aop_path, rgb)
    return grey, rgb
