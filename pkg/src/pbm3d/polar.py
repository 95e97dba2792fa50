"""Polarimetric image types and the exact camera/Stokes algebra.

A polarimeter measures the intensity behind polarizers at 0, 45 and 90
degrees. Those three *camera components* relate linearly to the linear
Stokes parameters::

    S0 = I0 + I90
    S1 = I0 - I90
    S2 = -I0 + 2*I45 - I90

All planes are stored as float64 regardless of the input dtype.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .exceptions import SingularTransformError, StructuralError, ValidationError

__all__ = [
    "CameraImage",
    "StokesImage",
    "ChannelTransform",
    "PolarizationMaps",
    "stokes_from_camera",
    "camera_from_stokes",
    "compute_dop",
    "compute_aop",
    "polarization_maps",
    "apply_transform",
    "invert_transform",
    "MAX_CONDITION",
]

MAX_CONDITION = 1e6


def _as_plane(x, name):
    a = np.array(x, dtype=np.float64, copy=True)
    if a.ndim != 2:
        raise StructuralError(f"{name} must be a 2-D plane, got shape {a.shape}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise StructuralError(f"{name} is empty")
    if not np.all(np.isfinite(a)):
        raise ValidationError(f"{name} contains NaN or Inf")
    a.flags.writeable = False
    return a


def _check_same_shape(planes, names):
    shapes = {p.shape for p in planes}
    if len(shapes) != 1:
        desc = ", ".join(f"{n}={p.shape}" for n, p in zip(names, planes))
        raise StructuralError(f"plane dimensions differ: {desc}")


class _Triple:
    _names: tuple

    @property
    def shape(self):
        return getattr(self, self._names[0]).shape

    @property
    def height(self):
        return self.shape[0]

    @property
    def width(self):
        return self.shape[1]

    def as_array(self):
        """Stack the planes into a new ``(3, height, width)`` array."""
        return np.stack([getattr(self, n) for n in self._names])

    @classmethod
    def from_array(cls, arr):
        arr = np.asarray(arr)
        if arr.ndim != 3 or arr.shape[0] != 3:
            raise StructuralError(f"expected a (3, H, W) array, got {arr.shape}")
        return cls(arr[0], arr[1], arr[2])

    def __iter__(self):
        return iter([getattr(self, n) for n in self._names])


@dataclass(frozen=True, eq=False)
class CameraImage(_Triple):
    """Three co-registered intensity planes behind 0, 45 and 90 degree polarizers.

    Values are nominally in [0, 1] but are never clipped, so noisy images may
    leave that range.
    """

    i0: np.ndarray
    i45: np.ndarray
    i90: np.ndarray
    _names = ("i0", "i45", "i90")

    def __post_init__(self):
        planes = [_as_plane(getattr(self, n), n) for n in self._names]
        _check_same_shape(planes, self._names)
        for n, p in zip(self._names, planes):
            object.__setattr__(self, n, p)


@dataclass(frozen=True, eq=False)
class StokesImage(_Triple):
    """Linear Stokes planes ``(S0, S1, S2)``."""

    s0: np.ndarray
    s1: np.ndarray
    s2: np.ndarray
    _names = ("s0", "s1", "s2")

    def __post_init__(self):
        planes = [_as_plane(getattr(self, n), n) for n in self._names]
        _check_same_shape(planes, self._names)
        for n, p in zip(self._names, planes):
            object.__setattr__(self, n, p)


@dataclass(frozen=True, eq=False)
class PolarizationMaps:
    """Degree and angle of linear polarization.

    ``mask`` flags pixels where S0 is too small for the DoP to be defined
    (their ``dop`` is 0); ``aop_mask`` flags pixels with S1 = S2 = 0.
    """

    dop: np.ndarray
    aop: np.ndarray
    mask: np.ndarray
    aop_mask: np.ndarray


@dataclass(frozen=True, eq=False)
class ChannelTransform:
    """Invertible 3x3 map from ``(I0, I45, I90)`` to ``(P0, P1, P2)``.

    Construction only checks invertibility. Use :meth:`is_normalized` or
    :func:`pbm3d.optimize.normalize_rows` for the unit row L1 norm convention.
    """

    m: np.ndarray
    name: str = field(default="custom", compare=False)

    def __post_init__(self):
        m = np.array(self.m, dtype=np.float64, copy=True)
        if m.shape != (3, 3):
            raise StructuralError(f"channel transform must be 3x3, got {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValidationError("channel transform contains NaN or Inf")
        cond = np.linalg.cond(m)
        if not np.isfinite(cond) or cond >= MAX_CONDITION:
            raise SingularTransformError(
                f"channel transform is singular or ill-conditioned (cond={cond:.3g})"
            )
        m.flags.writeable = False
        object.__setattr__(self, "m", m)

    @cached_property
    def inverse(self):
        inv = np.linalg.inv(self.m)
        inv.flags.writeable = False
        return inv

    def row_l1(self):
        return np.abs(self.m).sum(axis=1)

    def is_normalized(self, tol=1e-9):
        return bool(np.all(np.abs(self.row_l1() - 1.0) <= tol))

    def __eq__(self, other):
        if not isinstance(other, ChannelTransform):
            return NotImplemented
        return np.array_equal(self.m, other.m)

    def __hash__(self):
        return hash(self.m.tobytes())

    def __repr__(self):
        rows = "; ".join(" ".join(f"{v:.4g}" for v in row) for row in self.m)
        return f"ChannelTransform({self.name!r}, [{rows}])"


def stokes_from_camera(img: CameraImage) -> StokesImage:
    i0, i45, i90 = img.i0, img.i45, img.i90
    return StokesImage(i0 + i90, i0 - i90, -i0 + 2.0 * i45 - i90)


def camera_from_stokes(s: StokesImage) -> CameraImage:
    """Inverse of :func:`stokes_from_camera`.

    ``I0 = (S0 + S1)/2``, ``I90 = (S0 - S1)/2`` and ``I45 = (S0 + S2)/2``.
    """
    return CameraImage(
        0.5 * (s.s0 + s.s1),
        0.5 * (s.s0 + s.s2),
        0.5 * (s.s0 - s.s1),
    )


def compute_dop(s: StokesImage, eps: float = 1e-8):
    """Degree of linear polarization ``sqrt(S1^2 + S2^2) / S0``.

    Returns ``(dop, mask)`` where ``mask`` marks pixels with ``S0 <= eps``;
    their DoP is reported as 0. Values above 1 are kept, since noise
    legitimately inflates the estimate.
    """
    if not eps > 0:
        raise ValidationError(f"eps must be positive, got {eps}")
    mask = s.s0 <= eps
    num = np.hypot(s.s1, s.s2)
    dop = np.zeros(s.shape)
    np.divide(num, s.s0, out=dop, where=~mask)
    return dop, mask


def compute_aop(s: StokesImage):
    """Angle of polarization in radians, folded into (-pi/2, pi/2].

    Returns ``(aop, mask)``; ``mask`` marks pixels with S1 = S2 = 0, where
    the angle is undefined (reported as 0).
    """
    aop = 0.5 * np.arctan2(s.s2, s.s1)
    aop = np.where(aop <= -np.pi / 2, aop + np.pi, aop)
    mask = (s.s1 == 0) & (s.s2 == 0)
    aop[mask] = 0.0
    return aop, mask


def polarization_maps(s: StokesImage, eps: float = 1e-8) -> PolarizationMaps:
    dop, mask = compute_dop(s, eps)
    aop, aop_mask = compute_aop(s)
    return PolarizationMaps(dop, aop, mask, aop_mask)


def _check_transform(t):
    if not isinstance(t, ChannelTransform):
        t = ChannelTransform(t)
    return t


def apply_transform(t: ChannelTransform, img: CameraImage) -> np.ndarray:
    """Map camera components to ``(P0, P1, P2)``; returns a ``(3, H, W)`` array."""
    t = _check_transform(t)
    x = img.as_array() if isinstance(img, _Triple) else np.asarray(img, dtype=np.float64)
    if x.ndim != 3 or x.shape[0] != 3:
        raise StructuralError(f"expected three planes, got shape {x.shape}")
    return np.einsum("ij,jhw->ihw", t.m, x)


def invert_transform(t: ChannelTransform, p) -> CameraImage:
    """Map a ``(P0, P1, P2)`` triple back to camera components."""
    t = _check_transform(t)
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 3 or p.shape[0] != 3:
        raise StructuralError(f"expected three planes, got shape {p.shape}")
    return CameraImage.from_array(np.einsum("ij,jhw->ihw", t.inverse, p))
