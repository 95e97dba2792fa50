"""Input coercion shared by the estimator classes."""

from __future__ import annotations

import numpy as np

from .exceptions import StructuralError, ValidationError
from .polar import CameraImage


def check_image(x) -> CameraImage:
    """A :class:`CameraImage` from itself or a ``(3, H, W)`` array."""
    if isinstance(x, CameraImage):
        return x
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[0] != 3:
        raise StructuralError(f"expected a (3, H, W) array of camera components, got {arr.shape}")
    return CameraImage.from_array(arr)


def check_images(X):
    """``(images, single)``: a list of images and whether ``X`` was one image."""
    if isinstance(X, CameraImage):
        return [X], True
    if isinstance(X, np.ndarray):
        if X.ndim == 3:
            return [check_image(X)], True
        if X.ndim == 4:
            return [check_image(x) for x in X], False
        raise StructuralError(f"expected (3, H, W) or (N, 3, H, W), got {X.shape}")
    images = [check_image(x) for x in X]
    if not images:
        raise ValidationError("no images given")
    return images, False


def as_output(images, single, like):
    """Return results in the container type the caller passed in."""
    if single:
        out = images[0]
        return out.as_array() if isinstance(like, np.ndarray) else out
    if isinstance(like, np.ndarray):
        return np.stack([im.as_array() for im in images])
    return images


def check_sigma(sigma, allow_none=False):
    if sigma is None and allow_none:
        return None
    try:
        s = float(sigma)
    except (TypeError, ValueError):
        raise ValidationError(f"sigma must be a number, got {sigma!r}") from None
    if not np.isfinite(s) or s < 0:
        raise ValidationError(f"sigma must be >= 0, got {sigma}")
    return s
