"""Polarization denoisers built on the grayscale BM3D engine.

:func:`denoise_polarization` maps the camera components into a
luminance-polarization space ``(P0, P1, P2)``, finds block groups on ``P0``
only and filters all three channels along those shared groups before
mapping back. The two per-channel baselines run BM3D on each camera
component or on each Stokes component with independent grouping.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .engine import DenoiseProfile, stage1_hard_threshold, stage2_wiener, denoise_grayscale
from .exceptions import ValidationError
from .polar import CameraImage, ChannelTransform, apply_transform, invert_transform
from .presets import preset, resolve_transform

__all__ = [
    "Pbm3dConfig",
    "channel_sigmas",
    "denoise_polarization",
    "denoise_transformed",
    "denoise_per_channel",
    "denoise_stokes",
]


def channel_sigmas(t, sigma):
    """Noise std of each transformed channel.

    Row ``(a, b, c)`` of the transform combines three independent
    N(0, sigma^2) components, giving std ``sigma * sqrt(a^2 + b^2 + c^2)``.
    """
    if not np.isfinite(sigma) or sigma < 0:
        raise ValidationError(f"sigma must be >= 0, got {sigma}")
    m = getattr(t, "m", t)
    return tuple(float(sigma * np.sqrt(np.sum(np.square(row)))) for row in np.asarray(m))


@dataclass(frozen=True)
class Pbm3dConfig:
    transform: ChannelTransform = field(default_factory=lambda: preset("opponent"))
    profile: DenoiseProfile = field(default_factory=DenoiseProfile)
    sigma: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "transform", resolve_transform(self.transform))
        if not np.isfinite(self.sigma) or self.sigma < 0:
            raise ValidationError(f"sigma must be >= 0, got {self.sigma}")


def denoise_transformed(planes, sigmas, profile=None, groups=None, n_jobs=1):
    """Two-stage filtering of three planes with grouping taken from plane 0.

    ``groups`` may hold the ``(stage1, stage2)`` group sets from an earlier
    call on the same plane 0, in which case no block matching is done.
    Returns ``(estimate, (stage1_groups, stage2_groups))``.
    """
    profile = profile or DenoiseProfile()
    g1_in, g2_in = groups if groups is not None else (None, None)
    basic0, g1 = stage1_hard_threshold(planes[0], sigmas[0], profile, g1_in, n_jobs)
    basic = [basic0] + [
        stage1_hard_threshold(planes[k], sigmas[k], profile, g1, n_jobs)[0] for k in (1, 2)
    ]
    final0, g2 = stage2_wiener(planes[0], basic0, sigmas[0], profile, g2_in, n_jobs)
    final = [final0] + [
        stage2_wiener(planes[k], basic[k], sigmas[k], profile, g2, n_jobs)[0] for k in (1, 2)
    ]
    return np.stack(final), (g1, g2)


def denoise_polarization(img: CameraImage, cfg: Pbm3dConfig, n_jobs=1, return_groups=False):
    """Denoise a camera image with shared luminance-channel grouping."""
    p = apply_transform(cfg.transform, img)
    sigmas = channel_sigmas(cfg.transform, cfg.sigma)
    est, groups = denoise_transformed(p, sigmas, cfg.profile, n_jobs=n_jobs)
    out = invert_transform(cfg.transform, est)
    return (out, groups) if return_groups else out


def denoise_per_channel(img: CameraImage, sigma, profile=None, n_jobs=1) -> CameraImage:
    """Grayscale BM3D on each camera component separately."""
    return CameraImage(*(denoise_grayscale(p, sigma, profile, n_jobs) for p in img))


def denoise_stokes(img: CameraImage, sigma, profile=None, n_jobs=1) -> CameraImage:
    """Grayscale BM3D on each (normalized) Stokes component separately."""
    t = preset("stokes")
    p = apply_transform(t, img)
    sigmas = channel_sigmas(t, sigma)
    est = np.stack([denoise_grayscale(p[k], sigmas[k], profile, n_jobs) for k in range(3)])
    return invert_transform(t, est)
