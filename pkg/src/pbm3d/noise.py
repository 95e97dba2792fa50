"""Additive Gaussian noise, the DoP bias probe and a noise-level estimator.

Random numbers come from numpy's Philox counter-based generator. Each plane
draws from its own stream keyed by ``(seed, plane_index)``, so a plane's
noise does not depend on how many other planes are generated or in which
order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ValidationError
from .polar import CameraImage, StokesImage, compute_dop

__all__ = ["NoiseSpec", "plane_rng", "add_noise", "dop_bias_probe", "estimate_sigma"]

# 1/Phi^{-1}(3/4): converts a median absolute deviation into a std estimate
MAD_NORMALIZER = 0.6745


@dataclass(frozen=True)
class NoiseSpec:
    sigma: float
    seed: int = 0

    def __post_init__(self):
        if not np.isfinite(self.sigma) or self.sigma < 0:
            raise ValidationError(f"sigma must be >= 0, got {self.sigma}")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ValidationError(f"seed must be a non-negative integer, got {self.seed}")


def plane_rng(seed: int, stream: int) -> np.random.Generator:
    """Generator for substream ``stream`` of ``seed``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream),))
    return np.random.Generator(np.random.Philox(ss))


def add_noise(img: CameraImage, spec: NoiseSpec) -> CameraImage:
    """Add independent N(0, sigma^2) noise to every sample of every plane.

    The result is not clipped.
    """
    if spec.sigma == 0:
        return CameraImage(*img)
    planes = [
        p + spec.sigma * plane_rng(spec.seed, k).standard_normal(p.shape)
        for k, p in enumerate(img)
    ]
    return CameraImage(*planes)


def dop_bias_probe(intensity: float, sigma: float, n_samples: int, seed: int = 0) -> float:
    """Mean DoP measured on noisy copies of an unpolarized pixel.

    Each simulated pixel has camera components ``intensity/2`` so its true
    DoP is zero; any positive mean is bias introduced by the noise. Pixels
    whose noisy S0 falls to zero or below are excluded from the mean.
    """
    if not intensity > 0:
        raise ValidationError(f"intensity must be positive, got {intensity}")
    if n_samples < 1:
        raise ValidationError(f"n_samples must be >= 1, got {n_samples}")
    spec = NoiseSpec(sigma, seed)
    if sigma == 0:
        return 0.0
    base = np.full((1, int(n_samples)), intensity / 2.0)
    noisy = add_noise(CameraImage(base, base, base), spec)
    i0, i45, i90 = noisy
    s = StokesImage(i0 + i90, i0 - i90, -i0 + 2.0 * i45 - i90)
    dop, mask = compute_dop(s)
    if mask.all():
        return float("inf")
    return float(dop[~mask].mean())


def _finest_diagonal(plane):
    h, w = plane.shape
    p = plane[: h - h % 2, : w - w % 2]
    a, b = p[0::2, 0::2], p[0::2, 1::2]
    c, d = p[1::2, 0::2], p[1::2, 1::2]
    return 0.5 * (a - b - c + d)


def estimate_sigma(img: CameraImage) -> float:
    """Noise std from the MAD of the finest diagonal Haar subband.

    The per-plane estimates are averaged.
    """
    if img.width < 16 or img.height < 16:
        raise ValidationError(f"image must be at least 16x16, got {img.width}x{img.height}")
    est = [np.median(np.abs(_finest_diagonal(p))) / MAD_NORMALIZER for p in img]
    return float(np.mean(est))
