"""Deterministic synthetic polarization scenes with exact ground truth.

``textured`` scenes follow a dead-leaves model: overlapping discs with
power-law radii, each carrying its own grey level, fine fractal texture and
polarization state. That gives the edges, occlusions and scale-invariant
statistics of natural photographs without shipping image files.
``uniform-dop`` scenes are the flat geometric kind common in older
benchmarks, and ``unpolarized`` scenes repeat one texture in all three
components.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .exceptions import ValidationError
from .polar import CameraImage, StokesImage, camera_from_stokes

__all__ = ["Fixture", "FIXTURE_KINDS", "make_fixture", "fixture_set", "luminance_texture"]

FIXTURE_KINDS = ("uniform-dop", "textured", "unpolarized")


@dataclass(frozen=True, eq=False)
class Fixture:
    image: CameraImage
    dop: np.ndarray
    aop: np.ndarray
    kind: str
    seed: int


def _fractal_noise(rng, size, beta=2.0):
    f = np.fft.fftfreq(size)
    fr = np.hypot(f[:, None], f[None, :])
    fr[0, 0] = 1.0
    amp = fr ** (-beta / 2.0)
    amp[0, 0] = 0.0
    phase = rng.uniform(0, 2 * np.pi, (size, size))
    field = np.real(np.fft.ifft2(amp * np.exp(1j * phase)))
    return field / (field.std() + 1e-12)


def _dead_leaves(rng, size, n_leaves, r_min, r_max):
    """Label map of a dead-leaves partition; later leaves lie underneath."""
    labels = np.full((size, size), -1, dtype=np.int64)
    yy, xx = np.mgrid[0:size, 0:size]
    # radii ~ r^-3 density, the usual scale-invariant choice
    u = rng.uniform(size=n_leaves)
    radii = 1.0 / np.sqrt(u / r_min**2 + (1 - u) / r_max**2)
    centers = rng.uniform(-0.1 * size, 1.1 * size, (n_leaves, 2))
    for k in range(n_leaves):
        free = labels < 0
        if not free.any():
            break
        cy, cx = centers[k]
        hit = free & ((yy - cy) ** 2 + (xx - cx) ** 2 < radii[k] ** 2)
        labels[hit] = k
    labels[labels < 0] = n_leaves
    return labels


def luminance_texture(size, seed, lo=0.03, hi=0.95):
    """Natural-looking grey-level texture in ``[lo, hi]``."""
    rng = np.random.default_rng([int(seed), 1])
    labels, grey, _ = _leaf_scene(rng, size)
    return _render_luminance(rng, labels, grey, size, lo, hi)


def _leaf_scene(rng, size):
    n_leaves = max(60, size * size // 60)
    labels = _dead_leaves(rng, size, n_leaves, r_min=2.0, r_max=size / 2.5)
    # skewed towards darker tones, as in most photographs
    grey = rng.beta(1.3, 1.8, n_leaves + 1)
    return labels, grey, n_leaves


def _render_luminance(rng, labels, grey, size, lo, hi):
    lum = grey[labels]
    yy, xx = np.mgrid[0:size, 0:size] / size
    shade = 0.25 * (rng.uniform(-1, 1) * yy + rng.uniform(-1, 1) * xx)
    lum = lum * (1.0 + shade) * (1.0 + 0.12 * _fractal_noise(rng, size, beta=2.2))
    lum = ndimage.gaussian_filter(lum, 0.6, mode="reflect")
    lum = (lum - lum.min()) / (lum.max() - lum.min() + 1e-12)
    return lo + (hi - lo) * lum


def _camera_from_polarization(s0, dop, aop):
    s1 = s0 * dop * np.cos(2 * aop)
    s2 = s0 * dop * np.sin(2 * aop)
    return camera_from_stokes(StokesImage(s0, s1, s2))


def _textured(rng, size):
    labels, grey, n = _leaf_scene(rng, size)
    lum = _render_luminance(rng, labels, grey, size, 0.03, 0.95)
    # most surfaces weakly polarized, a few strongly (glass, water, gloss)
    leaf_dop = np.where(rng.uniform(size=n + 1) < 0.15,
                        rng.uniform(0.3, 0.7, n + 1), rng.uniform(0.0, 0.2, n + 1))
    leaf_aop = rng.uniform(-np.pi / 2, np.pi / 2, n + 1)
    dop = leaf_dop[labels] + 0.04 * _fractal_noise(rng, size, beta=3.0)
    dop = np.clip(ndimage.gaussian_filter(dop, 0.8), 0.0, 0.8)
    aop = leaf_aop[labels] + 0.3 * _fractal_noise(rng, size, beta=3.0)
    aop = np.angle(ndimage.gaussian_filter(np.exp(2j * aop), 0.8)) / 2
    # camera components stay below the luminance, hence inside [0, 1]
    s0 = 2.0 * lum / (1.0 + dop.max())
    return _camera_from_polarization(s0, dop, aop), dop, aop


def _uniform_dop(rng, size):
    s0 = np.full((size, size), 0.8)
    dop = np.full((size, size), 0.1)
    aop = np.full((size, size), np.pi / 3)
    # fixed reference region: DoP 0.5 at AoP 0 in the top-left quadrant
    q = size // 2
    s0[:q, :q] = 1.0
    dop[:q, :q] = 0.5
    aop[:q, :q] = 0.0
    yy, xx = np.mgrid[0:size, 0:size]
    for _ in range(6):
        cy, cx = rng.uniform(q, size, 2)
        r = rng.uniform(size / 16, size / 5)
        disc = (yy - cy) ** 2 + (xx - cx) ** 2 < r**2
        s0[disc] = rng.uniform(0.2, 1.0)
        dop[disc] = rng.uniform(0.0, 0.9)
        aop[disc] = rng.uniform(-np.pi / 2, np.pi / 2)
    return _camera_from_polarization(s0, dop, aop), dop, aop


def make_fixture(kind: str, size: int = 128, seed: int = 0) -> Fixture:
    """Noise-free scene of ``size x size`` pixels; deterministic per arguments."""
    if kind not in FIXTURE_KINDS:
        raise ValidationError(f"unknown fixture kind {kind!r}; expected one of {FIXTURE_KINDS}")
    if int(size) != size or size < 32:
        raise ValidationError(f"fixture size must be an integer >= 32, got {size}")
    size = int(size)
    rng = np.random.default_rng([int(seed), FIXTURE_KINDS.index(kind)])
    if kind == "unpolarized":
        lum = luminance_texture(size, seed)
        img = CameraImage(lum, lum, lum)
        dop = np.zeros((size, size))
        aop = np.zeros((size, size))
    elif kind == "textured":
        img, dop, aop = _textured(rng, size)
    else:
        img, dop, aop = _uniform_dop(rng, size)
    return Fixture(img, dop, aop, kind, int(seed))


def fixture_set(n, size=128, seed=0, kind="textured"):
    """``n`` fixtures of one kind with seeds ``seed, seed+1, ...``."""
    return [make_fixture(kind, size, seed + k) for k in range(n)]
