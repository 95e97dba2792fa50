"""scikit-learn style wrappers.

Each denoiser is a transformer over camera-component images: ``X`` is a
:class:`CameraImage`, a ``(3, H, W)`` array, or a list or ``(N, 3, H, W)``
stack of them, and ``transform`` returns the same kind of container. ``fit``
only settles the noise level (estimated from ``X`` when ``sigma`` is None)
and resolves the channel transform.

:class:`TransformOptimizer` learns the channel transform from clean images
and then denoises with it.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import as_output, check_images, check_sigma
from .denoise import Pbm3dConfig, denoise_per_channel, denoise_polarization, denoise_stokes
from .engine import DenoiseProfile
from .noise import estimate_sigma
from .optimize import OptimizationRun, monte_carlo_search, pattern_search
from .presets import resolve_transform

__all__ = ["PBM3DDenoiser", "BM3DPerChannel", "BM3DStokes", "TransformOptimizer"]


class _Denoiser(TransformerMixin, BaseEstimator):
    def _fit_sigma(self, images):
        s = check_sigma(self.sigma, allow_none=True)
        if s is None:
            s = float(np.mean([estimate_sigma(im) for im in images]))
        self.sigma_ = s
        self.profile_ = self.profile if self.profile is not None else DenoiseProfile()

    def fit(self, X, y=None):
        images, _ = check_images(X)
        self._fit_sigma(images)
        return self

    def transform(self, X):
        check_is_fitted(self, "sigma_")
        images, single = check_images(X)
        return as_output([self._denoise(im) for im in images], single, X)


class PBM3DDenoiser(_Denoiser):
    """Joint denoising through a luminance-polarization channel transform."""

    # the channel matrix is ``matrix`` so it does not shadow ``transform()``
    def __init__(self, sigma=None, matrix="opt-global", profile=None, n_jobs=1):
        self.sigma = sigma
        self.matrix = matrix
        self.profile = profile
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        super().fit(X)
        self.transform_ = resolve_transform(self.matrix)
        return self

    def _denoise(self, img):
        cfg = Pbm3dConfig(self.transform_, self.profile_, self.sigma_)
        return denoise_polarization(img, cfg, n_jobs=self.n_jobs)


class BM3DPerChannel(_Denoiser):
    """Independent grayscale BM3D on each camera component."""

    def __init__(self, sigma=None, profile=None, n_jobs=1):
        self.sigma = sigma
        self.profile = profile
        self.n_jobs = n_jobs

    def _denoise(self, img):
        return denoise_per_channel(img, self.sigma_, self.profile_, self.n_jobs)


class BM3DStokes(_Denoiser):
    """Independent grayscale BM3D on each Stokes component."""

    def __init__(self, sigma=None, profile=None, n_jobs=1):
        self.sigma = sigma
        self.profile = profile
        self.n_jobs = n_jobs

    def _denoise(self, img):
        return denoise_stokes(img, self.sigma_, self.profile_, self.n_jobs)


class TransformOptimizer(_Denoiser):
    """Fit the channel transform on clean images, then denoise with PBM3D.

    ``fit`` takes noise-free images; it simulates noise at ``sigma`` and
    searches with ``algo`` ("pattern" or "monte-carlo"). The result is in
    ``transform_``, ``objective_`` and ``result_``.
    """

    def __init__(self, sigma=0.05, algo="pattern", budget=50, delta=0.01, seed=0,
                 t0="opponent", crop=128, profile=None, n_jobs=1):
        self.sigma = sigma
        self.algo = algo
        self.budget = budget
        self.delta = delta
        self.seed = seed
        self.t0 = t0
        self.crop = crop
        self.profile = profile
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        images, _ = check_images(X)
        self._fit_sigma(images)
        if self.algo not in ("pattern", "monte-carlo"):
            raise ValueError(f"algo must be 'pattern' or 'monte-carlo', got {self.algo!r}")
        run = OptimizationRun(tuple(images), self.sigma_, seed=self.seed, budget=self.budget,
                              delta=self.delta, profile=self.profile_, crop=self.crop,
                              n_jobs=self.n_jobs)
        if self.algo == "pattern":
            res = pattern_search(run, resolve_transform(self.t0))
        else:
            res = monte_carlo_search(run)
        self.result_ = res
        self.transform_ = res.transform
        self.objective_ = res.value
        return self

    def _fit_sigma(self, images):
        # clean training images carry no noise to estimate
        self.sigma_ = check_sigma(self.sigma)
        self.profile_ = self.profile if self.profile is not None else DenoiseProfile()

    def _denoise(self, img):
        cfg = Pbm3dConfig(self.transform_, self.profile_, self.sigma_)
        return denoise_polarization(img, cfg, n_jobs=self.n_jobs)
