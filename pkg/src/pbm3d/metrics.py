"""Stokes-domain MSE and PSNR.

The error weights S1 and S2 by one half::

    MSE  = (1 / 3MN) * sum( dS0^2 + dS1^2 / 2 + dS2^2 / 2 )
    PSNR = 10 * log10(1 / MSE)

:func:`evaluate_method` halves all Stokes planes before comparing, so that
S0 of an image with camera components in [0, 1] lies in [0, 1] and S1, S2
in [-1, 1]. Denoised values are never clipped before scoring.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .denoise import Pbm3dConfig, denoise_per_channel, denoise_polarization, denoise_stokes
from .engine import DenoiseProfile
from .exceptions import StructuralError, ValidationError
from .polar import CameraImage, StokesImage, stokes_from_camera

__all__ = [
    "EvalReport",
    "METHODS",
    "mse_stokes",
    "psnr_from_mse",
    "psnr_stokes",
    "metric_stokes",
    "evaluate_method",
    "run_method",
    "report_record",
    "write_records",
    "read_records",
    "REPORT_FIELDS",
]

METHODS = ("pbm3d", "bm3d-per-channel", "bm3d-stokes", "none")
REPORT_FIELDS = (
    "image_id", "method", "sigma", "seed", "matrix",
    "mse", "psnr_db", "mse_s0", "mse_s1", "mse_s2",
)


@dataclass
class EvalReport:
    mse: float
    per_component_mse: tuple
    psnr_db: float = field(init=False)
    infinite: bool = field(init=False)
    sigma: float = float("nan")
    method: str = ""
    matrix: str = ""
    seed: int = -1

    def __post_init__(self):
        self.psnr_db = psnr_from_mse(self.mse)
        self.infinite = self.mse == 0


def _check_pair(s, truth):
    if s.shape != truth.shape:
        raise StructuralError(f"image {s.shape} and truth {truth.shape} differ in size")


def _per_component(s, truth):
    _check_pair(s, truth)
    return tuple(float(np.mean((a - b) ** 2)) for a, b in zip(s, truth))


def psnr_from_mse(mse):
    if mse < 0:
        raise ValidationError(f"MSE must be non-negative, got {mse}")
    return math.inf if mse == 0 else 10.0 * math.log10(1.0 / mse)


def mse_stokes(s: StokesImage, truth: StokesImage) -> EvalReport:
    m0, m1, m2 = _per_component(s, truth)
    return EvalReport((m0 + 0.5 * m1 + 0.5 * m2) / 3.0, (m0, m1, m2))


def psnr_stokes(s: StokesImage, truth: StokesImage) -> EvalReport:
    """Report with ``psnr_db``; identical inputs give ``inf`` and ``infinite=True``."""
    return mse_stokes(s, truth)


def metric_stokes(img: CameraImage) -> StokesImage:
    """Stokes planes halved onto the scale the metric is defined on."""
    s = stokes_from_camera(img)
    return StokesImage(0.5 * s.s0, 0.5 * s.s1, 0.5 * s.s2)


def run_method(noisy: CameraImage, method: str, sigma: float, transform=None,
               profile=None, n_jobs=1) -> CameraImage:
    if method == "none":
        return noisy
    if method == "pbm3d":
        cfg = Pbm3dConfig(transform if transform is not None else "opt-global",
                          profile or DenoiseProfile(), sigma)
        return denoise_polarization(noisy, cfg, n_jobs=n_jobs)
    if method in ("bm3d-per-channel", "bm3d"):
        return denoise_per_channel(noisy, sigma, profile, n_jobs)
    if method == "bm3d-stokes":
        return denoise_stokes(noisy, sigma, profile, n_jobs)
    raise KeyError(f"unknown method {method!r}; expected one of {METHODS}")


def evaluate_method(noisy: CameraImage, truth: CameraImage, method: str, sigma: float = 0.0,
                    transform=None, profile=None, seed=-1, n_jobs=1) -> EvalReport:
    """Denoise ``noisy`` with ``method`` and score it against ``truth``."""
    if method not in METHODS and method != "bm3d":
        raise KeyError(f"unknown method {method!r}; expected one of {METHODS}")
    if noisy.shape != truth.shape:
        raise StructuralError(f"noisy {noisy.shape} and truth {truth.shape} differ in size")
    out = run_method(noisy, method, sigma, transform, profile, n_jobs)
    rep = mse_stokes(metric_stokes(out), metric_stokes(truth))
    rep.sigma = float(sigma)
    rep.method = method
    rep.seed = int(seed)
    if method == "pbm3d":
        rep.matrix = getattr(transform, "name", None) or (transform if isinstance(transform, str) else "opt-global")
    return rep


def report_record(image_id, rep: EvalReport) -> dict:
    """Flat record with the fixed benchmark field names."""
    return {
        "image_id": str(image_id),
        "method": rep.method,
        "sigma": rep.sigma,
        "seed": rep.seed,
        "matrix": rep.matrix,
        "mse": rep.mse,
        "psnr_db": None if rep.infinite else rep.psnr_db,
        "mse_s0": rep.per_component_mse[0],
        "mse_s1": rep.per_component_mse[1],
        "mse_s2": rep.per_component_mse[2],
    }


def write_records(path, records):
    """Write one JSON object per line."""
    with open(path, "w") as f:
        for r in records:
            f.write(json.dumps({k: r[k] for k in REPORT_FIELDS}) + "\n")


def read_records(path):
    with open(path) as f:
        return [json.loads(line) for line in f if line.strip()]
