"""Polarization image denoising.

The three polarizer camera components are mapped through a 3x3 channel
transform, block groups are found on the luminance channel and all channels
are filtered along them with two-stage BM3D.
"""

from .datasets import DatasetManifest, average_frames, read_manifest, write_manifest
from .denoise import (
    Pbm3dConfig,
    channel_sigmas,
    denoise_per_channel,
    denoise_polarization,
    denoise_stokes,
)
from .engine import DenoiseProfile, GroupSet, block_match, denoise_grayscale, match_groups
from .estimators import BM3DPerChannel, BM3DStokes, PBM3DDenoiser, TransformOptimizer
from .exceptions import (
    DimensionMismatchError,
    ImageIOError,
    MissingFileError,
    NonConvergenceWarning,
    PBM3DError,
    RangeError,
    SingularTransformError,
    StructuralError,
    UnsupportedFormatError,
    ValidationError,
)
from .fileio import load_triple, read_plane, save_triple, write_plane
from .fixtures import make_fixture
from .metrics import EvalReport, evaluate_method, mse_stokes, psnr_stokes
from .noise import NoiseSpec, add_noise, dop_bias_probe, estimate_sigma
from .optimize import ObjectiveValue, OptimizationRun, monte_carlo_search, objective, pattern_search
from .polar import (
    CameraImage,
    ChannelTransform,
    StokesImage,
    camera_from_stokes,
    compute_aop,
    compute_dop,
    polarization_maps,
    stokes_from_camera,
)
from .presets import normalize_rows, preset

__version__ = "0.1.0"
