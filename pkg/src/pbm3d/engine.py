"""Grayscale BM3D: block matching, collaborative filtering and aggregation.

The two stages are exposed separately so that several planes can share the
grouping computed on one of them, which is what the polarization denoiser
does.

Work is split into a fixed number of chunks of reference blocks. Each chunk
aggregates into private accumulators that are summed in chunk order, so the
result is bit-identical whatever ``n_jobs`` is.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields, replace

import numpy as np

from . import _kernels
from ._transforms import TRANSFORMS_1D, TRANSFORMS_2D, block_transform, dct_matrix, kaiser_window
from .exceptions import PBM3DError, StructuralError, ValidationError

__all__ = [
    "DenoiseProfile",
    "BlockGroup",
    "GroupSet",
    "reference_grid",
    "block_match",
    "match_groups",
    "stage1_hard_threshold",
    "stage2_wiener",
    "denoise_grayscale",
]

N_CHUNKS = 4
HT, WIENER = "ht", "wiener"


def _is_pow2(n):
    return isinstance(n, (int, np.integer)) and n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class DenoiseProfile:
    """BM3D tuning constants for both stages.

    Defaults follow the "normal" profile of the original BM3D method, with
    intensities on a [0, 1] scale. Match thresholds are mean squared
    differences per pixel.
    """

    block_size: int = 8
    step: int = 3
    search_window: int = 39
    max_group_ht: int = 16
    max_group_wie: int = 32
    match_threshold_ht: float = 2500.0 / 255.0**2
    match_threshold_wie: float = 400.0 / 255.0**2
    lambda_3d: float = 2.7
    transform_2d: str = "dct"
    transform_1d: str = "haar"
    kaiser_beta: float = 2.0
    # stage-1 matching uses hard-thresholded block spectra above this noise level
    prefilter_sigma: float = 0.1
    lambda_2d: float = 2.0

    def __post_init__(self):
        if not isinstance(self.block_size, (int, np.integer)) or self.block_size < 4:
            raise ValidationError(f"block_size must be an integer >= 4, got {self.block_size}")
        if not isinstance(self.step, (int, np.integer)) or self.step < 1:
            raise ValidationError(f"step must be an integer >= 1, got {self.step}")
        if self.search_window < self.block_size:
            raise ValidationError("search_window must be >= block_size")
        for name in ("max_group_ht", "max_group_wie"):
            if not _is_pow2(getattr(self, name)):
                raise ValidationError(f"{name} must be a power of two, got {getattr(self, name)}")
        if self.match_threshold_ht <= 0 or self.match_threshold_wie <= 0:
            raise ValidationError("match thresholds must be positive")
        if self.lambda_3d < 0 or self.lambda_2d < 0:
            raise ValidationError("threshold multipliers must be >= 0")
        if self.transform_2d not in TRANSFORMS_2D:
            raise ValidationError(f"transform_2d must be one of {TRANSFORMS_2D}")
        if self.transform_1d not in TRANSFORMS_1D:
            raise ValidationError(f"transform_1d must be one of {TRANSFORMS_1D}")
        if self.transform_2d == "bior1.5" and not _is_pow2(self.block_size):
            raise ValidationError("bior1.5 needs a power-of-two block_size")

    def check_shape(self, shape):
        if self.block_size > min(shape):
            raise ValidationError(
                f"block_size {self.block_size} exceeds the plane size {shape[1]}x{shape[0]}"
            )

    def max_group(self, stage):
        return self.max_group_ht if stage == HT else self.max_group_wie

    def match_threshold(self, stage):
        return self.match_threshold_ht if stage == HT else self.match_threshold_wie

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def replace(self, **changes):
        return replace(self, **changes)


@dataclass(frozen=True)
class BlockGroup:
    """One reference block and its matches, nearest first."""

    reference: tuple
    members: tuple
    distances: tuple


class GroupSet:
    """All groups of one stage, in reference-grid order.

    Stored as dense arrays padded to the stage's maximum group size;
    ``counts[g]`` gives the valid length of row ``g``.
    """

    def __init__(self, shape, stage, members, distances, counts):
        self.shape = tuple(shape)
        self.stage = stage
        self.members = members
        self.distances = distances
        self.counts = counts
        for a in (members, distances, counts):
            a.flags.writeable = False

    def __len__(self):
        return len(self.counts)

    def __getitem__(self, g):
        n = int(self.counts[g])
        rc = self.members[g, :n]
        return BlockGroup(
            reference=(int(rc[0, 0]), int(rc[0, 1])),
            members=tuple((int(r), int(c)) for r, c in rc),
            distances=tuple(float(d) for d in self.distances[g, :n]),
        )

    def __iter__(self):
        return (self[g] for g in range(len(self)))

    def to_list(self):
        return list(self)

    def __eq__(self, other):
        if not isinstance(other, GroupSet):
            return NotImplemented
        if self.shape != other.shape or len(self) != len(other):
            return False
        if not np.array_equal(self.counts, other.counts):
            return False
        mask = np.arange(self.members.shape[1])[None, :] < self.counts[:, None]
        width = min(self.members.shape[1], other.members.shape[1])
        if mask[:, width:].any():
            return False
        mask = mask[:, :width]
        return bool(
            np.array_equal(self.members[:, :width][mask], other.members[:, :width][mask])
            and np.array_equal(self.distances[:, :width][mask], other.distances[:, :width][mask])
        )

    __hash__ = None

    def __repr__(self):
        return f"GroupSet(stage={self.stage!r}, n_groups={len(self)}, shape={self.shape})"


def _axis_grid(n, bs, step):
    last = n - bs
    g = list(range(0, last + 1, step))
    if g[-1] != last:
        g.append(last)
    return g


def reference_grid(shape, profile):
    """Row and column origins of all reference blocks, row-major.

    The grid is clamped so the last blocks touch the bottom and right edges.
    """
    bs = profile.block_size
    rows = _axis_grid(shape[0], bs, profile.step)
    cols = _axis_grid(shape[1], bs, profile.step)
    rr, cc = np.meshgrid(rows, cols, indexing="ij")
    return rr.ravel().astype(np.int64), cc.ravel().astype(np.int64)


def _as_plane(plane, name="plane"):
    p = np.asarray(plane, dtype=np.float64)
    if p.ndim != 2:
        raise StructuralError(f"{name} must be 2-D, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise ValidationError(f"{name} contains NaN or Inf")
    return p


def _check_sigma(sigma):
    if not np.isfinite(sigma) or sigma < 0:
        raise ValidationError(f"sigma must be >= 0, got {sigma}")
    return float(sigma)


def block_spectra(plane, matrix):
    """2-D transform of every block: ``(n_rows, n_cols, bs*bs)``."""
    bs = matrix.shape[0]
    out = np.empty((plane.shape[0] - bs + 1, plane.shape[1] - bs + 1, bs * bs))
    _kernels.block_spectra(np.ascontiguousarray(plane, dtype=np.float64),
                           np.ascontiguousarray(matrix, dtype=np.float64), out)
    return out


def _matching_features(plane, profile, stage, sigma):
    bs = profile.block_size
    feat = block_spectra(plane, dct_matrix(bs))
    if stage == HT and sigma > profile.prefilter_sigma:
        dc = feat[..., 0].copy()
        feat[np.abs(feat) < profile.lambda_2d * sigma] = 0.0
        feat[..., 0] = dc
    return feat


def _run_chunks(fn, n_items, n_jobs):
    bounds = np.linspace(0, n_items, min(N_CHUNKS, max(n_items, 1)) + 1).astype(int)
    ranges = [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:])]
    if n_jobs is None or n_jobs <= 1 or len(ranges) == 1:
        return [fn(a, b) for a, b in ranges]
    with ThreadPoolExecutor(max_workers=n_jobs) as ex:
        return list(ex.map(lambda ab: fn(*ab), ranges))


def _match_from_features(feat, shape, profile, stage, refs, n_jobs):
    rows, cols = refs
    n = len(rows)
    maxg = profile.max_group(stage)
    rc = np.zeros((n, maxg, 2), dtype=np.int64)
    dist = np.zeros((n, maxg))
    counts = np.zeros(n, dtype=np.int64)
    half = profile.search_window // 2
    tau = profile.match_threshold(stage)

    def work(lo, hi):
        _kernels.match_range(feat, rows, cols, lo, hi, half, maxg, tau, rc, dist, counts)

    _run_chunks(work, n, n_jobs)
    return GroupSet(shape, stage, rc, dist, counts)


def match_groups(plane, profile=None, stage=HT, sigma=0.0, n_jobs=1) -> GroupSet:
    """Block matching for every reference block of ``plane``."""
    profile = profile or DenoiseProfile()
    plane = _as_plane(plane)
    profile.check_shape(plane.shape)
    sigma = _check_sigma(sigma)
    if stage not in (HT, WIENER):
        raise ValidationError(f"stage must be {HT!r} or {WIENER!r}")
    feat = _matching_features(plane, profile, stage, sigma)
    return _match_from_features(feat, plane.shape, profile, stage,
                                reference_grid(plane.shape, profile), n_jobs)


def block_match(plane, ref_origin, profile=None, stage=HT, sigma=0.0) -> BlockGroup:
    """Group for a single reference block at ``ref_origin = (row, col)``."""
    profile = profile or DenoiseProfile()
    plane = _as_plane(plane)
    profile.check_shape(plane.shape)
    r, c = (int(v) for v in ref_origin)
    bs = profile.block_size
    if not (0 <= r <= plane.shape[0] - bs and 0 <= c <= plane.shape[1] - bs):
        raise ValidationError(f"reference block at {ref_origin} is not inside the plane")
    feat = _matching_features(plane, profile, stage, _check_sigma(sigma))
    refs = (np.array([r], dtype=np.int64), np.array([c], dtype=np.int64))
    return _match_from_features(feat, plane.shape, profile, stage, refs, 1)[0]


def _check_groups(groups, shape, profile, stage):
    if groups.shape != tuple(shape):
        raise StructuralError(f"groups were computed on a {groups.shape} plane, not {shape}")
    if groups.members.shape[1] > profile.max_group(stage):
        raise ValidationError("groups exceed the profile's maximum group size")
    refs = reference_grid(shape, profile)
    if len(groups) != len(refs[0]):
        raise StructuralError("groups do not match the profile's reference grid")


def _aggregate(kernel_call, groups, coef_shape, plane_shape, inv2d, kaiser, n_jobs):
    nr, nc = coef_shape[:2]
    rows = groups.members[:, :, 0]
    valid = np.arange(rows.shape[1])[None, :] < groups.counts[:, None]

    def work(lo, hi):
        # private accumulators span only the block rows this chunk touches
        band = rows[lo:hi][valid[lo:hi]]
        r0, r1 = int(band.min()), int(band.max()) + 1
        acc = np.zeros((r1 - r0,) + coef_shape[1:])
        wacc = np.zeros((r1 - r0, nc))
        kernel_call(lo, hi, acc, wacc, r0)
        return r0, acc, wacc

    parts = _run_chunks(work, len(groups), n_jobs)
    acc = np.zeros(coef_shape)
    wacc = np.zeros((nr, nc))
    for r0, a, w in parts:
        acc[r0:r0 + len(a)] += a
        wacc[r0:r0 + len(w)] += w
    # vec(A X A^T) = (A kron A) vec(X) for row-major blocks
    blocks = (acc.reshape(nr * nc, -1) @ np.kron(inv2d, inv2d).T).reshape(coef_shape)
    num = np.zeros(plane_shape)
    den = np.zeros(plane_shape)
    _kernels.scatter_blocks(blocks, wacc, kaiser, num, den)
    if not np.all(den > 0):
        raise PBM3DError("aggregation left pixels without any block estimate")
    return num / den


def _kind(profile):
    return _kernels.HAAR if profile.transform_1d == "haar" else _kernels.WALSH_HADAMARD


def stage1_hard_threshold(noisy_plane, sigma, profile=None, groups=None, n_jobs=1):
    """Basic estimate by collaborative hard thresholding.

    Returns ``(basic_estimate, groups)``. Passing ``groups`` skips the
    block-matching search and filters along those groups instead.
    """
    profile = profile or DenoiseProfile()
    plane = _as_plane(noisy_plane, "noisy_plane")
    profile.check_shape(plane.shape)
    sigma = _check_sigma(sigma)
    if groups is None:
        groups = match_groups(plane, profile, HT, sigma, n_jobs)
    else:
        _check_groups(groups, plane.shape, profile, HT)
    fwd, inv = block_transform(profile.transform_2d, profile.block_size)
    coefs = block_spectra(plane, fwd)
    kaiser = kaiser_window(profile.block_size, profile.kaiser_beta)
    thr = profile.lambda_3d * sigma
    kind = _kind(profile)

    def call(lo, hi, acc, wacc, row0):
        _kernels.hard_threshold_range(coefs, groups.members, groups.counts, lo, hi,
                                      kind, thr, acc, wacc, row0)

    est = _aggregate(call, groups, coefs.shape, plane.shape, inv, kaiser, n_jobs)
    return est, groups


def stage2_wiener(noisy_plane, basic_plane, sigma, profile=None, groups=None, n_jobs=1):
    """Final estimate by empirical Wiener filtering guided by ``basic_plane``.

    Groups are searched on the basic estimate unless ``groups`` is given.
    Returns ``(final_estimate, groups)``.
    """
    profile = profile or DenoiseProfile()
    noisy = _as_plane(noisy_plane, "noisy_plane")
    basic = _as_plane(basic_plane, "basic_plane")
    if noisy.shape != basic.shape:
        raise StructuralError(f"noisy {noisy.shape} and basic {basic.shape} planes differ")
    profile.check_shape(noisy.shape)
    sigma = _check_sigma(sigma)
    if groups is None:
        groups = match_groups(basic, profile, WIENER, sigma, n_jobs)
    else:
        _check_groups(groups, noisy.shape, profile, WIENER)
    fwd, inv = block_transform("dct", profile.block_size)
    coefs_noisy = block_spectra(noisy, fwd)
    coefs_basic = block_spectra(basic, fwd)
    kaiser = kaiser_window(profile.block_size, profile.kaiser_beta)
    kind = _kind(profile)
    sigma2 = sigma * sigma

    def call(lo, hi, acc, wacc, row0):
        _kernels.wiener_range(coefs_noisy, coefs_basic, groups.members, groups.counts,
                              lo, hi, kind, sigma2, acc, wacc, row0)

    est = _aggregate(call, groups, coefs_noisy.shape, noisy.shape, inv, kaiser, n_jobs)
    return est, groups


def denoise_grayscale(noisy_plane, sigma, profile=None, n_jobs=1):
    """Two-stage BM3D on a single plane."""
    basic, _ = stage1_hard_threshold(noisy_plane, sigma, profile, n_jobs=n_jobs)
    final, _ = stage2_wiener(noisy_plane, basic, sigma, profile, n_jobs=n_jobs)
    return final
