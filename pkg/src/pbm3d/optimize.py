"""Search for the channel transform that denoises a training set best.

The objective of a transform is the mean, over a set of noise-free images,
of the camera-component MSE left after PBM3D denoises a fixed noisy copy of
each image. Two derivative-free searches are provided: random sampling of
row-normalized matrices and a pattern search over small L1-preserving
perturbations.

Evaluations reuse work between candidates. Block groups depend only on the
first transform row, and each output channel only on the first row and its
own row, so a candidate that changes row 1 or 2 costs one channel instead of
a full denoising run.
"""

from __future__ import annotations

import itertools
import math
import warnings
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np

from .denoise import channel_sigmas
from .engine import DenoiseProfile, stage1_hard_threshold, stage2_wiener
from .exceptions import NonConvergenceWarning, SingularTransformError, ValidationError
from .noise import NoiseSpec, add_noise
from .polar import CameraImage, ChannelTransform, invert_transform
from .presets import normalize_rows, preset

__all__ = [
    "OptimizationRun",
    "ObjectiveValue",
    "SearchResult",
    "objective",
    "normalize_rows",
    "preset",
    "sample_transform",
    "perturbations",
    "monte_carlo_search",
    "pattern_search",
]

# spawn key of the matrix sampling stream, apart from the per-image noise streams
_SAMPLING_STREAM = 2**31 - 1


def center_crop(img: CameraImage, size) -> CameraImage:
    if size is None or (img.height <= size and img.width <= size):
        return img
    h, w = min(size, img.height), min(size, img.width)
    r0, c0 = (img.height - h) // 2, (img.width - w) // 2
    return CameraImage(*(p[r0:r0 + h, c0:c0 + w] for p in img))


@dataclass(frozen=True, eq=False)
class OptimizationRun:
    """Training set, noise level and search settings.

    The noisy copies are drawn once, at construction, and shared by every
    candidate. ``budget`` is the number of sampled matrices for the Monte
    Carlo search and the maximum number of sweeps for the pattern search.
    ``crop`` keeps only a centred window of each image (``None`` keeps the
    full frame).
    """

    dataset: tuple
    sigma: float
    seed: int = 0
    budget: int = 50
    delta: float = 0.01
    profile: DenoiseProfile = field(default_factory=DenoiseProfile)
    crop: int | None = 128
    n_jobs: int = 1
    truth: tuple = field(init=False, repr=False)
    noisy: tuple = field(init=False, repr=False)

    def __post_init__(self):
        data = tuple(self.dataset)
        if not data:
            raise ValidationError("dataset must contain at least one image")
        for img in data:
            if not isinstance(img, CameraImage):
                raise ValidationError("dataset entries must be CameraImage instances")
        if not np.isfinite(self.sigma) or self.sigma < 0:
            raise ValidationError(f"sigma must be >= 0, got {self.sigma}")
        if not self.delta > 0:
            raise ValidationError(f"delta must be > 0, got {self.delta}")
        if int(self.budget) != self.budget or self.budget < 1:
            raise ValidationError(f"budget must be an integer >= 1, got {self.budget}")
        if self.crop is not None and self.crop < self.profile.block_size:
            raise ValidationError(f"crop {self.crop} is smaller than a block")
        truth = tuple(center_crop(img, self.crop) for img in data)
        for img in truth:
            self.profile.check_shape(img.shape)
        noisy = tuple(add_noise(img, NoiseSpec(self.sigma, image_seed(self.seed, i)))
                      for i, img in enumerate(truth))
        object.__setattr__(self, "dataset", data)
        object.__setattr__(self, "budget", int(self.budget))
        object.__setattr__(self, "truth", truth)
        object.__setattr__(self, "noisy", noisy)


def image_seed(seed, index):
    """Noise seed of image ``index`` in a run seeded with ``seed``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(index),))
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class ObjectiveValue:
    mean_mse: float
    per_image_mse: tuple

    def __post_init__(self):
        if any(not v >= 0 for v in self.per_image_mse):
            raise ValidationError("per-image MSE values must be >= 0")

    @classmethod
    def from_list(cls, values):
        values = tuple(float(v) for v in values)
        return cls(float(np.mean(values)), values)

    def __float__(self):
        return self.mean_mse


INFEASIBLE = ObjectiveValue(math.inf, ())


class _Evaluator:
    """Objective evaluation with per-channel caching."""

    def __init__(self, run: OptimizationRun, cache=True):
        self.run = run
        self.cache = cache
        self.head = OrderedDict()  # (image, row0) -> (final0, groups)
        self.tail = OrderedDict()  # (image, row0, k, row_k) -> final_k
        self.n_evaluations = 0

    def _lookup(self, store, key):
        if self.cache and key in store:
            store.move_to_end(key)
            return store[key]
        return None

    def _store(self, store, key, value, limit):
        if self.cache:
            store[key] = value
            while len(store) > limit:
                store.popitem(last=False)

    def keep_only(self, t):
        """Drop cache entries that the neighbourhood of ``t`` cannot reuse."""
        r0 = t.m[0].tobytes()
        for key in [k for k in self.head if k[1] != r0]:
            del self.head[key]
        for key in [k for k in self.tail if k[1] != r0]:
            del self.tail[key]

    def _head(self, i, t, sigmas):
        run = self.run
        key = (i, t.m[0].tobytes())
        head = self._lookup(self.head, key)
        if head is None:
            p0 = np.tensordot(t.m[0], run.noisy[i].as_array(), axes=1)
            basic, g1 = stage1_hard_threshold(p0, sigmas[0], run.profile, n_jobs=run.n_jobs)
            final, g2 = stage2_wiener(p0, basic, sigmas[0], run.profile, n_jobs=run.n_jobs)
            head = (final, (g1, g2))
            self._store(self.head, key, head, 40 * len(run.noisy))
        return head

    def _tail(self, i, t, k, sigmas, groups):
        run = self.run
        key = (i, t.m[0].tobytes(), k, t.m[k].tobytes())
        final = self._lookup(self.tail, key)
        if final is None:
            g1, g2 = groups
            pk = np.tensordot(t.m[k], run.noisy[i].as_array(), axes=1)
            basic, _ = stage1_hard_threshold(pk, sigmas[k], run.profile, g1, run.n_jobs)
            final, _ = stage2_wiener(pk, basic, sigmas[k], run.profile, g2, run.n_jobs)
            self._store(self.tail, key, final, 80 * len(run.noisy))
        return final

    def image_mse(self, t, i):
        sigmas = channel_sigmas(t, self.run.sigma)
        final0, groups = self._head(i, t, sigmas)
        est = np.stack([final0] + [self._tail(i, t, k, sigmas, groups) for k in (1, 2)])
        out = invert_transform(t, est)
        return float(np.mean((out.as_array() - self.run.truth[i].as_array()) ** 2))

    def __call__(self, t, bound=math.inf):
        """Objective of ``t``, or ``None`` once it provably exceeds ``bound``.

        Images are scored in order; the remaining ones can only add error,
        so the evaluation stops as soon as the running sum rules ``t`` out.
        """
        t = _as_transform(t)
        self.n_evaluations += 1
        n = len(self.run.noisy)
        values = []
        for i in range(n):
            values.append(self.image_mse(t, i))
            if math.fsum(values) / n > bound:
                return None
        return ObjectiveValue.from_list(values)


def _as_transform(t):
    if isinstance(t, ChannelTransform):
        return t
    return ChannelTransform(np.asarray(t, dtype=np.float64))


def objective(t, run: OptimizationRun) -> ObjectiveValue:
    """Mean camera-component MSE of PBM3D with transform ``t`` over the run's images.

    A singular ``t`` raises :class:`SingularTransformError`; searches treat
    it as an infinitely bad candidate.
    """
    return _Evaluator(run, cache=False)(t)


def sample_transform(rng) -> ChannelTransform:
    """Random invertible matrix with rows uniform on the signed unit L1 sphere.

    Magnitudes are flat Dirichlet draws, uniform on each face of the sphere,
    and every entry gets an independent random sign. Singular or
    ill-conditioned draws are rejected and redrawn.
    """
    while True:
        mag = rng.dirichlet(np.ones(3), size=3)
        signs = np.where(rng.random((3, 3)) < 0.5, -1.0, 1.0)
        try:
            return ChannelTransform(mag * signs, name="random")
        except SingularTransformError:
            continue


def _sampling_rng(seed):
    ss = np.random.SeedSequence(int(seed), spawn_key=(_SAMPLING_STREAM,))
    return np.random.Generator(np.random.Philox(ss))


@dataclass
class SearchResult:
    """Outcome of a search; unpacks as ``(transform, value)``."""

    transform: ChannelTransform
    value: ObjectiveValue
    n_evaluations: int
    iterations: int
    converged: bool = True
    history: list = field(default_factory=list)

    def __iter__(self):
        yield self.transform
        yield self.value


def monte_carlo_search(run: OptimizationRun, sampling_seed=None, budget=None,
                       prune=True) -> SearchResult:
    """Best of ``budget`` random valid matrices.

    Matrices come from one sequential stream seeded by ``sampling_seed``
    (default ``run.seed``), so a smaller budget sees a prefix of the same
    candidates. With ``prune`` a candidate's evaluation stops once it cannot
    beat the best so far; the arg-min is unaffected. ``history`` holds the
    best mean MSE after each candidate.
    """
    budget = run.budget if budget is None else int(budget)
    if budget < 1:
        raise ValidationError(f"budget must be >= 1, got {budget}")
    rng = _sampling_rng(run.seed if sampling_seed is None else sampling_seed)
    ev = _Evaluator(run, cache=False)
    best_t, best_v = None, INFEASIBLE
    history = []
    for _ in range(budget):
        t = sample_transform(rng)
        v = ev(t, best_v.mean_mse if prune else math.inf)
        if v is not None and v.mean_mse < best_v.mean_mse:
            best_t, best_v = t, v
        history.append(best_v.mean_mse)
    return SearchResult(best_t, best_v, ev.n_evaluations, budget, True, history)


def _renormalize_row(row, tol=1e-12):
    l1 = np.abs(row).sum()
    return row / l1 if abs(l1 - 1.0) > tol else row


def perturbations(m, delta):
    """Neighbours of ``m`` reached by moving ``step`` between two entries of a row.

    For each row, each pair of entries, each sign and each step in
    ``(delta, 10*delta)``, one entry gains ``sign*step`` and the other loses
    it. That keeps the row's L1 norm unless a sign flips, in which case the
    row is renormalized. Duplicates are dropped; the order is deterministic.
    """
    m = np.asarray(getattr(m, "m", m), dtype=np.float64)
    out, seen = [], set()
    for row in range(3):
        for step in (delta, 10 * delta):
            for p, q in itertools.combinations(range(3), 2):
                for s in (1.0, -1.0):
                    c = m.copy()
                    c[row, p] += s * step
                    c[row, q] -= s * step
                    c[row] = _renormalize_row(c[row])
                    key = c.tobytes()
                    if key not in seen and not np.array_equal(c, m):
                        seen.add(key)
                        out.append(c)
    return out


def pattern_search(run: OptimizationRun, t0=None, objective_fn=None,
                   budget=None) -> SearchResult:
    """Descend over :func:`perturbations` at ``run.delta`` from ``t0``.

    Each sweep evaluates every neighbour of the current matrix and moves to
    the best one if it strictly improves; a sweep without improvement ends
    the search. ``t0`` defaults to the opponent transform and is
    row-normalized first. If ``budget`` sweeps pass without convergence the
    best matrix so far is returned with ``converged=False`` and a
    :class:`NonConvergenceWarning`.

    ``objective_fn(t)`` replaces the PBM3D objective when given; it may
    return a float or an :class:`ObjectiveValue`.
    """
    budget = run.budget if budget is None else int(budget)
    if budget < 1:
        raise ValidationError(f"budget must be >= 1, got {budget}")
    t0 = preset("opponent") if t0 is None else t0
    cur = normalize_rows(getattr(t0, "m", t0), name=getattr(t0, "name", "t0"))
    ev = _Evaluator(run) if objective_fn is None else None
    n_eval = 0

    def score(t):
        nonlocal n_eval
        n_eval += 1
        v = ev(t) if ev is not None else objective_fn(t)
        if not isinstance(v, ObjectiveValue):
            v = ObjectiveValue(float(v), (float(v),))
        return v

    cur_v = score(cur)
    history = [cur_v.mean_mse]
    converged = False
    sweeps = 0
    while sweeps < budget:
        sweeps += 1
        if ev is not None:
            ev.keep_only(cur)
        best_t, best_v = None, cur_v
        for m in perturbations(cur.m, run.delta):
            try:
                t = ChannelTransform(m, name="pattern-search")
            except SingularTransformError:
                continue
            v = score(t)
            if v.mean_mse < best_v.mean_mse:
                best_t, best_v = t, v
        if best_t is None:
            converged = True
            break
        cur, cur_v = best_t, best_v
        history.append(cur_v.mean_mse)
    if not converged:
        warnings.warn(f"pattern search did not converge within {budget} sweeps",
                      NonConvergenceWarning, stacklevel=2)
    return SearchResult(cur, cur_v, n_eval, sweeps, converged, history)
