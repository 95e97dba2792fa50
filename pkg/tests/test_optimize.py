import warnings

import numpy as np
import pytest

from pbm3d.exceptions import NonConvergenceWarning, SingularTransformError, ValidationError
from pbm3d.fixtures import fixture_set
from pbm3d.optimize import (
    ObjectiveValue,
    OptimizationRun,
    _Evaluator,
    _sampling_rng,
    center_crop,
    image_seed,
    monte_carlo_search,
    objective,
    pattern_search,
    perturbations,
    sample_transform,
)
from pbm3d.presets import preset


@pytest.fixture(scope="module")
def small_run():
    imgs = [f.image for f in fixture_set(2, 64, 0)]
    return OptimizationRun(imgs, 0.05, seed=3, budget=5, crop=32)


def test_run_validation():
    img = fixture_set(1, 64)[0].image
    with pytest.raises(ValidationError):
        OptimizationRun([], 0.05)
    with pytest.raises(ValidationError):
        OptimizationRun([img], -0.1)
    with pytest.raises(ValidationError):
        OptimizationRun([img], 0.05, delta=0)
    with pytest.raises(ValidationError):
        OptimizationRun([img], 0.05, budget=0)
    with pytest.raises(ValidationError):
        OptimizationRun([img.as_array()], 0.05)


def test_frozen_noise(small_run):
    again = OptimizationRun(small_run.dataset, 0.05, seed=3, crop=32)
    for a, b in zip(small_run.noisy, again.noisy):
        assert np.array_equal(a.as_array(), b.as_array())
    assert small_run.truth[0].shape == (32, 32)
    assert image_seed(3, 0) != image_seed(3, 1)


def test_center_crop():
    img = fixture_set(1, 64)[0].image
    c = center_crop(img, 20)
    assert np.array_equal(c.i0, img.i0[22:42, 22:42])
    assert center_crop(img, None) is img


def test_objective_value():
    v = ObjectiveValue.from_list([1.0, 2.0, 6.0])
    assert v.mean_mse == 3.0 and float(v) == 3.0
    with pytest.raises(ValidationError):
        ObjectiveValue(1.0, (-1.0,))


def test_objective_deterministic(small_run):
    a = objective(preset("opponent"), small_run)
    b = objective(preset("opponent"), small_run)
    assert a == b
    assert a.mean_mse == pytest.approx(np.mean(a.per_image_mse), rel=1e-15)


def test_objective_zero_sigma():
    imgs = [f.image for f in fixture_set(2, 64, 0)]
    run = OptimizationRun(imgs, 0.0, crop=32)
    for name in ("opponent", "stokes", "opt-global"):
        assert objective(preset(name), run).mean_mse < 1e-8


def test_objective_singular(small_run):
    with pytest.raises(SingularTransformError):
        objective(np.ones((3, 3)) / 3, small_run)


def test_cached_matches_uncached(small_run):
    ev = _Evaluator(small_run)
    for m in [preset("opponent").m] + perturbations(preset("opponent").m, 0.01)[:6]:
        assert ev(m) == objective(m, small_run)
    # second pass is served from the cache
    assert ev(preset("opponent")) == objective(preset("opponent"), small_run)


def test_pruning_bound(small_run):
    ev = _Evaluator(small_run, cache=False)
    v = ev(preset("opponent"))
    assert ev(preset("stokes"), bound=v.mean_mse / 10) is None
    assert ev(preset("opponent"), bound=v.mean_mse * 2) == v


def test_sample_transform_valid():
    rng = _sampling_rng(0)
    for _ in range(50):
        t = sample_transform(rng)
        assert np.allclose(np.abs(t.m).sum(axis=1), 1.0)
        assert np.linalg.cond(t.m) < 1e6


def test_sample_transform_signs_cover():
    rng = _sampling_rng(1)
    m = np.stack([sample_transform(rng).m for _ in range(200)])
    frac = (m < 0).mean()
    assert 0.4 < frac < 0.6


def test_monte_carlo_budget_one(small_run):
    r = monte_carlo_search(small_run, sampling_seed=4, budget=1)
    t = sample_transform(_sampling_rng(4))
    assert np.array_equal(r.transform.m, t.m)
    assert r.value == objective(t, small_run)
    assert r.n_evaluations == 1


def test_monte_carlo_argmin_and_prefix(small_run):
    r = monte_carlo_search(small_run, sampling_seed=7, budget=4, prune=False)
    rng = _sampling_rng(7)
    values = [objective(sample_transform(rng), small_run).mean_mse for _ in range(4)]
    assert r.value.mean_mse == min(values)
    assert r.history == list(np.minimum.accumulate(values))
    pruned = monte_carlo_search(small_run, sampling_seed=7, budget=4)
    assert pruned.value == r.value
    for b in (1, 2, 3):
        assert monte_carlo_search(small_run, sampling_seed=7, budget=b).value.mean_mse >= r.value.mean_mse


def test_monte_carlo_deterministic(small_run):
    a = monte_carlo_search(small_run, sampling_seed=2, budget=2)
    b = monte_carlo_search(small_run, sampling_seed=2, budget=2)
    assert np.array_equal(a.transform.m, b.transform.m) and a.value == b.value


def _neighbours(m, delta):
    # brute-force rebuild: every exchange, renormalized only if the L1 norm moved
    out = []
    for row in range(3):
        for step in (delta, 10 * delta):
            for p in range(3):
                for q in range(3):
                    if p == q:
                        continue
                    c = m.copy()
                    c[row, p] += step
                    c[row, q] -= step
                    l1 = np.abs(c[row]).sum()
                    if abs(l1 - 1) > 1e-12:
                        c[row] /= l1
                    if not np.array_equal(c, m):
                        out.append(c)
    return out


def test_perturbation_set():
    m = preset("opponent").m
    ps = perturbations(m, 0.01)
    assert len(ps) == len({p.tobytes() for p in ps})
    ref = {c.tobytes() for c in _neighbours(m, 0.01)}
    assert {p.tobytes() for p in ps} == ref
    for p in ps:
        assert (np.abs(p - m).sum(axis=1) > 0).sum() == 1
        assert np.allclose(np.abs(p).sum(axis=1), 1.0)


def test_perturbation_keeps_exact_rows():
    # no renormalization when the L1 norm is unchanged
    m = np.array([[0.5, 0.25, 0.25], [0.5, 0, -0.5], [0.25, -0.5, 0.25]])
    for p in perturbations(m, 0.01):
        for k in range(3):
            if not np.array_equal(p[k], m[k]):
                assert np.abs(p[k]).sum() == pytest.approx(1.0, abs=1e-12)


def _quadratic(target):
    return lambda t: float(np.sum((t.m - target) ** 2))


def test_pattern_search_fixed_point(small_run):
    t0 = preset("opponent")
    r = pattern_search(small_run, t0=t0, objective_fn=_quadratic(t0.m))
    assert r.converged and r.iterations == 1
    assert np.array_equal(r.transform.m, t0.m)
    assert r.n_evaluations == 1 + len(perturbations(t0.m, small_run.delta))


def test_pattern_search_descends(small_run):
    target = preset("opponent").m.copy()
    target[0] = (0.4, 0.35, 0.25)
    run = OptimizationRun(small_run.dataset, 0.05, budget=200, crop=32)
    r = pattern_search(run, objective_fn=_quadratic(target))
    assert r.converged
    assert all(b < a for a, b in zip(r.history, r.history[1:]))
    assert r.value.mean_mse < r.history[0]
    assert np.abs(r.transform.m - target).max() <= run.delta


def test_pattern_search_budget_warning(small_run):
    target = preset("opt-sigma-0.15").m
    with pytest.warns(NonConvergenceWarning):
        r = pattern_search(small_run, objective_fn=_quadratic(target), budget=2)
    assert not r.converged and r.iterations == 2


def test_pattern_search_real_objective(small_run):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NonConvergenceWarning)
        r = pattern_search(small_run, budget=1)
    base = objective(preset("opponent"), small_run).mean_mse
    assert r.value.mean_mse <= base
    assert r.value == objective(r.transform, small_run)
    t, v = r
    assert t is r.transform and v is r.value
