import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from pbm3d.exceptions import SingularTransformError, StructuralError, ValidationError
from pbm3d.polar import (
    CameraImage,
    ChannelTransform,
    StokesImage,
    apply_transform,
    camera_from_stokes,
    compute_aop,
    compute_dop,
    invert_transform,
    polarization_maps,
    stokes_from_camera,
)
from pbm3d.presets import preset

from conftest import random_image


def px(*v):
    return [np.array([[x]], dtype=float) for x in v]


def triple(img):
    return tuple(float(p[0, 0]) for p in img)


finite = st.floats(-10, 10, allow_nan=False)
planes = arrays(np.float64, (3, 4, 5), elements=finite)


class TestTypes:
    def test_mismatched_planes(self):
        with pytest.raises(StructuralError):
            CameraImage(np.zeros((2, 2)), np.zeros((2, 2)), np.zeros((2, 3)))

    def test_nan_rejected(self):
        with pytest.raises(ValidationError):
            CameraImage(np.full((2, 2), np.nan), np.zeros((2, 2)), np.zeros((2, 2)))

    def test_empty_rejected(self):
        with pytest.raises(ValidationError):
            CameraImage(np.zeros((0, 2)), np.zeros((0, 2)), np.zeros((0, 2)))

    def test_planes_are_copied_and_readonly(self):
        a = np.zeros((2, 2))
        img = CameraImage(a, a, a)
        a[0, 0] = 5
        assert img.i0[0, 0] == 0
        with pytest.raises(ValueError):
            img.i0[0, 0] = 1

    def test_values_not_clipped(self):
        img = CameraImage(*px(1.5, -0.2, 0.3))
        assert triple(img) == (1.5, -0.2, 0.3)

    def test_shape_accessors(self):
        img = CameraImage(*np.zeros((3, 4, 7)))
        assert (img.height, img.width) == (4, 7)


class TestStokes:
    @pytest.mark.parametrize("cam,stokes", [
        ((0.3, 0.3, 0.3), (0.6, 0.0, 0.0)),
        ((1.0, 0.5, 0.0), (1.0, 1.0, 0.0)),
        ((0.0, 0.5, 1.0), (1.0, -1.0, 0.0)),
    ])
    def test_examples(self, cam, stokes):
        s = stokes_from_camera(CameraImage(*px(*cam)))
        assert triple(s) == pytest.approx(stokes, abs=1e-15)
        back = camera_from_stokes(StokesImage(*px(*stokes)))
        assert triple(back) == pytest.approx(cam, abs=1e-15)

    @given(planes)
    def test_roundtrip(self, a):
        s = StokesImage(*a)
        assert np.abs(stokes_from_camera(camera_from_stokes(s)).as_array() - a).max() < 1e-12
        img = CameraImage(*a)
        assert np.abs(camera_from_stokes(stokes_from_camera(img)).as_array() - a).max() < 1e-12

    @given(arrays(np.float64, (3, 3, 3), elements=st.floats(0, 1)))
    def test_in_range_bounds(self, a):
        s = stokes_from_camera(CameraImage(*a))
        assert np.all((s.s0 >= 0) & (s.s0 <= 2))
        assert np.all(np.abs(s.s1) <= s.s0 + 1e-15)
        assert np.all(np.abs(s.s2) <= 2)

    def test_consistent_i45_gives_zero_s2(self, rng):
        i0, i90 = rng.uniform(0, 1, (2, 8, 8))
        s = stokes_from_camera(CameraImage(i0, (i0 + i90) / 2, i90))
        assert np.abs(s.s2).max() < 1e-15


class TestDop:
    @pytest.mark.parametrize("s,dop", [
        ((1, 1, 0), 1.0), ((0.8, 0, 0), 0.0), ((1, 0.6, 0.8), 1.0),
    ])
    def test_examples(self, s, dop):
        d, mask = compute_dop(StokesImage(*px(*s)))
        assert d[0, 0] == pytest.approx(dop, abs=1e-15) and not mask[0, 0]

    def test_masked_at_zero_intensity(self):
        d, mask = compute_dop(StokesImage(*px(0, 0.1, 0)))
        assert mask[0, 0] and d[0, 0] == 0.0

    def test_not_clamped(self):
        d, _ = compute_dop(StokesImage(*px(0.5, 1, 0)))
        assert d[0, 0] == pytest.approx(2.0)

    def test_bad_eps(self):
        with pytest.raises(ValidationError):
            compute_dop(StokesImage(*px(1, 0, 0)), eps=0)

    @given(arrays(np.float64, (3, 3, 3), elements=st.floats(0.01, 1)),
           st.floats(0.1, 10))
    def test_scale_invariant(self, a, k):
        d1, _ = compute_dop(stokes_from_camera(CameraImage(*a)))
        d2, _ = compute_dop(stokes_from_camera(CameraImage(*(k * a))))
        assert np.allclose(d1, d2, atol=1e-10, rtol=0)


class TestAop:
    @pytest.mark.parametrize("s1,s2,aop", [
        (1, 0, 0.0), (0, 1, np.pi / 4), (-1, 0, np.pi / 2), (0, -1, -np.pi / 4),
        (-1, -1e-300, np.pi / 2),
    ])
    def test_examples(self, s1, s2, aop):
        a, mask = compute_aop(StokesImage(*px(1, s1, s2)))
        assert a[0, 0] == pytest.approx(aop, abs=1e-15) and not mask[0, 0]

    def test_degenerate_masked(self):
        a, mask = compute_aop(StokesImage(*px(1, 0, 0)))
        assert mask[0, 0]

    @given(planes, st.floats(0.01, 100))
    def test_range_and_scale_invariance(self, a, k):
        s = StokesImage(np.abs(a[0]) + 1, a[1], a[2])
        aop, mask = compute_aop(s)
        assert np.all((aop > -np.pi / 2) & (aop <= np.pi / 2))
        aop2, _ = compute_aop(StokesImage(s.s0, k * s.s1, k * s.s2))
        # values near the fold at -pi/2 may land on either end of the period
        diff = np.angle(np.exp(2j * (aop - aop2))) / 2
        assert np.all(np.abs(diff[~mask]) < 1e-9)

    def test_maps_bundle(self):
        m = polarization_maps(StokesImage(*px(1, 0.6, 0.8)))
        assert m.dop[0, 0] == pytest.approx(1.0)
        assert m.aop[0, 0] == pytest.approx(0.5 * np.arctan2(0.8, 0.6))


class TestTransform:
    def test_identity(self, rng):
        img = random_image(rng)
        out = apply_transform(ChannelTransform(np.eye(3)), img)
        assert np.array_equal(out, img.as_array())

    def test_stokes_on_unpolarized(self):
        p = apply_transform(preset("stokes"), CameraImage(*px(0.4, 0.4, 0.4)))
        assert p[:, 0, 0] == pytest.approx([0.4, 0, 0], abs=1e-15)

    def test_opponent_on_unit(self):
        p = apply_transform(preset("opponent"), CameraImage(*px(1, 0, 0)))
        assert p[:, 0, 0] == pytest.approx([1 / 3, 1 / 2, 1 / 4])

    @pytest.mark.parametrize("name", ["opponent", "stokes", "opt-sigma-0.01", "opt-global"])
    def test_roundtrip(self, name, rng):
        img = random_image(rng, (32, 32))
        t = preset(name)
        back = invert_transform(t, apply_transform(t, img))
        assert np.abs(back.as_array() - img.as_array()).max() < 1e-10

    def test_singular_rejected(self):
        with pytest.raises(SingularTransformError):
            ChannelTransform(np.array([[1, 0, 0], [1, 0, 0], [0, 0, 1.0]]))
        with pytest.raises(ValidationError):
            ChannelTransform(np.array([[1, 0, 0], [1, 1e-9, 0], [0, 0, 1.0]]))

    def test_shape_checked(self):
        with pytest.raises(StructuralError):
            ChannelTransform(np.eye(2))

    @settings(max_examples=25)
    @given(planes, planes, st.floats(-3, 3), st.floats(-3, 3))
    def test_linear(self, x, y, a, b):
        t = preset("opt-global")
        lhs = apply_transform(t, CameraImage(*(a * x + b * y)))
        rhs = a * apply_transform(t, CameraImage(*x)) + b * apply_transform(t, CameraImage(*y))
        assert np.abs(lhs - rhs).max() < 1e-10

    def test_invert_accepts_channel_stack(self, rng):
        t = preset("opponent")
        img = random_image(rng)
        assert isinstance(invert_transform(t, apply_transform(t, img)), CameraImage)

    def test_equality_ignores_name(self):
        assert ChannelTransform(np.eye(3), "a") == ChannelTransform(np.eye(3), "b")
        assert hash(ChannelTransform(np.eye(3))) == hash(ChannelTransform(np.eye(3)))
