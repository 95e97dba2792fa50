import numpy as np
import pytest

from pbm3d.exceptions import ValidationError
from pbm3d.fileio import read_plane
from pbm3d.polar import CameraImage, StokesImage, camera_from_stokes
from pbm3d.render import aop_image, dop_image, render_maps, write_ppm


def test_dop_scale():
    g = dop_image(np.array([0.0, 0.25, 0.5, 0.9]))
    assert g.tolist() == [0.0, 0.5, 1.0, 1.0]
    with pytest.raises(ValidationError):
        dop_image(np.zeros(2), white=0)


def test_aop_cyclic():
    rgb = aop_image(np.array([-np.pi / 2, np.pi / 2, 0.0]))
    assert np.allclose(rgb[0], rgb[1])
    assert not np.allclose(rgb[0], rgb[2])
    assert np.allclose(rgb[0], [1, 0, 0])
    assert np.allclose(rgb.max(axis=-1), 1.0)


def test_aop_continuous():
    a = np.linspace(-np.pi / 2, np.pi / 2, 721)
    rgb = aop_image(a)
    assert np.abs(np.diff(rgb, axis=0)).max() < 0.02


def test_aop_mask_and_value():
    rgb = aop_image(np.zeros(3), mask=np.array([True, False, False]), value=np.array([1, 1, 0.5]))
    assert rgb[0].tolist() == [0, 0, 0]
    assert np.allclose(rgb[2], rgb[1] / 2)


def test_write_ppm(tmp_path):
    rgb = np.zeros((2, 3, 3))
    rgb[0, 0] = (1, 0.5, 0)
    write_ppm(tmp_path / "a.ppm", rgb)
    raw = (tmp_path / "a.ppm").read_bytes()
    assert raw.startswith(b"P6\n3 2\n255\n")
    assert list(raw[11:14]) == [255, 128, 0]
    with pytest.raises(ValidationError):
        write_ppm(tmp_path / "b.ppm", np.zeros((2, 3)))


def test_render_maps(tmp_path):
    s0 = np.full((4, 4), 0.8)
    s1 = np.zeros((4, 4))
    s1[:, 2:] = 0.2
    img = camera_from_stokes(StokesImage(s0, s1, np.zeros((4, 4))))
    grey, rgb = render_maps(img, tmp_path / "d.pgm", tmp_path / "a.ppm")
    assert np.allclose(grey[:, :2], 0) and np.allclose(grey[:, 2:], 0.5)
    assert np.allclose(read_plane(tmp_path / "d.pgm"), np.rint(grey * 255) / 255)
    # no polarization means no defined angle: rendered black
    assert np.all(rgb[:, :2] == 0) and np.all(rgb[:, 2:].max(axis=-1) > 0)
    assert (tmp_path / "a.ppm").stat().st_size == len(b"P6\n4 4\n255\n") + 48


def test_render_dark_pixels():
    img = CameraImage(*np.zeros((3, 2, 2)))
    grey, rgb = render_maps(img)
    assert np.all(grey == 0) and np.all(rgb == 0)
