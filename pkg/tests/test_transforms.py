import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.fft import dctn

from pbm3d import _kernels
from pbm3d._transforms import (
    bior15_matrix,
    block_transform,
    dct_matrix,
    haar_matrix,
    kaiser_window,
    walsh_hadamard_matrix,
)
from pbm3d.engine import block_spectra
from pbm3d.exceptions import ValidationError

POW2 = [1, 2, 4, 8, 16, 32]


def test_dct_matches_scipy():
    x = np.random.default_rng(0).standard_normal((8, 8))
    c = dct_matrix(8)
    assert np.allclose(c @ x @ c.T, dctn(x, norm="ortho"), atol=1e-13)


@pytest.mark.parametrize("make", [dct_matrix, haar_matrix, walsh_hadamard_matrix])
@pytest.mark.parametrize("n", [2, 4, 8, 16])
def test_orthonormal(make, n):
    m = make(n)
    assert np.allclose(m @ m.T, np.eye(n), atol=1e-13)


@pytest.mark.filterwarnings("ignore:Level value")
def test_bior15_matches_pywavelets():
    pywt = pytest.importorskip("pywt")
    n = 8
    ref = np.array([
        np.concatenate(pywt.wavedec(e, "bior1.5", mode="periodization", level=3)) for e in np.eye(n)
    ]).T
    ref /= np.linalg.norm(ref, axis=1, keepdims=True)
    # detail filters may differ by sign, which thresholding ignores
    assert np.allclose(np.abs(bior15_matrix(n)), np.abs(ref), atol=1e-12)


def test_bior15_invertible():
    fwd, inv = block_transform("bior1.5", 8)
    assert np.allclose(inv @ fwd, np.eye(8), atol=1e-12)
    assert np.allclose(np.linalg.norm(fwd, axis=1), 1.0)


def test_bad_sizes():
    with pytest.raises(ValidationError):
        haar_matrix(6)
    with pytest.raises(ValidationError):
        bior15_matrix(12)
    with pytest.raises(ValidationError):
        block_transform("wht", 8)


def test_kaiser():
    w = kaiser_window(8, 2.0)
    assert w.shape == (8, 8) and np.allclose(w, w.T) and w.min() > 0
    assert np.array_equal(kaiser_window(8, 0.0), np.ones((8, 8)))


@pytest.mark.parametrize("kind,make", [(_kernels.HAAR, haar_matrix),
                                       (_kernels.WALSH_HADAMARD, walsh_hadamard_matrix)])
@pytest.mark.parametrize("n", POW2)
def test_stack_butterfly_matches_matrix(kind, make, n):
    x = np.random.default_rng(n).standard_normal((n, 5))
    y = x.copy()
    _kernels.stack_forward(y, kind)
    assert np.allclose(y, make(n) @ x, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(POW2), st.sampled_from([_kernels.HAAR, _kernels.WALSH_HADAMARD]),
       st.data())
def test_stack_parseval_roundtrip(n, kind, data):
    x = data.draw(arrays(np.float64, (n, 64), elements=st.floats(-1e3, 1e3)))
    y = x.copy()
    _kernels.stack_forward(y, kind)
    assert np.isclose(np.sum(y**2), np.sum(x**2), rtol=1e-10, atol=1e-9)
    z = x.copy()
    _kernels.stack_roundtrip(z, kind)
    assert np.abs(z - x).max() <= 1e-10 * max(1.0, np.abs(x).max())


@pytest.mark.parametrize("name", ["dct", "bior1.5"])
def test_3d_roundtrip(name):
    rng = np.random.default_rng(5)
    group = rng.standard_normal((16, 8, 8))
    fwd, inv = block_transform(name, 8)
    spec = (fwd @ group @ fwd.T).reshape(16, 64)
    _kernels.stack_roundtrip(spec, _kernels.HAAR)
    back = inv @ spec.reshape(16, 8, 8) @ inv.T
    assert np.abs(back - group).max() < 1e-10


def test_block_spectra_matches_direct():
    rng = np.random.default_rng(2)
    plane = rng.standard_normal((20, 17))
    a = dct_matrix(8)
    s = block_spectra(plane, a)
    assert s.shape == (13, 10, 64)
    for r, c in [(0, 0), (12, 9), (5, 3)]:
        ref = a @ plane[r:r + 8, c:c + 8] @ a.T
        assert np.allclose(s[r, c], ref.ravel(), atol=1e-13)
