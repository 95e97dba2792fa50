"""Matrices for the separable block and stack transforms."""

from functools import lru_cache

import numpy as np
from scipy.fft import dct
from scipy.linalg import hadamard

from .exceptions import ValidationError

TRANSFORMS_2D = ("dct", "bior1.5")
TRANSFORMS_1D = ("haar", "walsh-hadamard")

# bior1.5 analysis filters (Cohen-Daubechies-Feauveau, 1 vanishing moment
# on synthesis, 5 on analysis), times sqrt(2).
_BIOR15_LO = np.array([3, -3, -22, 22, 128, 128, 22, -22, -3, 3], dtype=np.float64) / 128.0
_BIOR15_HI = np.array([0, 0, 0, 0, -1, 1, 0, 0, 0, 0], dtype=np.float64)


def _is_pow2(n):
    return n >= 1 and (n & (n - 1)) == 0


def dct_matrix(n):
    """Orthonormal DCT-II matrix ``C`` with ``C @ x == dct(x, norm='ortho')``."""
    return dct(np.eye(n), norm="ortho", axis=0)


def _periodic_analysis(x, flt):
    n = len(x)
    k = len(flt)
    out = np.zeros(n // 2)
    for i in range(n // 2):
        for j in range(k):
            out[i] += flt[j] * x[(2 * i + j - k // 2 + 1) % n]
    return out / np.sqrt(2.0)


def bior15_matrix(n):
    """Full-depth periodized bior1.5 decomposition with unit-norm rows."""
    if not _is_pow2(n) or n < 2:
        raise ValidationError(f"bior1.5 needs a power-of-two block size, got {n}")
    rows = []
    for e in np.eye(n):
        approx = e
        details = []
        while len(approx) > 1:
            details.insert(0, _periodic_analysis(approx, _BIOR15_HI))
            approx = _periodic_analysis(approx, _BIOR15_LO)
        rows.append(np.concatenate([approx] + details))
    m = np.array(rows).T
    return m / np.linalg.norm(m, axis=1, keepdims=True)


def haar_matrix(n):
    """Orthonormal Haar matrix for a power-of-two length ``n``."""
    if not _is_pow2(n):
        raise ValidationError(f"Haar transform needs a power-of-two length, got {n}")
    h = np.ones((1, 1))
    while h.shape[0] < n:
        m = h.shape[0]
        top = np.kron(h, [1.0, 1.0])
        bottom = np.kron(np.eye(m), [1.0, -1.0])
        h = np.vstack([top, bottom]) / np.sqrt(2.0)
    return h


def walsh_hadamard_matrix(n):
    if not _is_pow2(n):
        raise ValidationError(f"Walsh-Hadamard transform needs a power-of-two length, got {n}")
    return hadamard(n).astype(np.float64) / np.sqrt(n)


@lru_cache(maxsize=None)
def block_transform(name, n):
    """``(forward, inverse)`` pair for the 2-D block transform."""
    if name == "dct":
        fwd = dct_matrix(n)
        inv = fwd.T.copy()
    elif name == "bior1.5":
        fwd = bior15_matrix(n)
        inv = np.linalg.inv(fwd)
    else:
        raise ValidationError(f"unknown 2-D transform {name!r}; expected one of {TRANSFORMS_2D}")
    return fwd, inv


@lru_cache(maxsize=None)
def stack_transforms(name, max_n):
    """Forward and inverse 1-D matrices for every power of two up to ``max_n``.

    Returned as two ``(levels, max_n, max_n)`` arrays; level ``k`` holds the
    ``2**k``-point transform in its top-left corner.
    """
    if name == "haar":
        make = haar_matrix
    elif name == "walsh-hadamard":
        make = walsh_hadamard_matrix
    else:
        raise ValidationError(f"unknown 1-D transform {name!r}; expected one of {TRANSFORMS_1D}")
    levels = int(np.log2(max_n)) + 1
    fwd = np.zeros((levels, max_n, max_n))
    inv = np.zeros((levels, max_n, max_n))
    for k in range(levels):
        n = 1 << k
        m = make(n)
        fwd[k, :n, :n] = m
        inv[k, :n, :n] = m.T
    return fwd, inv


@lru_cache(maxsize=None)
def kaiser_window(n, beta):
    if beta <= 0:
        return np.ones((n, n))
    w = np.kaiser(n, beta)
    return np.outer(w, w)
