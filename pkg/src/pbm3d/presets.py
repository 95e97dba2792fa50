"""Named channel transforms and the row-normalization rule.

Matrices are stored exactly as published, digit for digit. Some published
rows do not have unit L1 norm: three-decimal rounding leaves rows summing to
0.999, and the second row of the all-sigma optimum has norm 1.02. Use
:func:`normalization_report` to see these and ``renormalize=True`` to get a
normalized copy.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .exceptions import ValidationError
from .polar import ChannelTransform

__all__ = [
    "PRESETS",
    "TABLE_SIGMAS",
    "preset",
    "preset_names",
    "normalize_rows",
    "RowNormIssue",
    "normalization_report",
    "read_matrix",
    "write_matrix",
    "resolve_transform",
]

_STOKES = ((1 / 2, 0, 1 / 2), (1 / 2, 0, -1 / 2), (-1 / 4, 1 / 2, -1 / 4))
_OPPONENT = ((1 / 3, 1 / 3, 1 / 3), (1 / 2, 0, -1 / 2), (1 / 4, -1 / 2, 1 / 4))
_OPT_GLOBAL = (
    (0.3133, 0.3833, 0.3033),
    (0.4800, 0.0300, -0.5100),
    (0.2600, -0.5200, 0.2200),
)

# optimum per noise level, found by pattern search on outdoor scenes
_OPT_BY_SIGMA = {
    "0.01": ((0.323, 0.363, 0.313), (0.500, -0.210, -0.290), (0.150, -0.500, 0.350)),
    "0.026": ((0.323, 0.363, 0.313), (0.500, -0.210, -0.290), (0.150, -0.500, 0.350)),
    "0.041": ((0.323, 0.363, 0.313), (0.500, -0.230, -0.270), (0.160, -0.500, 0.340)),
    "0.057": ((0.323, 0.363, 0.313), (0.500, -0.210, -0.290), (0.150, -0.500, 0.350)),
    "0.072": ((0.323, 0.363, 0.313), (0.510, -0.010, -0.480), (0.250, -0.510, 0.240)),
    "0.088": ((0.323, 0.363, 0.313), (0.300, 0.210, -0.490), (0.240, -0.520, 0.240)),
    "0.1": ((0.323, 0.373, 0.303), (0.420, 0.080, -0.500), (0.250, -0.510, 0.240)),
    "0.12": ((0.343, 0.353, 0.303), (0.480, -0.120, -0.400), (0.130, -0.520, 0.350)),
    "0.13": ((0.333, 0.333, 0.333), (0.480, -0.230, -0.290), (0.040, -0.530, 0.430)),
    "0.15": ((0.343, 0.353, 0.303), (0.480, -0.120, -0.400), (0.130, -0.520, 0.350)),
}

TABLE_SIGMAS = tuple(float(s) for s in _OPT_BY_SIGMA)

PRESETS = {
    "identity": ((1.0, 0, 0), (0, 1.0, 0), (0, 0, 1.0)),
    "stokes": _STOKES,
    "opponent": _OPPONENT,
    "opt-global": _OPT_GLOBAL,
}
PRESETS.update({f"opt-sigma-{k}": v for k, v in _OPT_BY_SIGMA.items()})

# rows of three-decimal published values can miss 1 by up to 1.5e-3
ROUNDING_SLACK = 1.5e-3


def preset_names():
    return list(PRESETS)


def _canonical(name):
    if name in PRESETS:
        return name
    if name.startswith("opt-sigma-"):
        try:
            value = float(name[len("opt-sigma-"):])
        except ValueError:
            value = None
        for key in _OPT_BY_SIGMA:
            if value is not None and float(key) == value:
                return f"opt-sigma-{key}"
    raise KeyError(f"unknown preset {name!r}; known presets: {', '.join(PRESETS)}")


def preset(name: str, renormalize: bool = False) -> ChannelTransform:
    """Look up a named transform.

    ``opt-sigma-<v>`` accepts any spelling of the ten tabulated noise levels
    (``opt-sigma-0.010`` is ``opt-sigma-0.01``).
    """
    key = _canonical(name)
    t = ChannelTransform(np.array(PRESETS[key], dtype=np.float64), name=key)
    if renormalize:
        t = normalize_rows(t.m, name=key)
    return t


def normalize_rows(m, name="normalized") -> ChannelTransform:
    """Scale each row to unit L1 norm, keeping every entry's sign."""
    m = np.array(getattr(m, "m", m), dtype=np.float64)
    if m.shape != (3, 3):
        raise ValidationError(f"expected a 3x3 matrix, got {m.shape}")
    l1 = np.abs(m).sum(axis=1)
    if np.any(l1 == 0):
        raise ValidationError("cannot normalize an all-zero row")
    return ChannelTransform(m / l1[:, None], name=name)


@dataclass(frozen=True)
class RowNormIssue:
    row: int  # 0-based
    l1: float
    kind: str  # "rounding" or "discrepancy"

    def __str__(self):
        return f"row {self.row + 1} of 3: |a|+|b|+|c| = {self.l1:.6g} ({self.kind})"


def normalization_report(m, tol=1e-9):
    """Rows whose L1 norm differs from 1 by more than ``tol``.

    Deviations within the rounding slack of three-decimal values are
    labelled ``"rounding"``; anything larger is a ``"discrepancy"``.
    """
    m = np.asarray(getattr(m, "m", m), dtype=np.float64)
    issues = []
    for i, l1 in enumerate(np.abs(m).sum(axis=1)):
        dev = abs(l1 - 1.0)
        if dev > tol:
            kind = "rounding" if dev <= ROUNDING_SLACK else "discrepancy"
            issues.append(RowNormIssue(i, float(l1), kind))
    return issues


def read_matrix(path) -> np.ndarray:
    """Read a matrix file: three lines of three decimal numbers."""
    rows = []
    with open(path) as f:
        for line in f:
            line = line.split("#", 1)[0].strip()
            if line:
                rows.append([float(v) for v in line.replace(",", " ").split()])
    if len(rows) != 3 or any(len(r) != 3 for r in rows):
        raise ValidationError(f"{path}: expected 3 rows of 3 numbers")
    m = np.array(rows, dtype=np.float64)
    if m.shape != (3, 3):
        raise ValidationError(f"{path}: expected 3 rows of 3 numbers, got shape {m.shape}")
    return m


def write_matrix(path, m):
    m = np.asarray(getattr(m, "m", m), dtype=np.float64)
    with open(path, "w") as f:
        for row in m:
            f.write(" ".join(repr(float(v)) for v in row) + "\n")


def resolve_transform(spec, renormalize=False) -> ChannelTransform:
    """Turn a preset name, matrix file path, array or transform into a transform."""
    if isinstance(spec, ChannelTransform):
        return spec
    if isinstance(spec, str):
        try:
            return preset(spec, renormalize=renormalize)
        except KeyError:
            if os.path.exists(spec):
                t = ChannelTransform(read_matrix(spec), name=os.path.basename(spec))
                return normalize_rows(t.m, t.name) if renormalize else t
            raise
    return ChannelTransform(np.asarray(spec, dtype=np.float64))
