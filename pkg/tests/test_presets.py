import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from pbm3d.exceptions import ValidationError
from pbm3d.polar import ChannelTransform
from pbm3d.presets import (
    PRESETS,
    TABLE_SIGMAS,
    normalization_report,
    normalize_rows,
    preset,
    read_matrix,
    resolve_transform,
    write_matrix,
)


def test_named_presets():
    assert np.array_equal(preset("stokes").m, [[0.5, 0, 0.5], [0.5, 0, -0.5], [-0.25, 0.5, -0.25]])
    assert np.array_equal(preset("opponent").m,
                          [[1 / 3, 1 / 3, 1 / 3], [0.5, 0, -0.5], [0.25, -0.5, 0.25]])
    assert np.array_equal(preset("opt-global").m,
                          [[0.3133, 0.3833, 0.3033], [0.48, 0.03, -0.51], [0.26, -0.52, 0.22]])
    assert np.array_equal(preset("opt-sigma-0.01").m,
                          [[0.323, 0.363, 0.313], [0.5, -0.21, -0.29], [0.15, -0.5, 0.35]])


def test_ten_table_entries():
    assert TABLE_SIGMAS == (0.01, 0.026, 0.041, 0.057, 0.072, 0.088, 0.1, 0.12, 0.13, 0.15)
    for s in TABLE_SIGMAS:
        assert preset(f"opt-sigma-{s}").m.shape == (3, 3)


def test_alternate_spelling():
    assert preset("opt-sigma-0.010") == preset("opt-sigma-0.01")
    assert preset("opt-sigma-0.10").name == "opt-sigma-0.1"


def test_unknown():
    with pytest.raises(KeyError):
        preset("opt-sigma-0.2")
    with pytest.raises(KeyError):
        preset("yuv")


def test_report_flags_discrepancy():
    issues = normalization_report(preset("opt-global"))
    disc = [i for i in issues if i.kind == "discrepancy"]
    assert len(disc) == 1 and disc[0].row == 1 and disc[0].l1 == pytest.approx(1.02)
    assert "1.02" in str(disc[0])


def test_report_rounding_only_elsewhere():
    for name in PRESETS:
        if name == "opt-global":
            continue
        assert all(i.kind == "rounding" for i in normalization_report(preset(name))), name
    assert normalization_report(preset("opponent")) == []
    assert normalization_report(preset("stokes")) == []


def test_renormalized_preset():
    t = preset("opt-global", renormalize=True)
    assert t.is_normalized()
    assert np.allclose(t.m[1], np.array([0.48, 0.03, -0.51]) / 1.02)


@pytest.mark.parametrize("row,expect", [((1, 1, 1), (1 / 3, 1 / 3, 1 / 3)),
                                        ((2, 0, -2), (0.5, 0, -0.5))])
def test_normalize_examples(row, expect):
    m = np.array([row, (0, 1, 0), (0, 0, 1)], dtype=float)
    assert np.allclose(normalize_rows(m).m[0], expect)


def test_normalize_zero_row():
    with pytest.raises(ValidationError):
        normalize_rows(np.array([[0, 0, 0], [0, 1, 0], [0, 0, 1.0]]))


def test_normalize_keeps_opponent():
    assert np.allclose(normalize_rows(preset("opponent")).m, preset("opponent").m, atol=1e-15)


@given(arrays(np.float64, (3, 3), elements=st.floats(-5, 5, allow_subnormal=False)).filter(
    lambda m: np.all(np.abs(m).sum(axis=1) > 1e-3) and np.linalg.cond(m) < 1e5))
def test_normalize_idempotent_sign_preserving(m):
    n1 = normalize_rows(m).m
    n2 = normalize_rows(n1).m
    assert np.allclose(n1, n2, atol=1e-15)
    assert np.array_equal(np.sign(n1), np.sign(m))
    assert np.allclose(np.abs(n1).sum(axis=1), 1.0)


def test_matrix_file_roundtrip(tmp_path):
    t = preset("opt-sigma-0.088")
    p = tmp_path / "m.txt"
    write_matrix(p, t)
    assert np.array_equal(read_matrix(p), t.m)
    assert resolve_transform(str(p)) == t


def test_matrix_file_comments(tmp_path):
    p = tmp_path / "m.txt"
    p.write_text("# opponent\n1 1 1\n0.5, 0, -0.5\n0.25 -0.5 0.25  # last\n")
    assert np.allclose(read_matrix(p)[0], 1)


def test_matrix_file_bad(tmp_path):
    p = tmp_path / "m.txt"
    p.write_text("1 2\n3 4\n")
    with pytest.raises(ValidationError):
        read_matrix(p)


def test_resolve_variants():
    assert resolve_transform("stokes") == preset("stokes")
    assert isinstance(resolve_transform(np.eye(3)), ChannelTransform)
    t = preset("opponent")
    assert resolve_transform(t) is t
    with pytest.raises(KeyError):
        resolve_transform("no-such-thing")
