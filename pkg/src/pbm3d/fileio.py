"""Reading and writing image planes and camera-component triples.

Supported plane formats:

* ``npy``: numpy float64 arrays, lossless.
* ``pfm``: single-channel portable float map, 32-bit floats.
* ``pgm8`` / ``pgm16``: binary portable graymap with 8 or 16 bits.

Integer samples are divided by the file's maximum value on reading, which
is ``2**bits - 1`` for files this module writes.
The reader recognises the format from the file's magic bytes, not its name.
"""

from __future__ import annotations

import os
import sys
from dataclasses import dataclass

import numpy as np

from .exceptions import (
    DimensionMismatchError,
    ImageIOError,
    MissingFileError,
    RangeError,
    UnsupportedFormatError,
    ValidationError,
)
from .polar import CameraImage

__all__ = [
    "FORMATS",
    "read_plane",
    "write_plane",
    "TripleEntry",
    "triple_paths",
    "load_triple",
    "save_triple",
]

FORMATS = {"npy": ".npy", "pfm": ".pfm", "pgm8": ".pgm", "pgm16": ".pgm"}
COMPONENTS = ("i0", "i45", "i90")


def _read_token(f):
    tok = b""
    while True:
        c = f.read(1)
        if not c:
            raise ImageIOError(f"{f.name}: truncated header")
        if c == b"#" and not tok:
            f.readline()
            continue
        if c.isspace():
            if tok:
                return tok
            continue
        tok += c


def _read_pgm(f, magic):
    w, h, maxval = (int(_read_token(f)) for _ in range(3))
    if not 0 < maxval < 65536:
        raise UnsupportedFormatError(f"{f.name}: unsupported maxval {maxval}")
    if magic == b"P2":
        data = np.array(f.read().split(), dtype=np.float64)
    else:
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        data = np.frombuffer(f.read(w * h * dtype.itemsize), dtype=dtype)
    if data.size != w * h:
        raise ImageIOError(f"{f.name}: expected {w * h} samples, found {data.size}")
    return data.reshape(h, w).astype(np.float64) / maxval


def _read_pfm(f):
    w, h = (int(v) for v in f.readline().split())
    scale = float(f.readline())
    dtype = np.dtype("<f4") if scale < 0 else np.dtype(">f4")
    data = np.frombuffer(f.read(w * h * 4), dtype=dtype)
    if data.size != w * h:
        raise ImageIOError(f"{f.name}: expected {w * h} samples, found {data.size}")
    # rows are stored bottom to top
    return np.flipud(data.reshape(h, w)).astype(np.float64)


def read_plane(path) -> np.ndarray:
    """Decode one plane to a float64 array."""
    path = os.fspath(path)
    if not os.path.isfile(path):
        raise MissingFileError(f"no such file: {path}")
    try:
        with open(path, "rb") as f:
            head = f.read(6)
            if head.startswith(b"\x93NUMPY"):
                f.seek(0)
                arr = np.load(f, allow_pickle=False)
                if arr.ndim != 2 or arr.dtype.kind not in "fiu":
                    raise UnsupportedFormatError(f"{path}: expected a 2-D numeric array")
                return arr.astype(np.float64)
            f.seek(2)
            magic = head[:2]
            if magic == b"Pf":
                f.readline()
                return _read_pfm(f)
            if magic in (b"P5", b"P2"):
                return _read_pgm(f, magic)
    except (ValueError, EOFError) as e:
        raise ImageIOError(f"{path}: malformed file ({e})") from e
    raise UnsupportedFormatError(f"{path}: not a npy, pfm or pgm file")


def _check_range(plane, clip, path):
    if clip:
        return np.clip(plane, 0.0, 1.0)
    if plane.min() < 0.0 or plane.max() > 1.0:
        raise RangeError(
            f"{path}: values span [{plane.min():.4g}, {plane.max():.4g}], outside [0, 1]; "
            "use clip=True to clip"
        )
    return plane


def write_plane(path, plane, fmt="npy", clip=False):
    """Encode one plane. Integer formats need values in [0, 1] unless ``clip``."""
    if fmt not in FORMATS:
        raise UnsupportedFormatError(f"unknown format {fmt!r}; expected one of {list(FORMATS)}")
    plane = np.asarray(plane, dtype=np.float64)
    if plane.ndim != 2:
        raise ValidationError(f"plane must be 2-D, got shape {plane.shape}")
    path = os.fspath(path)
    h, w = plane.shape
    try:
        if fmt == "npy":
            with open(path, "wb") as f:
                np.save(f, plane, allow_pickle=False)
        elif fmt == "pfm":
            scale = -1.0 if sys.byteorder == "little" else 1.0
            with open(path, "wb") as f:
                f.write(b"Pf\n%d %d\n%s\n" % (w, h, str(scale).encode()))
                f.write(np.flipud(plane).astype(np.float32).tobytes())
        else:
            bits = 8 if fmt == "pgm8" else 16
            maxval = 2**bits - 1
            q = np.rint(_check_range(plane, clip, path) * maxval)
            dtype = np.dtype("u1") if bits == 8 else np.dtype(">u2")
            with open(path, "wb") as f:
                f.write(b"P5\n%d %d\n%d\n" % (w, h, maxval))
                f.write(q.astype(dtype).tobytes())
    except OSError as e:
        raise ImageIOError(f"cannot write {path}: {e}") from e


@dataclass(frozen=True)
class TripleEntry:
    """File locations of one camera-component triple.

    ``truth`` optionally names a noise-free reference triple and ``sigma``
    the known noise level.
    """

    id: str
    paths: tuple
    truth: tuple | None = None
    sigma: float | None = None

    def __post_init__(self):
        for name in ("paths", "truth"):
            v = getattr(self, name)
            if v is None:
                continue
            if len(v) != 3:
                raise ValidationError(f"{name} must list three files (i0, i45, i90)")
            object.__setattr__(self, name, tuple(os.fspath(p) for p in v))
        if self.sigma is not None and not self.sigma >= 0:
            raise ValidationError(f"sigma must be >= 0, got {self.sigma}")


def triple_paths(stem, fmt="npy"):
    """``<stem>_i0<ext>``, ``<stem>_i45<ext>`` and ``<stem>_i90<ext>``."""
    ext = FORMATS[fmt] if fmt in FORMATS else fmt
    return tuple(f"{os.fspath(stem)}_{c}{ext}" for c in COMPONENTS)


def _entry_paths(entry):
    if isinstance(entry, TripleEntry):
        return entry.paths
    if isinstance(entry, (str, os.PathLike)):
        s = os.fspath(entry)
        if "," in s:
            return tuple(p.strip() for p in s.split(","))
        for ext in dict.fromkeys(FORMATS.values()):
            paths = triple_paths(s, ext)
            if all(os.path.isfile(p) for p in paths):
                return paths
        return triple_paths(s, "npy")
    return tuple(entry)


def load_triple(entry) -> CameraImage:
    """Load ``(I0, I45, I90)`` from a :class:`TripleEntry`, three paths or a stem.

    A stem resolves to the first extension for which all three component
    files exist. A comma-separated string is read as three paths.
    """
    paths = _entry_paths(entry)
    if len(paths) != 3:
        raise ValidationError(f"a triple needs three files, got {len(paths)}")
    planes = [read_plane(p) for p in paths]
    shapes = {p.shape for p in planes}
    if len(shapes) != 1:
        detail = ", ".join(f"{os.path.basename(p)}: {a.shape}" for p, a in zip(paths, planes))
        raise DimensionMismatchError(f"component files differ in size ({detail})")
    return CameraImage(*planes)


def save_triple(img: CameraImage, target, fmt="npy", clip=False):
    """Write the three components; returns the paths written.

    ``target`` is a stem (see :func:`triple_paths`), three paths or a
    :class:`TripleEntry`. The range check covers all three planes before
    any file is written.
    """
    if fmt not in FORMATS:
        raise UnsupportedFormatError(f"unknown format {fmt!r}; expected one of {list(FORMATS)}")
    if isinstance(target, TripleEntry):
        paths = target.paths
    elif isinstance(target, (str, os.PathLike)):
        paths = triple_paths(target, fmt)
    else:
        paths = tuple(os.fspath(p) for p in target)
    if len(paths) != 3:
        raise ValidationError(f"a triple needs three files, got {len(paths)}")
    planes = list(img)
    if fmt.startswith("pgm"):
        planes = [_check_range(p, clip, path) for p, path in zip(planes, paths)]
    for p, path in zip(planes, paths):
        d = os.path.dirname(path)
        if d:
            os.makedirs(d, exist_ok=True)
        write_plane(path, p, fmt, clip)
    return paths
