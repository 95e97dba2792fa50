"""Dataset manifests and frame averaging.

A manifest is a text file of key-value records separated by blank lines::

    id = street
    i0 = street/i0.pgm
    i45 = street/i45.pgm
    i90 = street/i90.pgm
    truth_i0 = street/clean_i0.npy
    truth_i45 = street/clean_i45.npy
    truth_i90 = street/clean_i90.npy
    sigma = 0.05

Only ``id`` and the three component paths are required. Relative paths are
taken relative to the manifest's directory; ``#`` starts a comment.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .exceptions import (
    DimensionMismatchError,
    ImageIOError,
    MissingFileError,
    StructuralError,
    ValidationError,
)
from .fileio import COMPONENTS, TripleEntry, load_triple
from .polar import CameraImage

__all__ = [
    "DatasetManifest",
    "read_manifest",
    "write_manifest",
    "average_frames",
]

_TRUTH_KEYS = tuple(f"truth_{c}" for c in COMPONENTS)
_KNOWN = {"id", "sigma", *COMPONENTS, *_TRUTH_KEYS}


@dataclass(frozen=True)
class DatasetManifest:
    entries: tuple
    root: str = "."

    def __post_init__(self):
        entries = tuple(self.entries)
        ids = [e.id for e in entries]
        dup = {i for i in ids if ids.count(i) > 1}
        if dup:
            raise ValidationError(f"duplicate manifest ids: {sorted(dup)}")
        object.__setattr__(self, "entries", entries)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def ids(self):
        return [e.id for e in self.entries]

    def load(self, entry):
        """``(noisy, truth or None)`` for one entry."""
        img = load_triple(entry)
        truth = load_triple(entry.truth) if entry.truth else None
        if truth is not None and truth.shape != img.shape:
            raise DimensionMismatchError(
                f"entry {entry.id!r}: truth {truth.shape} and image {img.shape} differ in size"
            )
        return img, truth

    def validate(self):
        """Check that every referenced file exists and decodes consistently."""
        for e in self.entries:
            self.load(e)


def _parse_records(text, path):
    records, cur = [], {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            if cur:
                records.append(cur)
                cur = {}
            continue
        if "=" not in line:
            raise ValidationError(f"{path}:{n}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _KNOWN:
            raise ValidationError(f"{path}:{n}: unknown key {key!r}")
        if key == "id" and cur:
            records.append(cur)
            cur = {}
        if key in cur:
            raise ValidationError(f"{path}:{n}: repeated key {key!r}")
        cur[key] = value
    if cur:
        records.append(cur)
    return records


def read_manifest(path) -> DatasetManifest:
    path = os.fspath(path)
    if not os.path.isfile(path):
        raise MissingFileError(f"no such manifest: {path}")
    try:
        with open(path) as f:
            text = f.read()
    except OSError as e:
        raise ImageIOError(f"cannot read {path}: {e}") from e
    root = os.path.dirname(os.path.abspath(path))
    entries = []
    for rec in _parse_records(text, path):
        missing = [k for k in ("id", *COMPONENTS) if k not in rec]
        if missing:
            raise ValidationError(f"{path}: record {rec.get('id', '?')!r} lacks {missing}")
        given = [k for k in _TRUTH_KEYS if k in rec]
        if given and len(given) != 3:
            raise ValidationError(f"{path}: record {rec['id']!r} needs all three truth paths")
        resolve = lambda p: p if os.path.isabs(p) else os.path.join(root, p)  # noqa: E731
        entries.append(TripleEntry(
            id=rec["id"],
            paths=tuple(resolve(rec[c]) for c in COMPONENTS),
            truth=tuple(resolve(rec[k]) for k in _TRUTH_KEYS) if given else None,
            sigma=float(rec["sigma"]) if "sigma" in rec else None,
        ))
    return DatasetManifest(tuple(entries), root)


def write_manifest(path, entries):
    """Write entries with paths relative to the manifest's directory."""
    path = os.fspath(path)
    root = os.path.dirname(os.path.abspath(path))
    rel = lambda p: os.path.relpath(os.path.abspath(p), root)  # noqa: E731
    blocks = []
    for e in entries:
        lines = [f"id = {e.id}"]
        lines += [f"{c} = {rel(p)}" for c, p in zip(COMPONENTS, e.paths)]
        if e.truth:
            lines += [f"{k} = {rel(p)}" for k, p in zip(_TRUTH_KEYS, e.truth)]
        if e.sigma is not None:
            lines.append(f"sigma = {e.sigma!r}")
        blocks.append("\n".join(lines))
    with open(path, "w") as f:
        f.write("\n\n".join(blocks) + "\n")
    return DatasetManifest(tuple(entries), root)


def average_frames(frames) -> CameraImage:
    """Per-pixel mean of aligned frames, plane by plane.

    Averaging k frames with independent noise divides the noise std by
    sqrt(k), which is how low-noise references are built from a burst.
    """
    frames = list(frames)
    if not frames:
        raise ValidationError("average_frames needs at least one frame")
    shape = frames[0].shape
    for k, f in enumerate(frames):
        if f.shape != shape:
            raise StructuralError(f"frame {k} is {f.shape}, frame 0 is {shape}")
    stack = np.stack([f.as_array() for f in frames])
    return CameraImage.from_array(stack.mean(axis=0))
