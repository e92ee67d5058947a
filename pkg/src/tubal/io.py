"""Tensor files, PGM image stacks and run manifests.

``.t3b`` layout (all little-endian)::

    offset 0   4 bytes   magic b"T3B1"
    offset 4   3 x u64   n1, n2, n3
    offset 28  n1*n2*n3 x f64, slice-major, first index fastest
               (value (i, j, k) at position i + n1*j + n1*n2*k)
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .errors import FormatError, InconsistentStack
from .tensor_core import as_tensor3

MAGIC = b"T3B1"
_HEADER = struct.Struct("<4s3Q")


def save_tensor(t, path) -> None:
    """Write ``t`` as ``.t3b`` (atomically)."""
    t = as_tensor3(t)
    payload = _HEADER.pack(MAGIC, *t.shape) + t.astype("<f8").ravel(order="F").tobytes()
    _atomic_write(Path(path), payload)


def load_tensor(path) -> np.ndarray:
    """Read a ``.t3b`` file; a directory is read as a PGM stack."""
    path = Path(path)
    if path.is_dir():
        return load_image_stack(path)
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: file too short for header", offset=len(raw))
    magic, n1, n2, n3 = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}", offset=0)
    if min(n1, n2, n3) < 1:
        raise FormatError(f"{path}: dimensions must be positive, got {(n1, n2, n3)}", offset=4)
    expected = _HEADER.size + 8 * n1 * n2 * n3
    if len(raw) != expected:
        raise FormatError(
            f"{path}: expected {expected} bytes for dims {(n1, n2, n3)}, found {len(raw)}",
            offset=min(len(raw), expected),
        )
    data = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    return data.astype(np.float64).reshape((n1, n2, n3), order="F")


def _pgm_token(raw, pos):
    """Next whitespace-separated header token, skipping '#' comments."""
    n = len(raw)
    while pos < n:
        c = raw[pos : pos + 1]
        if c == b"#":
            while pos < n and raw[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif c.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < n and not raw[pos : pos + 1].isspace() and raw[pos : pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise FormatError("unexpected end of PGM header", offset=pos)
    return raw[start:pos], pos


def read_pgm(path) -> np.ndarray:
    """8-bit grayscale PGM (P5 binary or P2 plain) as a float matrix in [0, 1]."""
    raw = Path(path).read_bytes()
    try:
        magic, pos = _pgm_token(raw, 0)
        fields = []
        for _ in range(3):
            tok, pos = _pgm_token(raw, pos)
            fields.append(int(tok))
    except ValueError as exc:
        raise FormatError(f"{path}: malformed PGM header ({exc})", offset=0) from exc
    width, height, maxval = fields
    if magic not in (b"P5", b"P2"):
        raise FormatError(f"{path}: not a PGM file (magic {magic!r})", offset=0)
    if not 0 < maxval < 256:
        raise FormatError(f"{path}: only 8-bit PGM is supported (maxval {maxval})", offset=pos)
    count = width * height
    if magic == b"P5":
        pos += 1
        if len(raw) - pos < count:
            raise FormatError(f"{path}: truncated pixel data", offset=len(raw))
        pixels = np.frombuffer(raw, dtype=np.uint8, count=count, offset=pos)
    else:
        values = raw[pos:].split()
        if len(values) < count:
            raise FormatError(f"{path}: truncated pixel data", offset=len(raw))
        pixels = np.array([int(v) for v in values[:count]], dtype=np.uint8)
    return pixels.reshape(height, width).astype(np.float64) / 255.0


def write_pgm(img, path) -> None:
    """Write a matrix with values in [0, 1] as binary PGM."""
    img = np.clip(np.rint(np.asarray(img, dtype=np.float64) * 255.0), 0, 255).astype(np.uint8)
    height, width = img.shape
    _atomic_write(Path(path), f"P5\n{width} {height}\n255\n".encode("ascii") + img.tobytes())


def load_image_stack(directory) -> np.ndarray:
    """Stack the ``*.pgm`` files of ``directory`` (sorted by name) along mode 3."""
    files = sorted(Path(directory).glob("*.pgm"))
    if not files:
        raise InconsistentStack(f"{directory}: no .pgm files")
    slices = [read_pgm(f) for f in files]
    shape = slices[0].shape
    for f, s in zip(files, slices):
        if s.shape != shape:
            raise InconsistentStack(f"{f.name} is {s.shape[1]}x{s.shape[0]}, expected {shape[1]}x{shape[0]}")
    return np.stack(slices, axis=2)


def _atomic_write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_text(path, text: str) -> None:
    """Atomic UTF-8 write with LF line endings."""
    _atomic_write(Path(path), text.encode("utf-8"))


def write_json(path, obj) -> None:
    write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")
