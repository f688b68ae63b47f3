"""Field snapshots and PGM previews.

Snapshot layout: one ASCII header line ``NCHHS-FIELD nx ny lx ly t`` then
either ``nx*ny`` little-endian float64 values (row-major, index ``i*ny + j``)
or, in the ASCII variant, one value per line.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = "NCHHS-FIELD"


@dataclass
class FieldSnapshot:
    values: np.ndarray
    lx: float
    ly: float
    t: float

    @property
    def shape(self):
        return self.values.shape


class FieldFormatError(ValueError):
    pass


def _header(values, lx, ly, t) -> str:
    nx, ny = values.shape
    return f"{MAGIC} {nx} {ny} {float(lx)!r} {float(ly)!r} {float(t)!r}\n"


def write_field(path, values: np.ndarray, lx: float, ly: float, t: float, ascii: bool = False) -> Path:
    """Write through ``<path>.partial`` and rename, so readers never see half a file."""
    path = Path(path)
    values = np.asarray(values, dtype=float)
    tmp = path.with_name(path.name + ".partial")
    with open(tmp, "wb") as fh:
        fh.write(_header(values, lx, ly, t).encode("ascii"))
        if ascii:
            fh.write("".join(f"{v!r}\n" for v in values.ravel().tolist()).encode("ascii"))
        else:
            fh.write(values.astype("<f8").tobytes(order="C"))
    os.replace(tmp, path)
    return path


def read_field(path) -> FieldSnapshot:
    data = Path(path).read_bytes()
    nl = data.find(b"\n")
    if nl < 0:
        raise FieldFormatError(f"{path}: missing header line")
    parts = data[:nl].decode("ascii", errors="replace").split()
    if len(parts) != 6 or parts[0] != MAGIC:
        raise FieldFormatError(f"{path}: bad header {data[:nl][:60]!r}")
    try:
        nx, ny = int(parts[1]), int(parts[2])
        lx, ly, t = float(parts[3]), float(parts[4]), float(parts[5])
    except ValueError as err:
        raise FieldFormatError(f"{path}: bad header values ({err})") from None
    body = data[nl + 1:]
    n = nx * ny
    if len(body) == 8 * n and not _looks_ascii(body, n):
        values = np.frombuffer(body, dtype="<f8").astype(float)
    else:
        try:
            values = np.array([float(x) for x in body.decode("ascii").split()])
        except (UnicodeDecodeError, ValueError):
            raise FieldFormatError(f"{path}: payload is neither {n} binary doubles nor ASCII values") from None
        if values.size != n:
            raise FieldFormatError(f"{path}: expected {n} values, found {values.size}")
    return FieldSnapshot(values.reshape(nx, ny), lx, ly, t)


def _looks_ascii(body: bytes, n: int) -> bool:
    if body.count(b"\n") != n:
        return False
    try:
        [float(x) for x in body.decode("ascii").split()]
    except (UnicodeDecodeError, ValueError):
        return False
    return True


def write_pgm(path, values: np.ndarray) -> Path:
    """8-bit binary PGM with linear min/max mapping; first grid index is the image column."""
    path = Path(path)
    v = np.asarray(values, dtype=float)
    lo, hi = float(v.min()), float(v.max())
    scaled = np.zeros_like(v) if hi <= lo else (v - lo) / (hi - lo)
    img = np.round(255 * scaled).astype(np.uint8).T[::-1]
    tmp = path.with_name(path.name + ".partial")
    with open(tmp, "wb") as fh:
        fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii"))
        fh.write(img.tobytes())
    os.replace(tmp, path)
    return path
