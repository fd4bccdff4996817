"""FBO2 field snapshot files.

Layout (all little-endian): magic "FBO2", version u32, nx u32, ny u32,
lx f64, ly f64, t f64, alpha f64, then nx*ny samples f64 written row-major
with y as the outer loop and x as the inner loop.
"""

from __future__ import annotations

import struct

import numpy as np

from .spectral import Grid, SpectralField, forward_transform, inverse_transform

MAGIC = b"FBO2"
VERSION = 1
_HEADER = struct.Struct("<4sIII4d")


def save_snapshot(path, field: SpectralField, t: float, alpha: float):
    grid = field.grid
    samples = np.ascontiguousarray(inverse_transform(field).T, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, grid.nx, grid.ny,
                              grid.lx, grid.ly, t, alpha))
        fh.write(samples.tobytes())


def load_snapshot(path):
    """Return (field, t, alpha) from an FBO2 file."""
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) != _HEADER.size:
            raise ValueError(f"{path}: truncated header")
        magic, version, nx, ny, lx, ly, t, alpha = _HEADER.unpack(header)
        if magic != MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}")
        if version != VERSION:
            raise ValueError(f"{path}: unsupported version {version}")
        payload = fh.read(nx * ny * 8)
        if len(payload) != nx * ny * 8:
            raise ValueError(f"{path}: truncated payload")
    samples = np.frombuffer(payload, dtype="<f8").reshape(ny, nx).T
    grid = Grid(int(nx), int(ny), float(lx), float(ly))
    return forward_transform(grid, samples.copy()), float(t), float(alpha)
