"""FMHD binary snapshots of spectral fields.

Layout (little-endian): magic ``FMHD``, u32 version, u32 d, u32 M, f64 L,
u32 c, u8 real_valued, then c * M^d complex128 coefficients in row-major
(component, k_1, ..., k_d) order with the normalization of ``spectral``.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .spectral import GridSpec, SpectralField

MAGIC = b"FMHD"
FORMAT_VERSION = 1
HEADER = struct.Struct("<4sIIIdIB")


def write_snapshot(path: Path, f: SpectralField) -> None:
    header = HEADER.pack(
        MAGIC, FORMAT_VERSION, f.grid.d, f.grid.M, f.grid.L, f.c, int(f.real_valued)
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(f.coeffs, dtype="<c16").tobytes())


def read_snapshot(path: Path) -> SpectralField:
    if not path.exists():
        raise ConfigError(f"snapshot not found: {path}")
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < HEADER.size:
        raise ConfigError(f"{path}: truncated header")
    magic, version, d, M, L, c, real_flag = HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ConfigError(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise ConfigError(f"{path}: unsupported snapshot version {version}")
    grid = GridSpec(d=d, M=M, L=L)
    count = c * M**d
    available = (len(raw) - HEADER.size) // 16
    if available != count:
        raise ConfigError(f"{path}: expected {count} coefficients, found {available}")
    payload = np.frombuffer(raw, dtype="<c16", count=count, offset=HEADER.size)
    coeffs = payload.astype(np.complex128).reshape(c, *grid.shape)
    return SpectralField(grid, coeffs, real_valued=bool(real_flag))
