"""Binary field snapshots.

Layout (all little-endian):
    magic   4 bytes  b"VOIG"
    version u32      1
    N       u32      modes per axis
    kind    u8       0 = vector field, 1 = scalar field
    data    f64 pairs (re, im) per coefficient, three pairs per wavevector
            for vector fields, one pair for scalars, over wavevectors
            k in {-N/2+1, ..., N/2}^3 \\ {0} in lexicographic order.
"""

import struct

import numpy as np

from .field import SpectralScalarField, SpectralVectorField
from .grid import TorusGrid

MAGIC = b"VOIG"
VERSION = 1
KIND_VECTOR = 0
KIND_SCALAR = 1

_HEADER = struct.Struct("<4sIIB")


def _lex_indices(n):
    """fft-layout indices of the resolved wavevectors in lexicographic order."""
    axis = np.arange(-(n // 2) + 1, n // 2 + 1)
    k1, k2, k3 = np.meshgrid(axis, axis, axis, indexing="ij")
    k1, k2, k3 = (a.ravel() for a in (k1, k2, k3))
    keep = ~((k1 == 0) & (k2 == 0) & (k3 == 0))
    k1, k2, k3 = k1[keep], k2[keep], k3[keep]
    return k1 % n, k2 % n, k3 % n


def save_snapshot(path, field):
    n = field.grid.n_modes
    kind = KIND_VECTOR if field.coeffs.ndim == 4 else KIND_SCALAR
    idx = _lex_indices(n)
    if kind == KIND_VECTOR:
        values = field.coeffs[:, idx[0], idx[1], idx[2]].T  # (M, 3)
    else:
        values = field.coeffs[idx[0], idx[1], idx[2]][:, None]  # (M, 1)
    flat = np.empty(values.shape + (2,), dtype="<f8")
    flat[..., 0] = values.real
    flat[..., 1] = values.imag
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, n, kind))
        fh.write(flat.tobytes())


def load_snapshot(path):
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise ValueError(f"{path}: truncated snapshot header")
        magic, version, n, kind = _HEADER.unpack(head)
        if magic != MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}")
        if version != VERSION:
            raise ValueError(f"{path}: unsupported version {version}")
        if kind not in (KIND_VECTOR, KIND_SCALAR):
            raise ValueError(f"{path}: unknown field kind {kind}")
        payload = fh.read()
    grid = TorusGrid(n)
    ncomp = 3 if kind == KIND_VECTOR else 1
    expected = (n**3 - 1) * ncomp * 2
    data = np.frombuffer(payload, dtype="<f8")
    if data.size != expected:
        raise ValueError(f"{path}: expected {expected} f64 values, found {data.size}")
    values = data.reshape(-1, ncomp, 2)
    complex_vals = values[..., 0] + 1j * values[..., 1]
    idx = _lex_indices(n)
    if kind == KIND_VECTOR:
        coeffs = np.zeros((3,) + grid.shape, dtype=np.complex128)
        coeffs[:, idx[0], idx[1], idx[2]] = complex_vals.T
        return SpectralVectorField(grid, coeffs)
    coeffs = np.zeros(grid.shape, dtype=np.complex128)
    coeffs[idx[0], idx[1], idx[2]] = complex_vals[:, 0]
    return SpectralScalarField(grid, coeffs)
