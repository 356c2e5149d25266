"""Regular value grids and their on-disk format.

File layout (all little-endian)::

    magic      8 bytes   b"SXVGRID1"
    ndim       int64
    per axis   float64 lo, float64 hi, int64 count, int64 periodic
    residual   float64   final sweep residual of the solve
    meta_len   int64     length of the UTF-8 JSON metadata blob
    meta       bytes
    payload    float64 values, row-major (C order)
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import kernels

MAGIC = b"SXVGRID1"


@dataclass(frozen=True)
class Axis:
    """Uniform axis. Periodic axes have ``count`` nodes over ``[lo, hi)``."""

    lo: float
    hi: float
    count: int
    periodic: bool = False

    def __post_init__(self):
        if self.count < 2:
            raise ValueError("an axis needs at least two nodes")
        if not self.hi > self.lo:
            raise ValueError("axis must have hi > lo")

    @property
    def step(self) -> float:
        span = self.hi - self.lo
        return span / self.count if self.periodic else span / (self.count - 1)

    def nodes(self) -> np.ndarray:
        return self.lo + self.step * np.arange(self.count)

    def as_list(self) -> list:
        return [float(self.lo), float(self.hi), int(self.count), bool(self.periodic)]


@dataclass(frozen=True)
class ValueGrid:
    axes: tuple[Axis, ...]
    values: np.ndarray
    residual: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        shape = tuple(a.count for a in self.axes)
        vals = np.ascontiguousarray(self.values, dtype=np.float64)
        if vals.shape != shape:
            raise ValueError(f"values shape {vals.shape} does not match axes {shape}")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "axes", tuple(self.axes))

    @property
    def ndim(self) -> int:
        return len(self.axes)

    def _geom(self):
        return (
            tuple(a.lo for a in self.axes),
            tuple(a.step for a in self.axes),
            tuple(a.count for a in self.axes),
            tuple(a.periodic for a in self.axes),
        )

    def interp(self, pts) -> np.ndarray:
        """Multilinear interpolation; points outside the box are clamped to it."""
        return kernels.interp(self.values, *self._geom(), pts)

    def interp_grad(self, pts) -> tuple[np.ndarray, np.ndarray]:
        return kernels.interp_grad(self.values, *self._geom(), np.asarray(pts, dtype=float))

    def save(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        meta = json.dumps(self.meta, sort_keys=True).encode()
        parts = [MAGIC, struct.pack("<q", self.ndim)]
        for a in self.axes:
            parts.append(struct.pack("<ddqq", a.lo, a.hi, a.count, int(a.periodic)))
        parts.append(struct.pack("<dq", self.residual, len(meta)))
        parts.append(meta)
        tmp = path.with_suffix(path.suffix + ".tmp")
        with open(tmp, "wb") as fh:
            fh.write(b"".join(parts))
            fh.write(self.values.astype("<f8").tobytes(order="C"))
        tmp.replace(path)

    @classmethod
    def load(cls, path) -> "ValueGrid":
        raw = Path(path).read_bytes()
        if raw[:8] != MAGIC:
            raise ValueError(f"{path}: not a value grid file")
        off = 8
        (ndim,) = struct.unpack_from("<q", raw, off)
        off += 8
        axes = []
        for _ in range(ndim):
            lo, hi, count, periodic = struct.unpack_from("<ddqq", raw, off)
            off += 32
            axes.append(Axis(lo, hi, count, bool(periodic)))
        residual, meta_len = struct.unpack_from("<dq", raw, off)
        off += 16
        meta = json.loads(raw[off : off + meta_len].decode()) if meta_len else {}
        off += meta_len
        shape = tuple(a.count for a in axes)
        expected = int(np.prod(shape)) * 8
        if len(raw) - off != expected:
            raise ValueError(f"{path}: payload is {len(raw) - off} bytes, expected {expected}")
        values = np.frombuffer(raw, dtype="<f8", offset=off).reshape(shape).astype(np.float64)
        return cls(tuple(axes), values, residual, meta)


def params_hash(params: dict) -> str:
    """Stable short hash of a JSON-serialisable parameter dict."""
    blob = json.dumps(params, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]
