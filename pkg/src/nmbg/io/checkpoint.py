"""Binary checkpoint format.

Layout, all little-endian::

    b"NMBG"                 magic
    u32                     format version
    u32 N, u32 9, u32 8     foreground descriptor dims, then N*72 float32
    u32 M, u32 9, u32 8     background descriptor dims, then M*72 float32
    u32 count               head tensors (W_fg, W_bg, W_out, b_out in order)
      u32 ndim, u32 dims..  per tensor, then its float32 data
    f64 cx, cy, cz, radius  scene split

Tensors are stored row-major.  The split is kept in double precision so a
reloaded checkpoint partitions the mesh exactly as during fitting.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from ..descriptors import DescriptorSet
from ..diffrender.head import PARAM_NAMES, RenderHeadParams
from ..errors import IoError, ParseError, VersionMismatch
from ..geometry import SceneSplit

MAGIC = b"NMBG"
VERSION = 1
_MAX_DIM = 1 << 28


@dataclass
class Checkpoint:
    fg: DescriptorSet
    bg: DescriptorSet
    head: RenderHeadParams
    split: SceneSplit
    version: int = VERSION


def _tensor_bytes(arr: np.ndarray, with_ndim: bool) -> bytes:
    arr = np.ascontiguousarray(arr, dtype="<f4")
    dims = struct.pack(f"<{arr.ndim}I", *arr.shape)
    head = struct.pack("<I", arr.ndim) if with_ndim else b""
    return head + dims + arr.tobytes()


def checkpoint_to_bytes(ckpt: Checkpoint) -> bytes:
    parts = [MAGIC, struct.pack("<I", ckpt.version)]
    parts.append(_tensor_bytes(ckpt.fg.data, with_ndim=False))
    parts.append(_tensor_bytes(ckpt.bg.data, with_ndim=False))
    parts.append(struct.pack("<I", len(PARAM_NAMES)))
    for name in PARAM_NAMES:
        parts.append(_tensor_bytes(getattr(ckpt.head, name), with_ndim=True))
    c = np.asarray(ckpt.split.center, dtype=np.float64)
    parts.append(struct.pack("<4d", c[0], c[1], c[2], float(ckpt.split.radius)))
    return b"".join(parts)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if n < 0 or self.pos + n > len(self.data):
            raise ParseError("truncated checkpoint")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def u32(self, count: int = 1):
        vals = struct.unpack(f"<{count}I", self.take(4 * count))
        return vals if count > 1 else vals[0]

    def floats(self, shape) -> np.ndarray:
        n = int(np.prod(shape, dtype=np.int64))
        if any(d > _MAX_DIM for d in shape) or n > _MAX_DIM:
            raise ParseError("tensor dimensions are implausibly large")
        arr = np.frombuffer(self.take(4 * n), dtype="<f4").reshape(shape).copy()
        if not np.isfinite(arr).all():
            raise ParseError("non-finite values in checkpoint")
        return arr


def checkpoint_from_bytes(data: bytes) -> Checkpoint:
    r = _Reader(data)
    if r.take(4) != MAGIC:
        raise ParseError("bad checkpoint magic")
    version = r.u32()
    if version != VERSION:
        raise VersionMismatch(f"checkpoint version {version}, expected {VERSION}")
    descs = []
    for _ in range(2):
        dims = r.u32(3)
        if dims[1:] != (9, 8):
            raise ParseError(f"descriptor dims {dims} are not (N, 9, 8)")
        descs.append(DescriptorSet(r.floats(dims)))
    count = r.u32()
    if count != len(PARAM_NAMES):
        raise ParseError(f"expected {len(PARAM_NAMES)} head tensors, found {count}")
    tensors = []
    for _ in range(count):
        ndim = r.u32()
        if not 1 <= ndim <= 4:
            raise ParseError(f"bad tensor rank {ndim}")
        dims = r.u32(ndim)
        tensors.append(r.floats((dims,) if ndim == 1 else dims))
    W_fg, W_bg, W_out, b_out = tensors
    hd = W_fg.shape[-1] if W_fg.ndim == 2 else -1
    if (W_fg.ndim != 2 or W_bg.shape != W_fg.shape or W_out.shape != (2 * hd, 3) or b_out.shape != (3,)):
        raise ParseError("inconsistent render head shapes")
    cx, cy, cz, radius = struct.unpack("<4d", r.take(32))
    if r.pos != len(data):
        raise ParseError("trailing bytes after checkpoint")
    if not (np.isfinite([cx, cy, cz, radius]).all() and radius > 0):
        raise ParseError("invalid scene split in checkpoint")
    head = RenderHeadParams(*(t.astype(np.float64) for t in (W_fg, W_bg, W_out, b_out)))
    return Checkpoint(descs[0], descs[1], head,
                      SceneSplit(np.array([cx, cy, cz]), radius), version)


def save_checkpoint(path, ckpt: Checkpoint) -> None:
    try:
        with open(path, "wb") as fh:
            fh.write(checkpoint_to_bytes(ckpt))
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def load_checkpoint(path) -> Checkpoint:
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    return checkpoint_from_bytes(data)
