"""PNG read/write as float RGB images in [0, 1]."""

from __future__ import annotations

import io

import numpy as np
import png

from ..errors import IoError, ParseError


def decode_png(data: bytes) -> np.ndarray:
    """Decode PNG bytes to an ``(H, W, 3)`` float image; alpha is dropped."""
    try:
        width, height, rows, info = png.Reader(bytes=data).asDirect()
        planes = info["planes"]
        arr = np.vstack([np.asarray(r, dtype=np.float64) for r in rows]) if height else np.zeros((0, width * planes))
    except ParseError:
        raise
    except Exception as exc:  # pypng raises a mix of its own and zlib/struct/value errors
        raise ParseError(f"corrupt PNG data: {exc}") from None
    if arr.shape != (height, width * planes):
        raise ParseError("PNG row data does not match the header size")
    arr = arr.reshape(height, width, planes)
    if planes in (1, 2):
        arr = np.repeat(arr[..., :1], 3, axis=2)
    else:
        arr = arr[..., :3]
    return arr / float(2 ** info["bitdepth"] - 1)


def read_png(path) -> np.ndarray:
    """8-bit samples map via v/255, 16-bit via v/65535."""
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    return decode_png(data)


def to_uint8(image) -> np.ndarray:
    """Clamp to [0, 1] and quantise, rounding halves away from zero."""
    img = np.clip(np.asarray(image, dtype=np.float64), 0.0, 1.0)
    return np.floor(img * 255.0 + 0.5).astype(np.uint8)


def encode_png(image, bitdepth: int = 8) -> bytes:
    img = np.asarray(image)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected an (H, W, 3) image, got {img.shape}")
    h, w = img.shape[:2]
    if bitdepth == 8:
        q = to_uint8(img)
    elif bitdepth == 16:
        q = np.floor(np.clip(img, 0.0, 1.0) * 65535.0 + 0.5).astype(np.uint16)
    else:
        raise ValueError("bitdepth must be 8 or 16")
    out = io.BytesIO()
    png.Writer(w, h, greyscale=False, bitdepth=bitdepth).write(out, q.reshape(h, w * 3))
    return out.getvalue()


def write_png(path, image, bitdepth: int = 8) -> None:
    data = encode_png(image, bitdepth)
    try:
        with open(path, "wb") as fh:
            fh.write(data)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
