"""Image file I/O: PNG and PGM (8/16-bit grayscale) plus the WPH0 raw grid.

WPH0 container layout (little-endian):
    bytes 0..3   magic "WPH0"
    bytes 4..7   u32 height
    bytes 8..11  u32 width
    bytes 12..15 u32 reserved (zero)
    then height*width float32 values, row-major.
"""

from __future__ import annotations

import re
import struct
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

RAW_MAGIC = b"WPH0"
RAW_HEADER = struct.Struct("<4sIII")

IMAGE_SUFFIXES = (".png", ".pgm", ".wph")


def write_raw(path, grid) -> None:
    arr = np.ascontiguousarray(np.asarray(grid), dtype="<f4")
    if arr.ndim != 2:
        raise ValueError(f"raw container stores 2-D grids, got shape {arr.shape}")
    h, w = arr.shape
    with open(path, "wb") as fh:
        fh.write(RAW_HEADER.pack(RAW_MAGIC, h, w, 0))
        fh.write(arr.tobytes())


def read_raw(path) -> np.ndarray:
    with open(path, "rb") as fh:
        header = fh.read(RAW_HEADER.size)
        if len(header) != RAW_HEADER.size:
            raise ValueError(f"{path}: truncated raw header")
        magic, h, w, _reserved = RAW_HEADER.unpack(header)
        if magic != RAW_MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}, expected {RAW_MAGIC!r}")
        data = np.frombuffer(fh.read(4 * h * w), dtype="<f4")
    if data.size != h * w:
        raise ValueError(f"{path}: expected {h * w} float32 values, got {data.size}")
    return data.reshape(h, w).astype(np.float64)


def _read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    # Header tokens: magic, width, height, maxval; '#' comments run to EOL.
    tokens = []
    pos = 0
    while len(tokens) < 4:
        m = re.compile(rb"\s*(#[^\n]*\n|\S+)").match(data, pos)
        if m is None:
            raise ValueError(f"{path}: truncated PGM header")
        pos = m.end()
        tok = m.group(1)
        if not tok.startswith(b"#"):
            tokens.append(tok)
    magic = tokens[0]
    if magic not in (b"P2", b"P5"):
        raise ValueError(f"{path}: unsupported PGM magic {magic!r}")
    w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    if maxval <= 0 or maxval > 65535:
        raise ValueError(f"{path}: bad PGM maxval {maxval}")
    if magic == b"P2":
        vals = np.array(data[pos:].split(), dtype=np.float64)
        if vals.size != h * w:
            raise ValueError(f"{path}: expected {h * w} samples, got {vals.size}")
        return vals.reshape(h, w) / maxval
    pos += 1  # single whitespace after maxval
    dtype = ">u2" if maxval > 255 else np.uint8
    raw = np.frombuffer(data, dtype=dtype, count=h * w, offset=pos)
    return raw.reshape(h, w).astype(np.float64) / maxval


def _write_pgm(path, img, bitdepth: int = 16) -> None:
    arr = np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0)
    maxval = 65535 if bitdepth == 16 else 255
    q = np.rint(arr * maxval).astype(">u2" if bitdepth == 16 else np.uint8)
    h, w = arr.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n{maxval}\n".encode())
        fh.write(q.tobytes())


def _read_png(path) -> np.ndarray:
    with PILImage.open(path) as im:
        if im.mode == "L":
            return np.asarray(im, dtype=np.float64) / 255.0
        if im.mode in ("I;16", "I;16B", "I;16L"):
            return np.asarray(im, dtype=np.float64) / 65535.0
        if im.mode == "I":
            arr = np.asarray(im, dtype=np.float64)
            return arr / 65535.0
        raise ValueError(f"{path}: unsupported PNG mode {im.mode!r} (grayscale only)")


def _write_png(path, img, bitdepth: int = 16) -> None:
    arr = np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0)
    if bitdepth == 16:
        q = np.rint(arr * 65535).astype(np.uint16)
        PILImage.fromarray(q).save(path)
    else:
        q = np.rint(arr * 255).astype(np.uint8)
        PILImage.fromarray(q, mode="L").save(path)


def load_image(path) -> np.ndarray:
    """Read a supported image file as a float64 grid.

    PNG/PGM intensities are scaled to [0, 1]; the raw container is
    returned as stored.
    """
    suffix = Path(path).suffix.lower()
    if suffix == ".png":
        return _read_png(path)
    if suffix == ".pgm":
        return _read_pgm(path)
    if suffix == ".wph":
        return read_raw(path)
    raise ValueError(f"{path}: unsupported image format {suffix!r}")


def save_image(path, img, bitdepth: int = 16) -> None:
    suffix = Path(path).suffix.lower()
    if suffix == ".png":
        _write_png(path, img, bitdepth)
    elif suffix == ".pgm":
        _write_pgm(path, img, bitdepth)
    elif suffix == ".wph":
        write_raw(path, img)
    else:
        raise ValueError(f"{path}: unsupported image format {suffix!r}")
