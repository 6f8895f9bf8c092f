"""Grayscale image I/O: binary PGM (P5) and 8/16-bit PNG.

Images are returned as float64 arrays together with their peak value
(255 or 65535). Writing quantises with round-half-away-from-zero after
clipping to ``[0, peak]``.
"""

from __future__ import annotations

import os

import numpy as np
from PIL import Image

__all__ = ["read_image", "write_image", "quantize", "IMAGE_SUFFIXES"]

IMAGE_SUFFIXES = (".pgm", ".png")


def _read_pgm(path):
    with open(path, "rb") as fh:
        data = fh.read()
    tokens = []
    pos = 0
    # header: magic, width, height, maxval, separated by whitespace/comments
    while len(tokens) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError(f"{path}: truncated PGM header")
        tokens.append(data[start:pos])
    pos += 1
    if tokens[0] != b"P5":
        raise ValueError(f"{path}: only binary PGM (P5) is supported")
    w, h, maxval = (int(t) for t in tokens[1:])
    if not 0 < maxval < 65536:
        raise ValueError(f"{path}: bad PGM maxval {maxval}")
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype(np.uint8)
    count = w * h
    if len(data) - pos < count * dtype.itemsize:
        raise ValueError(f"{path}: truncated PGM pixel data")
    pixels = np.frombuffer(data, dtype=dtype, count=count, offset=pos)
    return pixels.reshape(h, w).astype(np.float64), (65535 if maxval > 255 else 255)


def _read_png(path):
    with Image.open(path) as im:
        mode = im.mode
        if mode == "P":
            raise ValueError(f"{path}: palette images are not supported")
        if mode not in ("L", "I;16", "I;16B", "I"):
            raise ValueError(
                f"{path}: color or unsupported mode {mode!r}; convert to grayscale first"
            )
        arr = np.array(im)
    peak = 255 if mode == "L" else 65535
    return arr.astype(np.float64), peak


def read_image(path):
    """Read a grayscale PGM/PNG file; returns ``(array, peak)``."""
    suffix = os.path.splitext(os.fspath(path))[1].lower()
    if suffix == ".pgm":
        return _read_pgm(path)
    if suffix == ".png":
        return _read_png(path)
    raise ValueError(f"{path}: unsupported image type {suffix!r}")


def quantize(x, peak=255) -> np.ndarray:
    """Clip to ``[0, peak]`` and round half away from zero."""
    x = np.clip(np.asarray(x, dtype=np.float64), 0.0, peak)
    q = np.floor(x + 0.5)
    return q.astype(np.uint16 if peak > 255 else np.uint8)


def write_image(path, x, peak=255) -> None:
    q = quantize(x, peak)
    suffix = os.path.splitext(os.fspath(path))[1].lower()
    if suffix == ".pgm":
        h, w = q.shape
        header = f"P5\n{w} {h}\n{peak}\n".encode("ascii")
        body = q.astype(">u2").tobytes() if peak > 255 else q.tobytes()
        with open(path, "wb") as fh:
            fh.write(header + body)
    elif suffix == ".png":
        Image.fromarray(q).save(path, format="PNG")
    else:
        raise ValueError(f"{path}: unsupported image type {suffix!r}")
