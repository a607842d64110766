"""Binary PGM (P5) reading and writing.

Only 8-bit P5 files are supported. Header comments (# ...) are tolerated on
read; files written here carry no comments so round-trips are bit-exact.
"""

from __future__ import annotations

import numpy as np

from .errors import UnreadableMap


def read_pgm(path: str) -> np.ndarray:
    """Read an 8-bit binary PGM into a (H, W) uint8 array."""
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise UnreadableMap(f"cannot read {path}: {exc}") from exc

    if not data.startswith(b"P5"):
        raise UnreadableMap(f"{path}: not a binary PGM (P5)")

    pos = 2
    fields: list[int] = []
    while len(fields) < 3:
        # skip whitespace and comment lines between header tokens
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        token = data[start:pos]
        if not token.isdigit():
            raise UnreadableMap(f"{path}: malformed PGM header")
        fields.append(int(token))
    pos += 1  # single whitespace byte after maxval

    width, height, maxval = fields
    if width <= 0 or height <= 0:
        raise UnreadableMap(f"{path}: bad dimensions {width}x{height}")
    if not 0 < maxval <= 255:
        raise UnreadableMap(f"{path}: unsupported maxval {maxval}")

    raster = data[pos : pos + width * height]
    if len(raster) != width * height:
        raise UnreadableMap(f"{path}: truncated raster")
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width).copy()


def write_pgm(path: str, values: np.ndarray) -> None:
    """Write a (H, W) uint8 array as a binary PGM with maxval 255."""
    arr = np.asarray(values, dtype=np.uint8)
    if arr.ndim != 2:
        raise ValueError("PGM raster must be 2-D")
    height, width = arr.shape
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (width, height))
        fh.write(arr.tobytes())
