import numpy as np
import pytest

from igprm import pgm
from igprm.errors import UnreadableMap


def test_round_trip(tmp_path):
    arr = np.arange(64 * 48, dtype=np.uint8).reshape(48, 64) % 251
    path = str(tmp_path / "a.pgm")
    pgm.write_pgm(path, arr)
    back = pgm.read_pgm(path)
    assert np.array_equal(arr, back)


def test_header_comments_tolerated(tmp_path):
    path = tmp_path / "c.pgm"
    raster = bytes(range(6))
    path.write_bytes(b"P5\n# a comment\n3 2\n# another\n255\n" + raster)
    back = pgm.read_pgm(str(path))
    assert back.shape == (2, 3)
    assert back.tobytes() == raster


@pytest.mark.parametrize("payload", [
    b"P2\n2 2\n255\n1 2 3 4",          # ascii variant not supported
    b"P5\n2 2\n255\n\x00",              # truncated raster
    b"P5\n2 2\n70000\n" + b"\x00" * 4,  # bad maxval
    b"nonsense",
])
def test_malformed_raises(tmp_path, payload):
    path = tmp_path / "bad.pgm"
    path.write_bytes(payload)
    with pytest.raises(UnreadableMap):
        pgm.read_pgm(str(path))


def test_missing_file_raises():
    with pytest.raises(UnreadableMap):
        pgm.read_pgm("/nonexistent/file.pgm")
