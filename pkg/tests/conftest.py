import numpy as np
import pytest

import igprm
from igprm import envgen


@pytest.fixture(scope="session")
def synth_env():
    """One fixed synthetic environment with start/goal."""
    return igprm.gen_synthetic_env(11)


@pytest.fixture(scope="session")
def empty_env():
    """Obstacle-free 64x64 synthetic map."""
    cfg = envgen.SynthConfig(wall_count_range=(0, 0))
    return igprm.gen_synthetic_env(1, cfg)


@pytest.fixture()
def indoor_pgm(tmp_path):
    """A fake indoor source map: mostly free with a few dark rectangles."""
    rng = np.random.default_rng(7)
    gray = np.full((160, 240), 220, dtype=np.uint8)
    for _ in range(12):
        y = int(rng.integers(0, 140))
        x = int(rng.integers(0, 210))
        h = int(rng.integers(6, 22))
        w = int(rng.integers(6, 30))
        gray[y:y + h, x:x + w] = 30
    path = tmp_path / "indoor_src.pgm"
    from igprm import pgm
    pgm.write_pgm(str(path), gray)
    return str(path)


@pytest.fixture(scope="session")
def smoke_dataset(tmp_path_factory):
    """Tiny synthetic dataset shared across bench/dataset tests."""
    out = tmp_path_factory.mktemp("data") / "smoke"
    return igprm.build_dataset("synthetic", str(out), counts=(4, 2, 4), seed=3, k=16)
