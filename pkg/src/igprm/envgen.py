"""Occupancy-map generation and expert cost rules.

Synthetic worlds are 64x64 grids with 1-4 parallel full-span walls, each
pierced by one narrow and one wide passage. Indoor worlds come from
user-supplied grayscale maps, cropped and decorated with square step
obstacles of two heights. Ground-truth cost maps are binary {0, 1} fields
derived from the per-class rule table.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum, IntEnum

import numpy as np

from . import pgm
from .errors import (
    ClassKindMismatch,
    GenerationFailed,
    NoValidCrop,
    PlacementFailed,
    UnreadableMap,
)


class CellClass(IntEnum):
    FREE = 0
    WALL = 1
    STEP_LOW = 2
    STEP_HIGH = 3


# Gray levels used when maps are saved as PGM (bit-exact file contract).
PGM_ENCODING = {
    CellClass.FREE: 255,
    CellClass.WALL: 0,
    CellClass.STEP_LOW: 100,
    CellClass.STEP_HIGH: 180,
}
PGM_DECODING = {v: k for k, v in PGM_ENCODING.items()}

# Fixed plane order for network input channels.
CHANNEL_ORDER = (CellClass.FREE, CellClass.WALL, CellClass.STEP_LOW, CellClass.STEP_HIGH)


class InstructionClass(str, Enum):
    PREFER_NARROW = "prefer_narrow"
    PREFER_WIDE = "prefer_wide"
    SHORTEST = "shortest"
    WHEELED_CAREFUL = "wheeled_careful"
    WHEELED_RAPID = "wheeled_rapid"
    LEGGED_CAREFUL = "legged_careful"
    LEGGED_RAPID = "legged_rapid"

    @property
    def kind(self) -> str:
        if self in (InstructionClass.PREFER_NARROW, InstructionClass.PREFER_WIDE,
                    InstructionClass.SHORTEST):
            return "synthetic"
        return "indoor"


SYNTHETIC_CLASSES = tuple(c for c in InstructionClass if c.kind == "synthetic")
INDOOR_CLASSES = tuple(c for c in InstructionClass if c.kind == "indoor")


@dataclass(frozen=True)
class Passage:
    """Rectangular opening carved through a wall."""

    width_class: str  # "narrow" or "wide"
    y0: int
    y1: int
    x0: int
    x1: int

    def mask(self, height: int, width: int) -> np.ndarray:
        m = np.zeros((height, width), dtype=bool)
        m[self.y0:self.y1, self.x0:self.x1] = True
        return m


@dataclass(frozen=True)
class EnvironmentMap:
    """Grid of cell classes plus passage metadata for synthetic worlds."""

    cells: np.ndarray  # (H, W) uint8 of CellClass values
    kind: str  # "synthetic" or "indoor"
    passages: tuple[Passage, ...] = ()

    def __post_init__(self):
        cells = np.ascontiguousarray(self.cells, dtype=np.uint8)
        if cells.ndim != 2:
            raise ValueError("cells must be a 2-D grid")
        if cells.shape[0] < 16 or cells.shape[1] < 16:
            raise ValueError("maps must be at least 16x16 cells")
        if cells.max(initial=0) > int(CellClass.STEP_HIGH):
            raise ValueError("unknown cell class in grid")
        if self.kind not in ("synthetic", "indoor"):
            raise ValueError(f"unknown map kind {self.kind!r}")
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)

    @property
    def height(self) -> int:
        return self.cells.shape[0]

    @property
    def width(self) -> int:
        return self.cells.shape[1]


@dataclass(frozen=True)
class CostMap:
    """Per-cell costs in [0, 1], same shape as the source map."""

    values: np.ndarray  # (H, W) float32

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float32)
        if values.ndim != 2:
            raise ValueError("cost values must be a 2-D grid")
        if not np.all(np.isfinite(values)):
            raise ValueError("cost values must be finite")
        if values.min(initial=0.0) < 0.0 or values.max(initial=0.0) > 1.0:
            raise ValueError("cost values must lie in [0, 1]")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @classmethod
    def zeros(cls, height: int, width: int) -> "CostMap":
        return cls(np.zeros((height, width), dtype=np.float32))


@dataclass(frozen=True)
class SynthConfig:
    """Knobs for the synthetic wall-and-passage generator."""

    wall_count_range: tuple[int, int] = (1, 4)
    wall_thickness: int = 2
    narrow_width_range: tuple[int, int] = (3, 4)
    wide_width_range: tuple[int, int] = (8, 10)
    corner_margin: int = 6
    size: int = 64
    # walls keep this many cells clear of the corner boxes
    wall_margin_pad: int = 2
    min_wall_gap: int = 3
    min_passage_gap: int = 2

    def __post_init__(self):
        if self.wall_count_range[0] < 0 or self.wall_count_range[1] < self.wall_count_range[0]:
            raise ValueError("bad wall_count_range")
        if self.narrow_width_range[1] >= self.wide_width_range[0]:
            raise ValueError("narrow passages must be strictly narrower than wide ones")
        if self.wall_thickness < 1 or self.corner_margin < 1:
            raise ValueError("wall_thickness and corner_margin must be positive")
        if self.size < 16:
            raise ValueError("map size must be at least 16")
        lo = self.corner_margin + self.wall_margin_pad
        hi = self.size - lo - self.wall_thickness
        if self.wall_count_range[1] > 0 and hi < lo:
            raise ValueError("walls do not fit inside the grid with margins")


def flood_connected(passable: np.ndarray, start_cell: tuple[int, int],
                    goal_cell: tuple[int, int]) -> bool:
    """4-connected flood fill; True if goal is reachable from start."""
    h, w = passable.shape
    sy, sx = start_cell[1], start_cell[0]
    gy, gx = goal_cell[1], goal_cell[0]
    if not (passable[sy, sx] and passable[gy, gx]):
        return False
    seen = np.zeros_like(passable, dtype=bool)
    seen[sy, sx] = True
    queue = deque([(sy, sx)])
    while queue:
        y, x = queue.popleft()
        if y == gy and x == gx:
            return True
        for ny, nx in ((y - 1, x), (y + 1, x), (y, x - 1), (y, x + 1)):
            if 0 <= ny < h and 0 <= nx < w and passable[ny, nx] and not seen[ny, nx]:
                seen[ny, nx] = True
                queue.append((ny, nx))
    return False


def _place_passages(rng: np.random.Generator, span: int, cfg: SynthConfig) -> tuple | None:
    """Pick disjoint (start, width) intervals for one narrow and one wide passage."""
    w_narrow = int(rng.integers(cfg.narrow_width_range[0], cfg.narrow_width_range[1] + 1))
    w_wide = int(rng.integers(cfg.wide_width_range[0], cfg.wide_width_range[1] + 1))
    for _ in range(100):
        a_n = int(rng.integers(1, span - w_narrow))
        a_w = int(rng.integers(1, span - w_wide))
        if a_n + w_narrow + cfg.min_passage_gap <= a_w or a_w + w_wide + cfg.min_passage_gap <= a_n:
            return (a_n, w_narrow, a_w, w_wide)
    return None


def gen_synthetic_env(seed: int, cfg: SynthConfig | None = None,
                      ) -> tuple[EnvironmentMap, tuple[float, float], tuple[float, float]]:
    """Generate a wall-and-passage world plus start/goal at opposite corners.

    Deterministic for a fixed seed. Walls within one map share an orientation
    so passages never overlap and the cost rules stay unambiguous.
    """
    cfg = cfg or SynthConfig()
    rng = np.random.default_rng(seed)
    size, t = cfg.size, cfg.wall_thickness
    lo = cfg.corner_margin + cfg.wall_margin_pad
    hi = size - lo - t  # inclusive upper bound for wall start
    rejections = 0

    while True:
        if rejections > 1000:
            raise GenerationFailed(f"no connected map after {rejections} rejections (seed={seed})")

        vertical = bool(rng.random() < 0.5)
        n_walls = int(rng.integers(cfg.wall_count_range[0], cfg.wall_count_range[1] + 1))

        ok = True
        positions: list[int] = []
        if n_walls > 0:
            positions = sorted(int(rng.integers(lo, hi + 1)) for _ in range(n_walls))
            gaps = [b - a for a, b in zip(positions, positions[1:])]
            ok = all(g >= t + cfg.min_wall_gap for g in gaps)

        cells = np.full((size, size), CellClass.FREE, dtype=np.uint8)
        passages: list[Passage] = []
        if ok:
            for pos in positions:
                placed = _place_passages(rng, size, cfg)
                if placed is None:
                    ok = False
                    break
                a_n, w_n, a_w, w_w = placed
                if vertical:
                    cells[:, pos:pos + t] = CellClass.WALL
                    cells[a_n:a_n + w_n, pos:pos + t] = CellClass.FREE
                    cells[a_w:a_w + w_w, pos:pos + t] = CellClass.FREE
                    passages.append(Passage("narrow", a_n, a_n + w_n, pos, pos + t))
                    passages.append(Passage("wide", a_w, a_w + w_w, pos, pos + t))
                else:
                    cells[pos:pos + t, :] = CellClass.WALL
                    cells[pos:pos + t, a_n:a_n + w_n] = CellClass.FREE
                    cells[pos:pos + t, a_w:a_w + w_w] = CellClass.FREE
                    passages.append(Passage("narrow", pos, pos + t, a_n, a_n + w_n))
                    passages.append(Passage("wide", pos, pos + t, a_w, a_w + w_w))

        if not ok:
            rejections += 1
            continue

        # start/goal in diagonally opposite corner boxes
        m = cfg.corner_margin
        corner_boxes = [((0, 0), (size - m, size - m)), ((size - m, 0), (0, size - m))]
        (sx0, sy0), (gx0, gy0) = corner_boxes[int(rng.integers(2))]
        if rng.random() < 0.5:
            (sx0, sy0), (gx0, gy0) = (gx0, gy0), (sx0, sy0)
        scx = sx0 + int(rng.integers(m))
        scy = sy0 + int(rng.integers(m))
        gcx = gx0 + int(rng.integers(m))
        gcy = gy0 + int(rng.integers(m))

        if not flood_connected(cells == CellClass.FREE, (scx, scy), (gcx, gcy)):
            rejections += 1
            continue

        env = EnvironmentMap(cells=cells, kind="synthetic", passages=tuple(passages))
        return env, (scx + 0.5, scy + 0.5), (gcx + 0.5, gcy + 0.5)


def place_step_obstacles(env: EnvironmentMap, seed: int, count: int = 20,
                         size: int = 4) -> EnvironmentMap:
    """Scatter non-overlapping square step obstacles over FREE cells.

    Each square is independently labeled low or high with probability 1/2.
    Steps never cover WALL cells, so connectivity through non-WALL cells is
    unchanged by construction.
    """
    if env.kind != "indoor":
        raise ClassKindMismatch("step obstacles apply to indoor maps only")
    if count == 0:
        return env
    if size < 1 or count < 0:
        raise ValueError("count and size must be positive")

    rng = np.random.default_rng(seed)
    cells = env.cells.copy()
    h, w = cells.shape
    if size > h or size > w:
        raise PlacementFailed("step size exceeds map extent")

    budget = 10 * count * 100
    placed = 0
    rejected = 0
    while placed < count:
        if rejected >= budget:
            raise PlacementFailed(
                f"placed {placed}/{count} step obstacles after {rejected} rejections")
        x0 = int(rng.integers(0, w - size + 1))
        y0 = int(rng.integers(0, h - size + 1))
        region = cells[y0:y0 + size, x0:x0 + size]
        if np.any(region != CellClass.FREE):
            rejected += 1
            continue
        label = CellClass.STEP_LOW if rng.random() < 0.5 else CellClass.STEP_HIGH
        cells[y0:y0 + size, x0:x0 + size] = label
        placed += 1

    return EnvironmentMap(cells=cells, kind="indoor", passages=env.passages)


def load_indoor_map(path: str, crop_seed: int, crop_size: int = 64,
                    short_edge: int = 128, min_free_fraction: float = 0.3,
                    ) -> EnvironmentMap:
    """Load a grayscale PGM, rescale so the shorter edge is 128, crop 64x64.

    Bright cells (gray >= 128) become FREE and dark cells WALL. The crop is
    retried until its FREE fraction reaches ``min_free_fraction``.
    """
    gray = pgm.read_pgm(path)
    h, w = gray.shape

    scale = short_edge / min(h, w)
    new_h = max(short_edge, int(round(h * scale)))
    new_w = max(short_edge, int(round(w * scale)))
    row_idx = np.minimum((np.arange(new_h) / scale).astype(int), h - 1)
    col_idx = np.minimum((np.arange(new_w) / scale).astype(int), w - 1)
    resized = gray[np.ix_(row_idx, col_idx)]

    free = resized >= 128
    rng = np.random.default_rng(crop_seed)
    for _ in range(1000):
        y0 = int(rng.integers(0, new_h - crop_size + 1))
        x0 = int(rng.integers(0, new_w - crop_size + 1))
        patch = free[y0:y0 + crop_size, x0:x0 + crop_size]
        if patch.mean() >= min_free_fraction:
            cells = np.where(patch, CellClass.FREE, CellClass.WALL).astype(np.uint8)
            return EnvironmentMap(cells=cells, kind="indoor")
    raise NoValidCrop(f"no crop with free fraction >= {min_free_fraction} in {path}")


def gt_cost_map(env: EnvironmentMap, cls: InstructionClass) -> CostMap:
    """Expert rule table: walls always cost 1, plus class-dependent regions."""
    if cls.kind != env.kind:
        raise ClassKindMismatch(f"{cls.value} does not apply to {env.kind} maps")

    costs = np.zeros(env.cells.shape, dtype=np.float32)
    costs[env.cells == CellClass.WALL] = 1.0

    if cls is InstructionClass.PREFER_WIDE:
        for p in env.passages:
            if p.width_class == "narrow":
                costs[p.y0:p.y1, p.x0:p.x1] = 1.0
    elif cls is InstructionClass.PREFER_NARROW:
        for p in env.passages:
            if p.width_class == "wide":
                costs[p.y0:p.y1, p.x0:p.x1] = 1.0
    elif cls is InstructionClass.WHEELED_CAREFUL:
        costs[env.cells == CellClass.STEP_LOW] = 1.0
        costs[env.cells == CellClass.STEP_HIGH] = 1.0
    elif cls is InstructionClass.LEGGED_CAREFUL:
        costs[env.cells == CellClass.STEP_HIGH] = 1.0
    # SHORTEST and *_RAPID add nothing beyond walls.

    return CostMap(costs)


def to_input_channels(env: EnvironmentMap) -> np.ndarray:
    """One-hot (4, H, W) float32 planes in fixed order; planes sum to 1."""
    return np.stack(
        [(env.cells == c).astype(np.float32) for c in CHANNEL_ORDER], axis=0)


def save_env_pgm(env: EnvironmentMap, path: str) -> None:
    """Write the cell-class grid with the fixed gray encoding."""
    out = np.zeros(env.cells.shape, dtype=np.uint8)
    for klass, gray in PGM_ENCODING.items():
        out[env.cells == klass] = gray
    pgm.write_pgm(path, out)


def load_env_pgm(path: str, kind: str) -> EnvironmentMap:
    """Read a map saved by save_env_pgm (exact gray values required)."""
    gray = pgm.read_pgm(path)
    cells = np.zeros(gray.shape, dtype=np.uint8)
    matched = np.zeros(gray.shape, dtype=bool)
    for value, klass in PGM_DECODING.items():
        hit = gray == value
        cells[hit] = klass
        matched |= hit
    if not matched.all():
        bad = sorted(np.unique(gray[~matched]).tolist())
        raise UnreadableMap(f"{path}: unexpected gray levels {bad}")
    return EnvironmentMap(cells=cells, kind=kind)


def save_cost_pgm(cost: CostMap, path: str) -> None:
    pgm.write_pgm(path, np.round(cost.values * 255.0).astype(np.uint8))


def load_cost_pgm(path: str) -> CostMap:
    return CostMap(pgm.read_pgm(path).astype(np.float32) / 255.0)
