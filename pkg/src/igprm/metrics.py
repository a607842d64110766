"""Path-quality metrics: success against ground-truth costs, SPL, and DTW."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .envgen import CostMap
from .errors import DegeneratePath, EmptyResultSet, EmptySequence


def _as_points(path) -> np.ndarray | None:
    """Accept a PlanPath, an (T, 2) array, or None (no path found)."""
    if path is None:
        return None
    nodes = getattr(path, "nodes", path)
    pts = np.asarray(nodes, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) == 0:
        raise ValueError(f"expected (T, 2) point sequence, got shape {pts.shape}")
    return pts


def polyline_length(path) -> float:
    pts = _as_points(path)
    if len(pts) < 2:
        return 0.0
    deltas = np.diff(pts, axis=0)
    return float(np.hypot(deltas[:, 0], deltas[:, 1]).sum())


def sample_polyline(path, delta: float = 0.5) -> np.ndarray:
    """Points along every segment at interval delta, endpoints included.
    Matches the sampling rule used for edge costs."""
    pts = _as_points(path)
    if len(pts) == 1:
        return pts
    chunks = []
    for a, b in zip(pts, pts[1:]):
        length = float(np.hypot(b[0] - a[0], b[1] - a[1]))
        m = max(2, int(math.ceil(length / delta)) + 1)
        t = np.arange(m) / (m - 1)
        chunks.append(a[None, :] + t[:, None] * (b - a)[None, :])
    return np.concatenate(chunks, axis=0)


def check_success(path, gt: CostMap, threshold: float = 0.5,
                  delta: float = 0.5) -> bool:
    """True iff a path exists and none of its delta-spaced samples lands in a
    cell with ground-truth cost >= threshold."""
    pts = _as_points(path)
    if pts is None:
        return False
    samples = sample_polyline(pts, delta)
    ix = np.clip(np.floor(samples[:, 0]).astype(np.int64), 0, gt.width - 1)
    iy = np.clip(np.floor(samples[:, 1]).astype(np.int64), 0, gt.height - 1)
    return not bool(np.any(gt.values[iy, ix] >= threshold))


def spl(results: list[tuple[bool, float, float]]) -> float:
    """Mean of success * gt_length / max(produced_length, gt_length)."""
    if not results:
        raise EmptyResultSet("no episodes to aggregate")
    total = 0.0
    for success, gt_length, produced_length in results:
        if not success:
            continue
        if gt_length <= 0:
            raise ValueError("gt_length must be positive for successful episodes")
        total += gt_length / max(produced_length, gt_length)
    return total / len(results)


def dtw(a, b) -> float:
    """Dynamic time warping with Euclidean point distance (classic DP)."""
    pa = np.asarray(a, dtype=np.float64)
    pb = np.asarray(b, dtype=np.float64)
    if pa.size == 0 or pb.size == 0:
        raise EmptySequence("DTW inputs must be nonempty")
    pa = pa.reshape(len(pa), -1)
    pb = pb.reshape(len(pb), -1)

    d = np.sqrt(((pa[:, None, :] - pb[None, :, :]) ** 2).sum(axis=2))
    m, n = d.shape
    acc = np.empty((m, n))
    acc[0, :] = np.cumsum(d[0, :])
    acc[:, 0] = np.cumsum(d[:, 0])
    for i in range(1, m):
        for j in range(1, n):
            acc[i, j] = d[i, j] + min(acc[i - 1, j], acc[i, j - 1], acc[i - 1, j - 1])
    return float(acc[m - 1, n - 1])


def resample_path(path, count: int = 64) -> np.ndarray:
    """Resample a polyline to `count` points at equal arclength spacing,
    endpoints included."""
    pts = _as_points(path)
    if pts is None or len(pts) < 2:
        raise DegeneratePath("need at least two points to resample")
    if count < 2:
        raise ValueError("count must be at least 2")
    deltas = np.diff(pts, axis=0)
    seg_lengths = np.hypot(deltas[:, 0], deltas[:, 1])
    total = float(seg_lengths.sum())
    if total <= 0.0:
        raise DegeneratePath("path has zero length")

    cumulative = np.concatenate([[0.0], np.cumsum(seg_lengths)])
    targets = np.linspace(0.0, total, count)
    seg_idx = np.clip(np.searchsorted(cumulative, targets, side="right") - 1,
                      0, len(seg_lengths) - 1)
    seg_start = cumulative[seg_idx]
    with np.errstate(invalid="ignore", divide="ignore"):
        frac = np.where(seg_lengths[seg_idx] > 0,
                        (targets - seg_start) / seg_lengths[seg_idx], 0.0)
    out = pts[seg_idx] + frac[:, None] * deltas[seg_idx]
    out[-1] = pts[-1]
    return out


@dataclass(frozen=True)
class EvalResult:
    success: bool
    produced_length: float
    gt_length: float
    spl_term: float
    dtw: float | None
    hidden_cost: float | None
    hidden_cost_nodes: float | None


def evaluate_path(path, gt_cost: CostMap, gt_path, threshold: float = 0.5,
                  delta: float = 0.5, resample_count: int = 64) -> EvalResult:
    """Score one produced path against the stored ground-truth solution.

    hidden_cost integrates ground-truth cost along the produced path (same
    sampling rule as edge costs); hidden_cost_nodes sums it at the vertices.
    """
    gt_pts = _as_points(gt_path)
    gt_length = polyline_length(gt_pts)
    pts = _as_points(path)
    if pts is None:
        return EvalResult(False, 0.0, gt_length, 0.0, None, None, None)

    success = check_success(pts, gt_cost, threshold=threshold, delta=delta)
    produced_length = polyline_length(pts)
    spl_term = (gt_length / max(produced_length, gt_length)) if success else 0.0

    integral = 0.0
    for a, b in zip(pts, pts[1:]):
        length = float(np.hypot(b[0] - a[0], b[1] - a[1]))
        m = max(2, int(math.ceil(length / delta)) + 1)
        t = np.arange(m) / (m - 1)
        seg = a[None, :] + t[:, None] * (b - a)[None, :]
        ix = np.clip(np.floor(seg[:, 0]).astype(np.int64), 0, gt_cost.width - 1)
        iy = np.clip(np.floor(seg[:, 1]).astype(np.int64), 0, gt_cost.height - 1)
        integral += float(gt_cost.values[iy, ix].sum() * (length / m))

    ixn = np.clip(np.floor(pts[:, 0]).astype(np.int64), 0, gt_cost.width - 1)
    iyn = np.clip(np.floor(pts[:, 1]).astype(np.int64), 0, gt_cost.height - 1)
    node_sum = float(gt_cost.values[iyn, ixn].sum())

    if len(pts) >= 2 and gt_length > 0:
        dtw_value = dtw(resample_path(pts, resample_count),
                        resample_path(gt_pts, resample_count))
    else:
        dtw_value = dtw(pts, gt_pts)
    return EvalResult(success, produced_length, gt_length, spl_term,
                      float(dtw_value), integral, node_sum)
