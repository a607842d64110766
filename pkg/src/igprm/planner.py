"""Instruction-guided probabilistic roadmaps.

Node sampling rejects proposals with probability growing in the predicted
cost (acceptance eps/(eps + cost)), edges accumulate cost at regular points
along each segment, and Dijkstra returns the minimum-total-cost path. With a
zero cost map the whole thing reduces to a standard uniform PRM.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .envgen import CellClass, CostMap, EnvironmentMap
from .errors import DegenerateEdge, SamplingStalled

_PROPOSAL_CHUNK = 2048


@dataclass(frozen=True)
class PlannerParams:
    n_nodes: int = 150
    epsilon: float = 0.1           # inverse-cost floor in the acceptance ratio
    uniform_mix: float = 0.1       # fraction of nodes sampled uniformly
    k_neighbors: int = 15
    sample_interval: float = 0.5   # cells between points on an edge
    # lambda in the (lambda + cost) edge integrand; small enough that crossing
    # a unit-cost region is never cheaper than any in-map detour, so searches
    # stay length-minimizing among cost-free routes
    length_weight: float = 0.02
    seed: int = 0

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if not 0.0 <= self.uniform_mix <= 1.0:
            raise ValueError("uniform_mix must lie in [0, 1]")
        if self.sample_interval <= 0:
            raise ValueError("sample_interval must be positive")
        if self.k_neighbors < 1:
            raise ValueError("k_neighbors must be at least 1")
        if self.n_nodes < 0:
            raise ValueError("n_nodes must be non-negative")


@dataclass(frozen=True)
class PlanPath:
    indices: tuple[int, ...]
    nodes: np.ndarray            # (T, 2) positions
    edge_costs: tuple[float, ...]
    total_cost: float
    length: float

    def __post_init__(self):
        nodes = np.ascontiguousarray(self.nodes, dtype=np.float64)
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)


class Roadmap:
    """Sampled nodes plus collision-free weighted edges; nodes 0 and 1 are
    the current start and goal. Immutable once built; requery replaces only
    the two endpoint nodes and their incident edges."""

    def __init__(self, nodes: np.ndarray, edges: list[tuple[int, int, float]],
                 params: PlannerParams, sampling_stalled: bool = False):
        self.nodes = np.ascontiguousarray(nodes, dtype=np.float64)
        self.nodes.setflags(write=False)
        self.edges = list(edges)
        self.params = params
        self.sampling_stalled = sampling_stalled
        self.adjacency: list[list[tuple[int, float]]] = [[] for _ in range(len(self.nodes))]
        for i, j, cost in self.edges:
            self.adjacency[i].append((j, cost))
            self.adjacency[j].append((i, cost))

    @property
    def start_index(self) -> int:
        return 0

    @property
    def goal_index(self) -> int:
        return 1

    def interior_nodes(self) -> np.ndarray:
        return self.nodes[2:]

    def interior_edges(self) -> list[tuple[int, int, float]]:
        return [(i, j, c) for i, j, c in self.edges if i >= 2 and j >= 2]

    def to_dict(self) -> dict:
        return {
            "nodes": [[float(x), float(y)] for x, y in self.nodes],
            "edges": [[int(i), int(j), float(c)] for i, j, c in self.edges],
            "params": {
                "n_nodes": self.params.n_nodes,
                "epsilon": self.params.epsilon,
                "uniform_mix": self.params.uniform_mix,
                "k_neighbors": self.params.k_neighbors,
                "sample_interval": self.params.sample_interval,
                "length_weight": self.params.length_weight,
                "seed": self.params.seed,
            },
            "sampling_stalled": self.sampling_stalled,
        }

    def save_json(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def from_dict(cls, payload: dict) -> "Roadmap":
        params = PlannerParams(**payload["params"])
        edges = [(int(i), int(j), float(c)) for i, j, c in payload["edges"]]
        return cls(np.asarray(payload["nodes"], dtype=np.float64), edges, params,
                   payload.get("sampling_stalled", False))


def _cell_indices(points: np.ndarray, height: int, width: int) -> tuple[np.ndarray, np.ndarray]:
    ix = np.clip(np.floor(points[..., 0]).astype(np.int64), 0, width - 1)
    iy = np.clip(np.floor(points[..., 1]).astype(np.int64), 0, height - 1)
    return iy, ix


def _draw_points(rng: np.random.Generator, count: int, width: int, height: int
                 ) -> np.ndarray:
    pts = np.empty((count, 2))
    pts[:, 0] = rng.random(count) * width
    pts[:, 1] = rng.random(count) * height
    return pts


def sample_nodes(cost: CostMap, env: EnvironmentMap, params: PlannerParams,
                 ) -> tuple[np.ndarray, bool]:
    """Draw params.n_nodes positions in non-WALL cells.

    ceil(uniform_mix * n) nodes come from plain uniform rejection; the rest
    accept with probability eps/(eps + cost(cell)). If the biased stage burns
    1000*n rejections it falls back to uniform for the remainder and reports
    stalled=True. Returns (positions, stalled).
    """
    if cost.values.shape != env.cells.shape:
        raise ValueError("cost map and environment dimensions differ")
    n = params.n_nodes
    if n == 0:
        return np.empty((0, 2)), False

    wall = np.asarray(env.cells) == CellClass.WALL
    if wall.all():
        raise SamplingStalled("no free cells to sample from")

    rng = np.random.default_rng(params.seed)
    height, width = env.cells.shape
    budget = 1000 * n
    eps = params.epsilon
    n_uniform = int(math.ceil(params.uniform_mix * n))
    n_uniform = min(n_uniform, n)

    accepted: list[np.ndarray] = []

    def run_stage(target: int, biased: bool) -> tuple[int, bool]:
        got, rejected = 0, 0
        while got < target:
            pts = _draw_points(rng, _PROPOSAL_CHUNK, width, height)
            iy, ix = _cell_indices(pts, height, width)
            keep = ~wall[iy, ix]
            if biased:
                u = rng.random(_PROPOSAL_CHUNK)
                keep &= u < eps / (eps + cost.values[iy, ix])
            kept = pts[keep]
            take = min(len(kept), target - got)
            # proposals after the last accepted one in this chunk are unused,
            # not rejected
            if take < len(kept):
                used = np.flatnonzero(keep)[take - 1] + 1 if take else 0
                rejected += int(used - take)
            else:
                rejected += int(_PROPOSAL_CHUNK - keep.sum())
            accepted.append(kept[:take])
            got += take
            if rejected > budget:
                return got, True
        return got, False

    got, stalled_u = run_stage(n_uniform, biased=False)
    if stalled_u and got < n_uniform:
        raise SamplingStalled(
            f"uniform sampling stalled after {budget} rejections ({got}/{n_uniform})")

    remaining = n - n_uniform
    stalled = False
    if remaining > 0:
        got_b, stalled = run_stage(remaining, biased=True)
        if stalled and got_b < remaining:
            got_f, stalled_f = run_stage(remaining - got_b, biased=False)
            if stalled_f and got_f < remaining - got_b:
                raise SamplingStalled("uniform fallback stalled as well")

    return np.concatenate(accepted, axis=0), stalled


def _canonical(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Order endpoints lexicographically so sampling is direction-independent."""
    if (b[0], b[1]) < (a[0], a[1]):
        return b, a
    return a, b


def edge_cost(a, b, cost: CostMap, env: EnvironmentMap, params: PlannerParams,
              ) -> float | None:
    """Accumulated (length_weight + cost) along the segment, or None if any
    sampled point falls in a WALL cell."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if np.array_equal(a, b):
        raise DegenerateEdge(f"edge endpoints coincide at {tuple(a)}")
    a, b = _canonical(a, b)

    length = float(np.hypot(b[0] - a[0], b[1] - a[1]))
    m = max(2, int(math.ceil(length / params.sample_interval)) + 1)
    t = np.arange(m) / (m - 1)
    pts = a[None, :] + t[:, None] * (b - a)[None, :]
    iy, ix = _cell_indices(pts, env.cells.shape[0], env.cells.shape[1])
    if np.any(np.asarray(env.cells)[iy, ix] == CellClass.WALL):
        return None
    integrand = params.length_weight + cost.values[iy, ix].astype(np.float64)
    return float(integrand.sum() * (length / m))


def _eval_edges(pairs: np.ndarray, nodes: np.ndarray, cost: CostMap,
                env: EnvironmentMap, params: PlannerParams,
                ) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized edge_cost over (E, 2) index pairs; returns (costs, blocked).

    Matches the scalar edge_cost semantics point for point (same canonical
    orientation, same sample positions)."""
    if len(pairs) == 0:
        return np.empty(0), np.empty(0, dtype=bool)
    a = nodes[pairs[:, 0]]
    b = nodes[pairs[:, 1]]
    swap = (b[:, 0] < a[:, 0]) | ((b[:, 0] == a[:, 0]) & (b[:, 1] < a[:, 1]))
    aa = np.where(swap[:, None], b, a)
    bb = np.where(swap[:, None], a, b)

    length = np.hypot(bb[:, 0] - aa[:, 0], bb[:, 1] - aa[:, 1])
    m = np.maximum(2, np.ceil(length / params.sample_interval).astype(np.int64) + 1)
    m_max = int(m.max())
    steps = np.arange(m_max)
    valid = steps[None, :] < m[:, None]
    t = np.where(valid, steps[None, :] / (m - 1)[:, None], 0.0)
    pts = aa[:, None, :] + t[:, :, None] * (bb - aa)[:, None, :]
    iy, ix = _cell_indices(pts, env.cells.shape[0], env.cells.shape[1])
    blocked = ((np.asarray(env.cells)[iy, ix] == CellClass.WALL) & valid).any(axis=1)
    integrand = (params.length_weight + cost.values[iy, ix].astype(np.float64)) * valid
    costs = integrand.sum(axis=1) * (length / m)
    return costs, blocked


def _knn_pairs(nodes: np.ndarray, k: int) -> set[tuple[int, int]]:
    """Undirected pairs (i, j) where j is among i's k nearest neighbors."""
    n = len(nodes)
    if n < 2:
        return set()
    k = min(k, n - 1)
    d2 = ((nodes[:, None, :] - nodes[None, :, :]) ** 2).sum(axis=2)
    np.fill_diagonal(d2, np.inf)
    neighbor_idx = np.argpartition(d2, k - 1, axis=1)[:, :k]
    pairs = set()
    for i in range(n):
        for j in neighbor_idx[i]:
            pairs.add((min(i, int(j)), max(i, int(j))))
    return pairs


def _endpoint_pairs(endpoint: int, other: int, nodes: np.ndarray, k: int,
                    ) -> set[tuple[int, int]]:
    """Connect one endpoint to its k nearest nodes among interior + the other
    endpoint (interior kNN structure is left untouched for requeries)."""
    candidates = np.concatenate([[other], np.arange(2, len(nodes))])
    if len(candidates) == 0:
        return set()
    d2 = ((nodes[candidates] - nodes[endpoint]) ** 2).sum(axis=1)
    k = min(k, len(candidates))
    chosen = candidates[np.argpartition(d2, k - 1)[:k]] if k < len(candidates) else candidates
    return {(min(endpoint, int(j)), max(endpoint, int(j))) for j in chosen
            if not np.array_equal(nodes[endpoint], nodes[j])}


def _assemble(env: EnvironmentMap, cost: CostMap, start, goal,
              params: PlannerParams, interior: np.ndarray,
              interior_edges: list[tuple[int, int, float]] | None,
              stalled: bool) -> Roadmap:
    nodes = np.vstack([np.asarray(start, dtype=np.float64)[None, :],
                       np.asarray(goal, dtype=np.float64)[None, :],
                       interior])

    if interior_edges is None:
        pairs = {(i + 2, j + 2) for i, j in _knn_pairs(interior, params.k_neighbors)}
    else:
        pairs = set()
    pairs |= _endpoint_pairs(0, 1, nodes, params.k_neighbors)
    pairs |= _endpoint_pairs(1, 0, nodes, params.k_neighbors)

    pair_arr = np.asarray(sorted(pairs), dtype=np.int64).reshape(-1, 2)
    costs, blocked = _eval_edges(pair_arr, nodes, cost, env, params)
    edges = [(int(i), int(j), float(c))
             for (i, j), c, bad in zip(pair_arr, costs, blocked) if not bad]
    if interior_edges is not None:
        edges.extend(interior_edges)
    return Roadmap(nodes, edges, params, sampling_stalled=stalled)


def build_roadmap(env: EnvironmentMap, cost: CostMap, start, goal,
                  params: PlannerParams) -> Roadmap:
    """Sample nodes and connect k-nearest neighbors with collision-checked,
    cost-weighted edges. Nodes 0 and 1 are start and goal."""
    for name, pos in (("start", start), ("goal", goal)):
        iy, ix = _cell_indices(np.asarray(pos, dtype=np.float64)[None, :],
                               env.cells.shape[0], env.cells.shape[1])
        if env.cells[iy[0], ix[0]] == CellClass.WALL:
            raise ValueError(f"{name} position {tuple(pos)} lies in a wall cell")
    interior, stalled = sample_nodes(cost, env, params)
    return _assemble(env, cost, start, goal, params, interior, None, stalled)


def requery(roadmap: Roadmap, env: EnvironmentMap, cost: CostMap, start, goal,
            ) -> Roadmap:
    """New roadmap reusing the sampled interior nodes and their edges; only
    the two endpoints and their incident edges are rebuilt."""
    return _assemble(env, cost, start, goal, roadmap.params,
                     roadmap.interior_nodes(), roadmap.interior_edges(),
                     roadmap.sampling_stalled)


def shortest_path(rm: Roadmap, start_idx: int = 0, goal_idx: int = 1,
                  ) -> PlanPath | None:
    """Dijkstra with a binary heap; ties broken toward smaller node index.
    Returns None when the goal is unreachable."""
    n = len(rm.nodes)
    if not (0 <= start_idx < n and 0 <= goal_idx < n):
        raise IndexError("node index out of range")
    if start_idx == goal_idx:
        pos = rm.nodes[start_idx:start_idx + 1]
        return PlanPath((start_idx,), pos, (), 0.0, 0.0)

    dist = np.full(n, np.inf)
    dist[start_idx] = 0.0
    parent = np.full(n, -1, dtype=np.int64)
    done = np.zeros(n, dtype=bool)
    heap: list[tuple[float, int]] = [(0.0, start_idx)]
    while heap:
        d, node = heapq.heappop(heap)
        if done[node]:
            continue
        done[node] = True
        if node == goal_idx:
            break
        for neighbor, weight in rm.adjacency[node]:
            nd = d + weight
            if nd < dist[neighbor]:
                dist[neighbor] = nd
                parent[neighbor] = node
                heapq.heappush(heap, (nd, neighbor))

    if not np.isfinite(dist[goal_idx]):
        return None

    order = [goal_idx]
    while order[-1] != start_idx:
        order.append(int(parent[order[-1]]))
    order.reverse()

    costs = []
    for i, j in zip(order, order[1:]):
        weight = next(w for nb, w in rm.adjacency[i] if nb == j)
        costs.append(weight)
    nodes = rm.nodes[order]
    length = float(np.hypot(*(np.diff(nodes, axis=0).T)).sum())
    return PlanPath(tuple(order), nodes, tuple(costs), float(dist[goal_idx]), length)


def plan(env: EnvironmentMap, cost: CostMap, start, goal, params: PlannerParams,
         roadmap: Roadmap | None = None) -> tuple[PlanPath | None, Roadmap]:
    """Build (or requery) a roadmap and search it. Returns (path, roadmap);
    the roadmap can be passed back in for further queries on the same map
    and instruction without resampling."""
    if roadmap is None:
        rm = build_roadmap(env, cost, start, goal, params)
    else:
        rm = requery(roadmap, env, cost, start, goal)
    return shortest_path(rm), rm
