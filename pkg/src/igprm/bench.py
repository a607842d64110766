"""Experiment grid: methods x node counts over dataset test splits.

Per-episode rows go to a CSV with fixed columns; aggregates (success rate,
mean SPL, mean DTW per method/node-count/split) go to a second CSV, and the
report path also renders matplotlib figures next to the delimited output.
"""

from __future__ import annotations

import csv
import os
import time
from dataclasses import dataclass

import numpy as np

from . import costnet, instructions as instr, metrics, planner
from .dataset import Dataset, ProblemInstance
from .envgen import CostMap, to_input_channels
from .errors import DimensionMismatch, EmptyReport, MissingWeights
from .seeding import derive_seed

METHODS = ("igprm_learned", "igprm_oracle", "prm_baseline")
ROW_FIELDS = ("instance_id", "method", "n_nodes", "success", "spl_term", "dtw",
              "produced_length", "hidden_cost", "wall_clock_ms")
AGG_FIELDS = ("method", "n_nodes", "split", "episodes", "success_rate",
              "mean_spl", "mean_dtw")
TEST_SPLITS = ("test_known", "test_unknown")


@dataclass
class Episode:
    instance_id: int
    method: str
    n_nodes: int
    split: str
    success: bool
    spl_term: float
    dtw: float | None
    produced_length: float
    hidden_cost: float | None
    wall_clock_ms: float

    def as_row(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "method": self.method,
            "n_nodes": self.n_nodes,
            "success": int(self.success),
            "spl_term": f"{self.spl_term:.6f}",
            "dtw": "" if self.dtw is None else f"{self.dtw:.6f}",
            "produced_length": f"{self.produced_length:.6f}",
            "hidden_cost": "" if self.hidden_cost is None else f"{self.hidden_cost:.6f}",
            "wall_clock_ms": f"{self.wall_clock_ms:.3f}",
        }


def _predicted_costs(dataset: Dataset, instances: list[ProblemInstance],
                     model: costnet.Model) -> dict[int, CostMap]:
    """One prediction per instance, shared across node counts and trials."""
    out = {}
    for inst in instances:
        projected = dataset.instructions[inst.instruction_id]["projected"]
        if len(projected) != model.k:
            raise DimensionMismatch(
                f"dataset stores {len(projected)}-D projections, model wants {model.k}")
        out[inst.id] = costnet.predict(model, to_input_channels(inst.env), projected)
    return out


def _cost_for(method: str, inst: ProblemInstance,
              predicted: dict[int, CostMap] | None) -> CostMap:
    if method == "igprm_oracle":
        return inst.gt_cost
    if method == "prm_baseline":
        return CostMap.zeros(inst.env.height, inst.env.width)
    if method == "igprm_learned":
        return predicted[inst.id]
    raise ValueError(f"unknown method {method!r}")


def _run_episode(inst: ProblemInstance, cost: CostMap, n_nodes: int,
                 plan_seed: int) -> tuple[metrics.EvalResult, float]:
    params = planner.PlannerParams(n_nodes=n_nodes, seed=plan_seed)
    t0 = time.perf_counter()
    path, _ = planner.plan(inst.env, cost, inst.start, inst.goal, params)
    elapsed_ms = (time.perf_counter() - t0) * 1000.0
    result = metrics.evaluate_path(path, inst.gt_cost, inst.gt_path)
    return result, elapsed_ms


def run_benchmark(dataset: Dataset, methods=("igprm_oracle", "prm_baseline"),
                  node_counts=(50, 150, 300), trials_per_instance: int = 1,
                  seed: int = 0, weights: str | costnet.Model | None = None,
                  splits=TEST_SPLITS, out_dir: str | None = None,
                  limit: int | None = None,
                  ) -> tuple[list[Episode], list[dict]]:
    """Plan and evaluate every (test instance x method x node count x trial).

    Returns (episodes, aggregate rows); when out_dir is given, also writes
    results.csv, aggregates.csv, and SPL/DTW figures there.
    """
    if trials_per_instance < 1:
        raise EmptyReport("trials_per_instance must be at least 1")
    methods = tuple(methods)
    node_counts = tuple(node_counts)
    if not methods or not node_counts:
        raise EmptyReport("need at least one method and one node count")
    for method in methods:
        if method not in METHODS:
            raise ValueError(f"unknown method {method!r}")

    instances: list[ProblemInstance] = []
    for split in splits:
        instances.extend(dataset.iter_instances(split))
    if limit is not None:
        instances = instances[:limit]
    if not instances:
        raise EmptyReport(f"no instances in splits {splits}")

    predicted = None
    if "igprm_learned" in methods:
        if weights is None:
            raise MissingWeights("igprm_learned requires a weight file")
        model = weights if isinstance(weights, costnet.Model) else costnet.load_weights(weights)
        predicted = _predicted_costs(dataset, instances, model)

    episodes: list[Episode] = []
    for inst in instances:
        for method in methods:
            cost = _cost_for(method, inst, predicted)
            for n_nodes in node_counts:
                for trial in range(trials_per_instance):
                    plan_seed = derive_seed(seed, inst.id, method, n_nodes, trial)
                    result, elapsed_ms = _run_episode(inst, cost, n_nodes, plan_seed)
                    episodes.append(Episode(
                        instance_id=inst.id, method=method, n_nodes=n_nodes,
                        split=inst.split, success=result.success,
                        spl_term=result.spl_term, dtw=result.dtw,
                        produced_length=result.produced_length,
                        hidden_cost=result.hidden_cost, wall_clock_ms=elapsed_ms))

    episodes.sort(key=lambda e: (e.instance_id, e.method, e.n_nodes))
    aggregates = aggregate(episodes)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        write_rows(os.path.join(out_dir, "results.csv"), episodes)
        write_aggregates(os.path.join(out_dir, "aggregates.csv"), aggregates)
        plot_node_sweep(aggregates, os.path.join(out_dir, "bench_spl_dtw.png"))
    return episodes, aggregates


def aggregate(episodes: list[Episode], key=lambda e: (e.method, e.n_nodes, e.split),
              key_fields=("method", "n_nodes", "split")) -> list[dict]:
    """Mean SPL (failures count as 0), mean DTW (produced paths only), and
    success rate per group. Groups are sorted for deterministic reports."""
    if not episodes:
        raise EmptyReport("no episodes to aggregate")
    groups: dict[tuple, list[Episode]] = {}
    for ep in episodes:
        groups.setdefault(key(ep), []).append(ep)
    rows = []
    for group_key in sorted(groups, key=lambda t: tuple(str(v) for v in t)):
        group = groups[group_key]
        dtws = [e.dtw for e in group if e.dtw is not None]
        row = dict(zip(key_fields, group_key))
        row.update({
            "episodes": len(group),
            "success_rate": sum(e.success for e in group) / len(group),
            "mean_spl": sum(e.spl_term for e in group) / len(group),
            "mean_dtw": sum(dtws) / len(dtws) if dtws else float("nan"),
        })
        rows.append(row)
    return rows


def write_rows(path: str, episodes: list[Episode]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=ROW_FIELDS)
        writer.writeheader()
        for ep in episodes:
            writer.writerow(ep.as_row())


def write_aggregates(path: str, rows: list[dict], fields=AGG_FIELDS) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for row in rows:
            out = dict(row)
            for col in ("success_rate", "mean_spl", "mean_dtw"):
                out[col] = f"{row[col]:.6f}"
            writer.writerow(out)


def _figure():
    from matplotlib.figure import Figure
    fig = Figure(figsize=(9, 3.6))
    return fig, fig.subplots(1, 2)


def plot_node_sweep(aggregates: list[dict], out_path: str) -> None:
    """SPL and DTW versus node count, one line per (method, split)."""
    fig, (ax_spl, ax_dtw) = _figure()
    series: dict[tuple, list[dict]] = {}
    for row in aggregates:
        series.setdefault((row["method"], row["split"]), []).append(row)
    for (method, split), rows in sorted(series.items()):
        rows = sorted(rows, key=lambda r: r["n_nodes"])
        xs = [r["n_nodes"] for r in rows]
        label = f"{method} ({split})"
        ax_spl.plot(xs, [r["mean_spl"] for r in rows], marker="o", label=label)
        ax_dtw.plot(xs, [r["mean_dtw"] for r in rows], marker="o", label=label)
    ax_spl.set_xlabel("nodes")
    ax_spl.set_ylabel("SPL (higher is better)")
    ax_dtw.set_xlabel("nodes")
    ax_dtw.set_ylabel("DTW (lower is better)")
    ax_spl.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)


def plot_dim_sweep(aggregates: list[dict], out_path: str) -> None:
    """SPL and DTW versus embedding dimension, one line per split."""
    fig, (ax_spl, ax_dtw) = _figure()
    series: dict[str, list[dict]] = {}
    for row in aggregates:
        series.setdefault(row["split"], []).append(row)
    for split, rows in sorted(series.items()):
        rows = sorted(rows, key=lambda r: r["dim"])
        xs = [r["dim"] for r in rows]
        ax_spl.plot(xs, [r["mean_spl"] for r in rows], marker="o", label=split)
        ax_dtw.plot(xs, [r["mean_dtw"] for r in rows], marker="o", label=split)
    for ax in (ax_spl, ax_dtw):
        ax.set_xscale("log", base=2)
        ax.set_xlabel("embedding dimension")
    ax_spl.set_ylabel("SPL (higher is better)")
    ax_dtw.set_ylabel("DTW (lower is better)")
    ax_spl.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)


def run_ablation(dataset: Dataset, dims=(8, 16, 32, 64, 128),
                 weights_by_dim: dict[int, str] | None = None,
                 oracle_substitute: bool = False, n_nodes: int = 150,
                 trials_per_instance: int = 1, seed: int = 0,
                 splits=TEST_SPLITS, out_dir: str | None = None,
                 limit: int | None = None) -> list[dict]:
    """Embedding-dimension sweep at a fixed node count.

    With oracle_substitute the planner sees ground-truth costs, so every dim
    yields identical rows (a plumbing check); otherwise each dim needs a
    weight file trained at that k, and instruction embeddings are reprojected
    from the stored 1536-D vectors."""
    if trials_per_instance < 1:
        raise EmptyReport("trials_per_instance must be at least 1")
    dims = tuple(dims)
    if not dims:
        raise EmptyReport("need at least one dimension")

    instances: list[ProblemInstance] = []
    for split in splits:
        instances.extend(dataset.iter_instances(split))
    if limit is not None:
        instances = instances[:limit]
    if not instances:
        raise EmptyReport(f"no instances in splits {splits}")

    cache = None if oracle_substitute else dataset.embeddings()
    model_name = dataset.meta["embedding_model"]
    projection_seed = dataset.meta["projection_seed"]

    episodes: list[Episode] = []
    dim_of_episode: list[int] = []
    for dim in dims:
        if oracle_substitute:
            costs = {inst.id: inst.gt_cost for inst in instances}
        else:
            if not weights_by_dim or dim not in weights_by_dim:
                raise MissingWeights(f"no weight file for dim {dim}")
            model = costnet.load_weights(weights_by_dim[dim])
            if model.k != dim:
                raise DimensionMismatch(f"weights {weights_by_dim[dim]} have k={model.k}")
            projection = instr.make_projection(projection_seed, dim)
            costs = {}
            for inst in instances:
                text = dataset.instructions[inst.instruction_id]["text"]
                embedding = cache.get(text, model_name)
                if embedding is None:
                    raise DimensionMismatch(f"no stored embedding for {text!r}")
                projected = instr.project(embedding, projection)
                costs[inst.id] = costnet.predict(
                    model, to_input_channels(inst.env), projected)

        for inst in instances:
            for trial in range(trials_per_instance):
                # seed excludes dim so oracle-substitution curves are flat
                plan_seed = derive_seed(seed, inst.id, n_nodes, trial)
                result, elapsed_ms = _run_episode(inst, costs[inst.id], n_nodes, plan_seed)
                episodes.append(Episode(
                    instance_id=inst.id, method="igprm_learned", n_nodes=n_nodes,
                    split=inst.split, success=result.success, spl_term=result.spl_term,
                    dtw=result.dtw, produced_length=result.produced_length,
                    hidden_cost=result.hidden_cost, wall_clock_ms=elapsed_ms))
                dim_of_episode.append(dim)

    groups: dict[tuple, list[Episode]] = {}
    for dim, ep in zip(dim_of_episode, episodes):
        groups.setdefault((dim, ep.split), []).append(ep)
    rows = []
    for (dim, split) in sorted(groups):
        group = groups[(dim, split)]
        dtws = [e.dtw for e in group if e.dtw is not None]
        rows.append({
            "dim": dim, "split": split, "episodes": len(group),
            "success_rate": sum(e.success for e in group) / len(group),
            "mean_spl": sum(e.spl_term for e in group) / len(group),
            "mean_dtw": sum(dtws) / len(dtws) if dtws else float("nan"),
        })
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        write_aggregates(os.path.join(out_dir, "ablation.csv"), rows,
                         fields=("dim", "split", "episodes", "success_rate",
                                 "mean_spl", "mean_dtw"))
        plot_dim_sweep(rows, os.path.join(out_dir, "ablation_spl_dtw.png"))
    return rows


def measure_runtime(inst: ProblemInstance, model: costnet.Model,
                    embedding: np.ndarray, n: int = 300, repeats: int = 100,
                    seed: int = 0) -> tuple[float, float]:
    """Mean wall-clock milliseconds for (cost prediction, planning at n nodes)."""
    channels = to_input_channels(inst.env)
    t0 = time.perf_counter()
    for _ in range(repeats):
        cost = costnet.predict(model, channels, embedding)
    predict_ms = (time.perf_counter() - t0) * 1000.0 / repeats

    t0 = time.perf_counter()
    for i in range(repeats):
        params = planner.PlannerParams(n_nodes=n, seed=derive_seed(seed, "runtime", i))
        planner.plan(inst.env, cost, inst.start, inst.goal, params)
    plan_ms = (time.perf_counter() - t0) * 1000.0 / repeats
    return predict_ms, plan_ms
