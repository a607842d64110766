"""Problem-instance assembly and the on-disk dataset exchange format.

One directory per dataset: a manifest, the instruction pool with projected
embeddings, the raw 1536-D embedding cache, and one folder per instance
holding map.pgm, cost.pgm, and meta.json. The manifest is written last and
acts as the commit point; a FAILED marker is left behind on abort.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from . import envgen, instructions as instr, metrics, planner
from .envgen import CostMap, EnvironmentMap, InstructionClass
from .errors import DatasetInvalid, NoValidCrop, OracleFailed, PlacementFailed
from .seeding import derive_seed

SPLITS = ("train", "val", "test_known", "test_unknown")
DEFAULT_POOL_SIZE = {"synthetic": 132, "indoor": 90}


@dataclass(frozen=True)
class ProblemInstance:
    id: int
    env: EnvironmentMap
    instruction_id: int
    start: tuple[float, float]
    goal: tuple[float, float]
    gt_cost: CostMap
    gt_path: np.ndarray
    split: str


def _round6(value: float) -> float:
    return float(round(float(value), 6))


def gen_gt_path(env: EnvironmentMap, gt_cost: CostMap, start, goal,
                n: int = 400, seed: int = 0, retries: int = 10) -> np.ndarray:
    """Plan on the ground-truth cost map with an n-node roadmap; retry with
    fresh seeds until the result clears check_success. Coordinates are
    rounded to 6 decimals before validation so the stored path re-validates
    bit-exactly after a round trip."""
    for attempt in range(retries):
        params = planner.PlannerParams(n_nodes=n, seed=derive_seed(seed, "oracle", attempt))
        path, _ = planner.plan(env, gt_cost, start, goal, params)
        if path is None:
            continue
        rounded = np.round(path.nodes, 6)
        if metrics.check_success(rounded, gt_cost):
            return rounded
    raise OracleFailed(f"no valid ground-truth path after {retries} attempts")


def _pick_indoor_endpoints(env: EnvironmentMap, rng: np.random.Generator,
                           min_separation_frac: float = 0.5, attempts: int = 200,
                           ) -> tuple[tuple[float, float], tuple[float, float]] | None:
    """Random FREE cells, far apart and connected through FREE space."""
    free_cells = np.argwhere(np.asarray(env.cells) == envgen.CellClass.FREE)
    if len(free_cells) < 2:
        return None
    min_sep = min_separation_frac * min(env.height, env.width)
    passable = np.asarray(env.cells) == envgen.CellClass.FREE
    for _ in range(attempts):
        si, gi = rng.integers(0, len(free_cells), size=2)
        sy, sx = free_cells[si]
        gy, gx = free_cells[gi]
        if np.hypot(gx - sx, gy - sy) < min_sep:
            continue
        if envgen.flood_connected(passable, (sx, sy), (gx, gy)):
            return (sx + 0.5, sy + 0.5), (gx + 0.5, gy + 0.5)
    return None


def _split_instruction_pool(records: list[instr.InstructionRecord], seed: int,
                            unknown_fraction: float) -> None:
    """Withhold a per-class fraction of sentences for the unknown test split."""
    rng = np.random.default_rng(derive_seed(seed, "instruction-split"))
    by_class: dict[InstructionClass, list[int]] = {}
    for idx, rec in enumerate(records):
        by_class.setdefault(rec.cls, []).append(idx)
    for cls_indices in by_class.values():
        order = rng.permutation(len(cls_indices))
        n_unknown = max(1, int(np.ceil(unknown_fraction * len(cls_indices))))
        for pos in order[:n_unknown]:
            records[cls_indices[pos]].split_tag = "test_unknown"


def _instance_counts(counts: tuple[int, int, int]) -> dict[str, int]:
    train, val, test = counts
    if train <= 0 or val <= 0 or test <= 0:
        raise ValueError("counts must be positive")
    return {"train": train, "val": val,
            "test_known": test // 2, "test_unknown": test - test // 2}


def build_dataset(kind: str, out_dir: str, counts: tuple[int, int, int] = (800, 100, 200),
                  seed: int = 0, k: int = 16, projection_seed: int | None = None,
                  embedding_mode: str = "offline",
                  endpoint_config: "instr.EndpointConfig | None" = None,
                  instruction_count: int | None = None,
                  unknown_fraction: float = 0.25,
                  oracle_nodes: int = 400,
                  maps_dir: str | None = None,
                  step_count: int = 20, step_size: int = 4,
                  max_regen: int = 100,
                  synth_config: envgen.SynthConfig | None = None,
                  ) -> "Dataset":
    """Generate and serialize a full dataset; deterministic per seed."""
    if kind not in ("synthetic", "indoor"):
        raise ValueError(f"unknown kind {kind!r}")
    if kind == "indoor":
        if not maps_dir:
            raise ValueError("indoor datasets need --maps with source PGM files")
        map_paths = sorted(
            os.path.join(maps_dir, f) for f in os.listdir(maps_dir)
            if f.lower().endswith(".pgm"))
        if not map_paths:
            raise ValueError(f"no .pgm maps found in {maps_dir}")

    os.makedirs(out_dir, exist_ok=True)
    failed_marker = os.path.join(out_dir, "FAILED")
    if os.path.exists(failed_marker):
        os.remove(failed_marker)

    try:
        projection_seed = (derive_seed(seed, "projection") & 0x7FFFFFFF
                           if projection_seed is None else projection_seed)
        pool_size = instruction_count or DEFAULT_POOL_SIZE[kind]
        sentences = instr.generate_instructions(kind, pool_size)
        records = [instr.InstructionRecord(id=i, text=text, cls=cls)
                   for i, (text, cls) in enumerate(sentences)]
        _split_instruction_pool(records, seed, unknown_fraction)

        cache = instr.EmbeddingCache(os.path.join(out_dir, "embeddings.jsonl"))
        if embedding_mode == "offline":
            model_name = instr.PSEUDO_MODEL_NAME
            for rec in records:
                if cache.get(rec.text, model_name) is None:
                    cache.put(rec.text, model_name, instr.pseudo_embed(rec.text))
                rec.embedding1536 = cache.get(rec.text, model_name)
        elif embedding_mode == "endpoint":
            if endpoint_config is None:
                raise ValueError("endpoint mode needs an EndpointConfig")
            model_name = endpoint_config.model
            for rec in records:
                rec.embedding1536 = instr.fetch_embedding(endpoint_config, rec.text, cache)
        else:
            raise ValueError(f"unknown embedding_mode {embedding_mode!r}")

        projection = instr.make_projection(projection_seed, k)
        for rec in records:
            rec.projected = instr.project(rec.embedding1536, projection)

        with open(os.path.join(out_dir, "instructions.jsonl"), "w", encoding="utf-8") as fh:
            for rec in records:
                fh.write(json.dumps({
                    "id": rec.id, "text": rec.text, "cls": rec.cls.value,
                    "split_tag": rec.split_tag,
                    "projected": [float(v) for v in rec.projected],
                }) + "\n")

        known_pool = {}
        unknown_pool = {}
        for rec in records:
            pool = unknown_pool if rec.split_tag == "test_unknown" else known_pool
            pool.setdefault(rec.cls, []).append(rec.id)
        classes = instr.classes_for_kind(kind)

        per_split = _instance_counts(counts)
        instances_dir = os.path.join(out_dir, "instances")
        os.makedirs(instances_dir, exist_ok=True)

        instance_id = 0
        for split in SPLITS:
            pool = unknown_pool if split == "test_unknown" else known_pool
            for _ in range(per_split[split]):
                _write_instance(kind, instances_dir, instance_id, split, pool,
                                classes, seed, oracle_nodes, max_regen,
                                map_paths if kind == "indoor" else None,
                                step_count, step_size, synth_config)
                instance_id += 1

        meta = {
            "kind": kind,
            "counts": per_split,
            "seed": seed,
            "projection_seed": projection_seed,
            "k": k,
            "embedding_model": model_name,
            "oracle_nodes": oracle_nodes,
            "instruction_count": pool_size,
        }
        with open(os.path.join(out_dir, "meta.json"), "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2)
    except BaseException:
        with open(failed_marker, "w", encoding="utf-8") as fh:
            fh.write("dataset build aborted\n")
        raise

    return Dataset(out_dir)


def _write_instance(kind: str, instances_dir: str, instance_id: int, split: str,
                    pool: dict, classes, seed: int, oracle_nodes: int,
                    max_regen: int, map_paths, step_count: int, step_size: int,
                    synth_config) -> None:
    for attempt in range(max_regen):
        rng = np.random.default_rng(derive_seed(seed, "instance", instance_id, attempt))
        env_seed = int(derive_seed(seed, "env", instance_id, attempt) & 0x7FFFFFFF)

        if kind == "synthetic":
            env, start, goal = envgen.gen_synthetic_env(env_seed, synth_config)
        else:
            path = map_paths[int(rng.integers(len(map_paths)))]
            try:
                env = envgen.load_indoor_map(path, crop_seed=env_seed)
                env = envgen.place_step_obstacles(env, seed=env_seed + 1,
                                                  count=step_count, size=step_size)
            except (NoValidCrop, PlacementFailed):
                continue
            endpoints = _pick_indoor_endpoints(env, rng)
            if endpoints is None:
                continue
            start, goal = endpoints

        cls = classes[int(rng.integers(len(classes)))]
        candidates = pool.get(cls, [])
        if not candidates:
            raise DatasetInvalid(f"no {split} instructions available for {cls.value}")
        instruction_id = int(candidates[int(rng.integers(len(candidates)))])

        gt_cost = envgen.gt_cost_map(env, cls)
        try:
            gt_path = gen_gt_path(env, gt_cost, start, goal, n=oracle_nodes,
                                  seed=derive_seed(seed, "gtpath", instance_id, attempt))
        except OracleFailed:
            continue

        inst_dir = os.path.join(instances_dir, f"{instance_id:06d}")
        os.makedirs(inst_dir, exist_ok=True)
        envgen.save_env_pgm(env, os.path.join(inst_dir, "map.pgm"))
        envgen.save_cost_pgm(gt_cost, os.path.join(inst_dir, "cost.pgm"))
        meta = {
            "id": instance_id,
            "instruction_id": instruction_id,
            "start": [_round6(start[0]), _round6(start[1])],
            "goal": [_round6(goal[0]), _round6(goal[1])],
            "gt_path": [[_round6(x), _round6(y)] for x, y in gt_path],
            "split": split,
        }
        with open(os.path.join(inst_dir, "meta.json"), "w", encoding="utf-8") as fh:
            json.dump(meta, fh)
        return
    raise DatasetInvalid(
        f"instance {instance_id} ({split}) failed {max_regen} regeneration attempts")


class Dataset:
    """Read-side view of a dataset directory."""

    def __init__(self, root: str):
        self.root = root
        if os.path.exists(os.path.join(root, "FAILED")):
            raise DatasetInvalid(f"{root}: FAILED marker present")
        meta_path = os.path.join(root, "meta.json")
        if not os.path.exists(meta_path):
            raise DatasetInvalid(f"{root}: missing meta.json (incomplete build?)")
        with open(meta_path, encoding="utf-8") as fh:
            self.meta = json.load(fh)

        self.instructions: dict[int, dict] = {}
        with open(os.path.join(root, "instructions.jsonl"), encoding="utf-8") as fh:
            for line in fh:
                rec = json.loads(line)
                rec["cls"] = InstructionClass(rec["cls"])
                rec["projected"] = np.asarray(rec["projected"], dtype=np.float64)
                self.instructions[rec["id"]] = rec

        self.instance_splits: dict[int, str] = {}
        instances_dir = os.path.join(root, "instances")
        for name in sorted(os.listdir(instances_dir)):
            meta_file = os.path.join(instances_dir, name, "meta.json")
            with open(meta_file, encoding="utf-8") as fh:
                inst_meta = json.load(fh)
            self.instance_splits[inst_meta["id"]] = inst_meta["split"]

    def instance_ids(self, split: str | None = None) -> list[int]:
        if split is None:
            return sorted(self.instance_splits)
        return sorted(i for i, s in self.instance_splits.items() if s == split)

    def load_instance(self, instance_id: int) -> ProblemInstance:
        inst_dir = os.path.join(self.root, "instances", f"{instance_id:06d}")
        with open(os.path.join(inst_dir, "meta.json"), encoding="utf-8") as fh:
            meta = json.load(fh)
        env = envgen.load_env_pgm(os.path.join(inst_dir, "map.pgm"), kind=self.meta["kind"])
        gt_cost = envgen.load_cost_pgm(os.path.join(inst_dir, "cost.pgm"))
        return ProblemInstance(
            id=meta["id"], env=env, instruction_id=meta["instruction_id"],
            start=tuple(meta["start"]), goal=tuple(meta["goal"]),
            gt_cost=gt_cost, gt_path=np.asarray(meta["gt_path"], dtype=np.float64),
            split=meta["split"])

    def iter_instances(self, split: str | None = None):
        for instance_id in self.instance_ids(split):
            yield self.load_instance(instance_id)

    def embeddings(self) -> instr.EmbeddingCache:
        return instr.EmbeddingCache(os.path.join(self.root, "embeddings.jsonl"))
