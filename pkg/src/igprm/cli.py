"""Command-line interface.

Exit codes: 0 on success, 2 on validation errors (bad arguments, malformed
inputs), 3 on I/O errors. A JSON config file given with --config supplies
defaults for any long option; explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import bench, costnet, dataset as ds, envgen, instructions as instr
from . import metrics, planner, render
from .errors import IgprmError, MissingWeights


def _parse_pair(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected x,y - got {text!r}")
    return float(parts[0]), float(parts[1])


def _parse_ints(text: str) -> tuple[int, ...]:
    return tuple(int(p) for p in text.split(",") if p)


def _load_path_json(path: str) -> np.ndarray:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    return np.asarray(payload["nodes"] if isinstance(payload, dict) else payload,
                      dtype=np.float64)


def _save_path_json(path_obj: planner.PlanPath, out: str) -> None:
    with open(out, "w", encoding="utf-8") as fh:
        json.dump({
            "nodes": [[float(x), float(y)] for x, y in path_obj.nodes],
            "edge_costs": [float(c) for c in path_obj.edge_costs],
            "total_cost": float(path_obj.total_cost),
            "length": float(path_obj.length),
        }, fh)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="igprm", description=__doc__)
    parser.add_argument("--seed", type=int, default=0, help="global random seed")
    parser.add_argument("--config", help="JSON file with default option values")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-synth", help="generate a synthetic wall-and-passage map")
    p.add_argument("--out-map", required=True)
    p.add_argument("--out-meta", help="JSON with start/goal positions")
    p.add_argument("--walls", type=_parse_ints, default=(1, 4), metavar="LO,HI")

    p = sub.add_parser("gen-indoor", help="crop an indoor map and add step obstacles")
    p.add_argument("--map-in", required=True)
    p.add_argument("--out-map", required=True)
    p.add_argument("--steps", type=int, default=20)
    p.add_argument("--step-size", type=int, default=4)

    p = sub.add_parser("gen-instructions", help="expand instruction templates")
    p.add_argument("--kind", choices=("synthetic", "indoor"), required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("embed", help="embed instruction sentences")
    p.add_argument("--instructions", required=True, help="JSONL with text fields")
    p.add_argument("--cache", default="embeddings.jsonl")
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument("--offline", action="store_true")
    mode.add_argument("--endpoint", help="embedding endpoint URL")
    p.add_argument("--model", default="text-embedding-3-small")
    p.add_argument("--credential-env", default="IGPRM_EMBED_KEY")

    p = sub.add_parser("build-dataset", help="generate a full dataset directory")
    p.add_argument("--kind", choices=("synthetic", "indoor"), required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--counts", type=_parse_ints, default=(800, 100, 200),
                   metavar="TRAIN,VAL,TEST")
    p.add_argument("--k", type=int, default=16)
    p.add_argument("--maps", help="directory of source PGMs (indoor only)")
    p.add_argument("--oracle-nodes", type=int, default=400)

    p = sub.add_parser("predict", help="predict a cost map for a map + sentence")
    p.add_argument("--weights", required=True)
    p.add_argument("--map", required=True)
    p.add_argument("--kind", choices=("synthetic", "indoor"), default="synthetic")
    p.add_argument("--text", required=True)
    p.add_argument("--projection-seed", type=int, required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("plan", help="plan a path on a map with a cost map")
    p.add_argument("--map", required=True)
    p.add_argument("--kind", choices=("synthetic", "indoor"), default="synthetic")
    p.add_argument("--cost", help="cost PGM; omit for a plain uniform PRM")
    p.add_argument("--start", type=_parse_pair, required=True)
    p.add_argument("--goal", type=_parse_pair, required=True)
    p.add_argument("--n-nodes", type=int, default=150)
    p.add_argument("--out", required=True, help="path JSON")
    p.add_argument("--out-roadmap", help="roadmap JSON")

    p = sub.add_parser("eval", help="score a produced path against ground truth")
    p.add_argument("--path", required=True, help="path JSON")
    p.add_argument("--gt-cost", required=True, help="ground-truth cost PGM")
    p.add_argument("--gt-path", required=True, help="ground-truth path JSON")

    p = sub.add_parser("bench", help="run the method x node-count grid")
    p.add_argument("--dataset", required=True)
    p.add_argument("--methods", default="igprm_oracle,prm_baseline",
                   help="comma list from: igprm_learned,igprm_oracle,prm_baseline")
    p.add_argument("--node-counts", type=_parse_ints, default=(50, 150, 300))
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--weights")
    p.add_argument("--limit", type=int)
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("ablate", help="sweep embedding dimensions")
    p.add_argument("--dataset", required=True)
    p.add_argument("--dims", type=_parse_ints, default=(8, 16, 32, 64, 128))
    p.add_argument("--weights-pattern", help="e.g. weights_k{dim}.igpw")
    p.add_argument("--oracle-substitute", action="store_true")
    p.add_argument("--n-nodes", type=int, default=150)
    p.add_argument("--limit", type=int)
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("runtime", help="time prediction and planning")
    p.add_argument("--dataset", required=True)
    p.add_argument("--weights", required=True)
    p.add_argument("--instance", type=int, default=0)
    p.add_argument("--n-nodes", type=int, default=300)
    p.add_argument("--repeats", type=int, default=100)

    p = sub.add_parser("render", help="render a map (and optional roadmap/path) to SVG")
    p.add_argument("--map", required=True)
    p.add_argument("--kind", choices=("synthetic", "indoor"), default="synthetic")
    p.add_argument("--roadmap", help="roadmap JSON")
    p.add_argument("--path", help="path JSON")
    p.add_argument("--start", type=_parse_pair)
    p.add_argument("--goal", type=_parse_pair)
    p.add_argument("--out", required=True)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str],
                  args: argparse.Namespace) -> argparse.Namespace:
    """Fill unset options from the JSON config; explicit flags win."""
    if not args.config:
        return args
    with open(args.config, encoding="utf-8") as fh:
        config = json.load(fh)
    if not isinstance(config, dict):
        raise IgprmError("--config must contain a JSON object")
    explicit = {token.split("=", 1)[0].lstrip("-").replace("-", "_")
                for token in argv if token.startswith("--")}
    for key, value in config.items():
        dest = key.replace("-", "_")
        if not hasattr(args, dest):
            raise IgprmError(f"config key {key!r} matches no option of this command")
        if dest in explicit:
            continue
        current = getattr(args, dest)
        if isinstance(value, str) and isinstance(current, tuple):
            value = _parse_ints(value)
        if isinstance(value, list):
            value = tuple(value)
        setattr(args, dest, value)
    return args


def _cmd_gen_synth(args) -> int:
    cfg = envgen.SynthConfig(wall_count_range=tuple(args.walls))
    env, start, goal = envgen.gen_synthetic_env(args.seed, cfg)
    envgen.save_env_pgm(env, args.out_map)
    if args.out_meta:
        with open(args.out_meta, "w", encoding="utf-8") as fh:
            json.dump({"start": list(start), "goal": list(goal), "kind": env.kind}, fh)
    print(f"wrote {args.out_map} ({env.width}x{env.height}, "
          f"{len(env.passages) // 2} walls)")
    return 0


def _cmd_gen_indoor(args) -> int:
    env = envgen.load_indoor_map(args.map_in, crop_seed=args.seed)
    env = envgen.place_step_obstacles(env, seed=args.seed + 1, count=args.steps,
                                      size=args.step_size)
    envgen.save_env_pgm(env, args.out_map)
    print(f"wrote {args.out_map}")
    return 0


def _cmd_gen_instructions(args) -> int:
    sentences = instr.generate_instructions(args.kind, args.count)
    with open(args.out, "w", encoding="utf-8") as fh:
        for i, (text, cls) in enumerate(sentences):
            fh.write(json.dumps({"id": i, "text": text, "cls": cls.value}) + "\n")
    print(f"wrote {len(sentences)} sentences to {args.out}")
    return 0


def _cmd_embed(args) -> int:
    texts = []
    with open(args.instructions, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                texts.append(json.loads(line)["text"])
    cache = instr.EmbeddingCache(args.cache)
    if args.offline:
        for text in texts:
            if cache.get(text, instr.PSEUDO_MODEL_NAME) is None:
                cache.put(text, instr.PSEUDO_MODEL_NAME, instr.pseudo_embed(text))
    else:
        config = instr.EndpointConfig(url=args.endpoint, model=args.model,
                                      credential_env=args.credential_env,
                                      cache_path=args.cache)
        for text in texts:
            instr.fetch_embedding(config, text, cache)
    print(f"cache {args.cache} now holds {len(cache)} embeddings")
    return 0


def _cmd_build_dataset(args) -> int:
    if len(args.counts) != 3:
        raise IgprmError("--counts needs TRAIN,VAL,TEST")
    ds.build_dataset(args.kind, args.out, counts=tuple(args.counts), seed=args.seed,
                     k=args.k, maps_dir=args.maps, oracle_nodes=args.oracle_nodes)
    print(f"dataset written to {args.out}")
    return 0


def _cmd_predict(args) -> int:
    model = costnet.load_weights(args.weights)
    env = envgen.load_env_pgm(args.map, kind=args.kind)
    embedding = instr.pseudo_embed(args.text)
    projection = instr.make_projection(args.projection_seed, model.k)
    cost = costnet.predict(model, envgen.to_input_channels(env),
                           instr.project(embedding, projection))
    envgen.save_cost_pgm(cost, args.out)
    print(f"wrote {args.out}")
    return 0


def _cmd_plan(args) -> int:
    env = envgen.load_env_pgm(args.map, kind=args.kind)
    cost = (envgen.load_cost_pgm(args.cost) if args.cost
            else envgen.CostMap.zeros(env.height, env.width))
    params = planner.PlannerParams(n_nodes=args.n_nodes, seed=args.seed)
    path, roadmap = planner.plan(env, cost, args.start, args.goal, params)
    if args.out_roadmap:
        roadmap.save_json(args.out_roadmap)
    if path is None:
        print("no path found")
        return 0
    _save_path_json(path, args.out)
    print(f"path with {len(path.nodes)} nodes, cost {path.total_cost:.3f}, "
          f"length {path.length:.3f}")
    return 0


def _cmd_eval(args) -> int:
    produced = _load_path_json(args.path)
    gt_path = _load_path_json(args.gt_path)
    gt_cost = envgen.load_cost_pgm(args.gt_cost)
    result = metrics.evaluate_path(produced, gt_cost, gt_path)
    print(json.dumps({
        "success": result.success,
        "spl_term": result.spl_term,
        "dtw": result.dtw,
        "produced_length": result.produced_length,
        "gt_length": result.gt_length,
        "hidden_cost": result.hidden_cost,
    }, indent=2))
    return 0


def _cmd_bench(args) -> int:
    data = ds.Dataset(args.dataset)
    methods = tuple(m for m in args.methods.split(",") if m)
    bench.run_benchmark(data, methods=methods, node_counts=tuple(args.node_counts),
                        trials_per_instance=args.trials, seed=args.seed,
                        weights=args.weights, out_dir=args.out_dir, limit=args.limit)
    print(f"report written to {args.out_dir}")
    return 0


def _cmd_ablate(args) -> int:
    data = ds.Dataset(args.dataset)
    weights_by_dim = None
    if not args.oracle_substitute:
        if not args.weights_pattern:
            raise MissingWeights("--weights-pattern or --oracle-substitute required")
        weights_by_dim = {dim: args.weights_pattern.format(dim=dim)
                          for dim in args.dims}
    bench.run_ablation(data, dims=tuple(args.dims), weights_by_dim=weights_by_dim,
                       oracle_substitute=args.oracle_substitute,
                       n_nodes=args.n_nodes, seed=args.seed,
                       out_dir=args.out_dir, limit=args.limit)
    print(f"ablation written to {args.out_dir}")
    return 0


def _cmd_runtime(args) -> int:
    data = ds.Dataset(args.dataset)
    model = costnet.load_weights(args.weights)
    ids = data.instance_ids()
    inst = data.load_instance(ids[args.instance])
    projected = data.instructions[inst.instruction_id]["projected"]
    predict_ms, plan_ms = bench.measure_runtime(inst, model, projected,
                                                n=args.n_nodes,
                                                repeats=args.repeats,
                                                seed=args.seed)
    print(f"predict: {predict_ms:.2f} ms   plan({args.n_nodes} nodes): {plan_ms:.2f} ms "
          f"(mean over {args.repeats} repeats)")
    return 0


def _cmd_render(args) -> int:
    env = envgen.load_env_pgm(args.map, kind=args.kind)
    roadmap = None
    if args.roadmap:
        with open(args.roadmap, encoding="utf-8") as fh:
            roadmap = planner.Roadmap.from_dict(json.load(fh))
    path = None
    if args.path:
        nodes = _load_path_json(args.path)
        path = planner.PlanPath(tuple(range(len(nodes))), nodes, (), 0.0, 0.0)
    render.render_svg(env, roadmap, path, args.start, args.goal, args.out)
    print(f"wrote {args.out}")
    return 0


_COMMANDS = {
    "gen-synth": _cmd_gen_synth,
    "gen-indoor": _cmd_gen_indoor,
    "gen-instructions": _cmd_gen_instructions,
    "embed": _cmd_embed,
    "build-dataset": _cmd_build_dataset,
    "predict": _cmd_predict,
    "plan": _cmd_plan,
    "eval": _cmd_eval,
    "bench": _cmd_bench,
    "ablate": _cmd_ablate,
    "runtime": _cmd_runtime,
    "render": _cmd_render,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = _apply_config(parser, argv, args)
        return _COMMANDS[args.command](args)
    except (IgprmError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
