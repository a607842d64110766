"""Instruction-guided probabilistic roadmap planning on 2-D occupancy maps."""

from .envgen import (
    CellClass,
    CostMap,
    EnvironmentMap,
    InstructionClass,
    SynthConfig,
    gen_synthetic_env,
    gt_cost_map,
    load_indoor_map,
    place_step_obstacles,
    to_input_channels,
)
from .instructions import (
    EmbeddingCache,
    EndpointConfig,
    ProjectionMatrix,
    fetch_embedding,
    generate_instructions,
    make_projection,
    project,
    pseudo_embed,
)
from .costnet import Model, NetSpec, init_model, load_weights, predict, save_weights
from .planner import (
    PlannerParams,
    PlanPath,
    Roadmap,
    build_roadmap,
    edge_cost,
    plan,
    requery,
    sample_nodes,
    shortest_path,
)
from .metrics import check_success, dtw, evaluate_path, resample_path, spl
from .dataset import Dataset, ProblemInstance, build_dataset, gen_gt_path
from .bench import measure_runtime, run_ablation, run_benchmark
from .render import render_svg

__version__ = "0.1.0"
