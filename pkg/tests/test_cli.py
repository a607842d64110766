import json
import os

import numpy as np
import pytest

from igprm import cli, costnet, envgen


def run_cli(*args):
    return cli.main([str(a) for a in args])


class TestEndToEnd:
    def test_gen_plan_eval_render_flow(self, tmp_path):
        map_path = tmp_path / "map.pgm"
        meta_path = tmp_path / "meta.json"
        assert run_cli("--seed", 4, "gen-synth", "--out-map", map_path,
                       "--out-meta", meta_path) == 0
        meta = json.loads(meta_path.read_text())

        path_json = tmp_path / "path.json"
        rm_json = tmp_path / "rm.json"
        assert run_cli("--seed", 1, "plan", "--map", map_path,
                       "--start", f"{meta['start'][0]},{meta['start'][1]}",
                       "--goal", f"{meta['goal'][0]},{meta['goal'][1]}",
                       "--n-nodes", 150, "--out", path_json,
                       "--out-roadmap", rm_json) == 0
        assert path_json.exists() and rm_json.exists()

        # self-evaluate: produced path vs itself on a zero-cost map
        gt_cost = tmp_path / "zeros.pgm"
        envgen.save_cost_pgm(envgen.CostMap.zeros(64, 64), str(gt_cost))
        assert run_cli("eval", "--path", path_json, "--gt-cost", gt_cost,
                       "--gt-path", path_json) == 0

        svg = tmp_path / "scene.svg"
        assert run_cli("render", "--map", map_path, "--roadmap", rm_json,
                       "--path", path_json, "--start", "1,1", "--goal", "60,60",
                       "--out", svg) == 0
        assert svg.read_text().startswith("<?xml")

    def test_gen_instructions_and_offline_embed(self, tmp_path):
        instr_path = tmp_path / "instr.jsonl"
        cache_path = tmp_path / "emb.jsonl"
        assert run_cli("gen-instructions", "--kind", "synthetic", "--count", 9,
                       "--out", instr_path) == 0
        assert run_cli("embed", "--instructions", instr_path, "--offline",
                       "--cache", cache_path) == 0
        lines = cache_path.read_text().splitlines()
        assert len(lines) == 9
        assert json.loads(lines[0])["dim"] == 1536

    def test_predict_subcommand(self, tmp_path):
        model = costnet.init_model(costnet.NetSpec(k=8), seed=0)
        weights = tmp_path / "w.igpw"
        costnet.save_weights(model, str(weights))
        map_path = tmp_path / "map.pgm"
        run_cli("--seed", 2, "gen-synth", "--out-map", map_path)
        out = tmp_path / "cost.pgm"
        assert run_cli("predict", "--weights", weights, "--map", map_path,
                       "--text", "prefer wide passages",
                       "--projection-seed", 7, "--out", out) == 0
        cost = envgen.load_cost_pgm(str(out))
        assert cost.values.shape == (64, 64)

    def test_bench_subcommand(self, smoke_dataset, tmp_path):
        out_dir = tmp_path / "rep"
        assert run_cli("bench", "--dataset", smoke_dataset.root,
                       "--methods", "igprm_oracle,prm_baseline",
                       "--node-counts", "50", "--out-dir", out_dir) == 0
        assert (out_dir / "results.csv").exists()

    def test_gen_indoor(self, tmp_path, indoor_pgm):
        out = tmp_path / "indoor.pgm"
        assert run_cli("--seed", 3, "gen-indoor", "--map-in", indoor_pgm,
                       "--out-map", out, "--steps", 10) == 0
        env = envgen.load_env_pgm(str(out), kind="indoor")
        steps = ((np.asarray(env.cells) == envgen.CellClass.STEP_LOW)
                 | (np.asarray(env.cells) == envgen.CellClass.STEP_HIGH)).sum()
        assert steps == 10 * 16


class TestExitCodes:
    def test_validation_error_is_2(self, tmp_path):
        bad = tmp_path / "bad.pgm"
        bad.write_bytes(b"not a pgm")
        assert run_cli("plan", "--map", bad, "--start", "1,1", "--goal", "2,2",
                       "--out", tmp_path / "p.json") == 2

    def test_io_error_is_3(self, tmp_path, synth_env):
        map_path = tmp_path / "map.pgm"
        envgen.save_env_pgm(synth_env[0], str(map_path))
        assert run_cli("render", "--map", map_path,
                       "--out", "/nonexistent/dir/out.svg") == 3

    def test_unknown_method_is_2(self, smoke_dataset, tmp_path):
        assert run_cli("bench", "--dataset", smoke_dataset.root,
                       "--methods", "sorcery", "--out-dir", tmp_path / "x") == 2


class TestConfigFile:
    def test_config_supplies_defaults(self, tmp_path):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"n-nodes": 40, "seed": 12}))
        map_path = tmp_path / "map.pgm"
        run_cli("--seed", 12, "gen-synth", "--out-map", map_path,
                "--out-meta", tmp_path / "m.json")
        meta = json.loads((tmp_path / "m.json").read_text())
        out = tmp_path / "p.json"
        rm = tmp_path / "rm.json"
        assert run_cli("--config", config, "plan", "--map", map_path,
                       "--start", f"{meta['start'][0]},{meta['start'][1]}",
                       "--goal", f"{meta['goal'][0]},{meta['goal'][1]}",
                       "--out", out, "--out-roadmap", rm) == 0
        payload = json.loads(rm.read_text())
        assert payload["params"]["n_nodes"] == 40
        assert payload["params"]["seed"] == 12

    def test_explicit_flag_beats_config(self, tmp_path):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"count": 6}))
        out = tmp_path / "i.jsonl"
        assert run_cli("--config", config, "gen-instructions", "--kind", "synthetic",
                       "--count", 9, "--out", out) == 0
        assert len(out.read_text().splitlines()) == 9

    def test_unknown_config_key_is_2(self, tmp_path):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"warp-drive": 1}))
        assert run_cli("--config", config, "gen-instructions", "--kind", "synthetic",
                       "--count", 9, "--out", tmp_path / "i.jsonl") == 2
