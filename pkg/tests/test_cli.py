"""Command-line behavior: exit codes, determinism, file placement."""

import json

import pytest

from daggercharge.cli import main

TINY_CONFIG = {
    "expert": {"horizon": 2},
    "train": {"epochs": 2, "batch_size": 64},
    "dagger": {
        "n_iterations": 1,
        "episodes_initial": 2,
        "episodes_per_iter": 1,
        "n_w": 5,
        "n_steps": 10,
        "rest_steps": 7,
    },
}

TINY_SCENARIO = {
    "soc0": 0.4,
    "soc_ref": 0.8,
    "n_steps": 15,
    "rest_steps": 8,
    "capacity_ah": 6.0,
}


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(TINY_CONFIG))
    return str(path)


@pytest.fixture
def scenario_file(tmp_path):
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(TINY_SCENARIO))
    return str(path)


def run_cli(*argv):
    return main(list(argv))


class TestSimulate:
    def test_expert_showcase_scenario_writes_traces(self, tmp_path, config_file, scenario_file):
        out = tmp_path / "sim"
        code = run_cli("--config", config_file, "--out", str(out), "--seed", "3",
                       "simulate", "--scenario", scenario_file)
        assert code == 0
        for name in ("trace_expert.csv", "trace_policy.csv", "trace_summary.json"):
            assert (out / name).is_file()
        lines = (out / "trace_expert.csv").read_text().strip().splitlines()
        assert len(lines) == 1 + 15 + 8

    def test_missing_config_exits_2(self, tmp_path):
        code = run_cli("--config", str(tmp_path / "absent.json"), "--out",
                       str(tmp_path / "o"), "simulate")
        assert code == 2

    def test_unknown_config_key_exits_2(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"capacity_oops": 1.0}))
        code = run_cli("--config", str(bad), "--out", str(tmp_path / "o"), "simulate")
        assert code == 2

    def test_seed_determinism_byte_identical(self, tmp_path, config_file, scenario_file):
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            assert run_cli("--config", config_file, "--out", str(out), "--seed", "7",
                           "simulate", "--scenario", scenario_file) == 0
            outs.append((out / "trace_expert.csv").read_bytes())
        assert outs[0] == outs[1]

    def test_bad_checkpoint_exits_2(self, tmp_path, config_file):
        code = run_cli("--config", config_file, "--out", str(tmp_path / "o"),
                       "simulate", "--policy", str(tmp_path / "nope.ckpt"))
        assert code == 2


class TestTrain:
    def test_bc_writes_checkpoint(self, tmp_path, config_file):
        out = tmp_path / "bc"
        code = run_cli("--config", config_file, "--out", str(out), "--seed", "1",
                       "train", "bc", "--episodes", "2")
        assert code == 0
        assert (out / "policy_bc.ckpt").is_file()
        assert (out / "bc_report.json").is_file()

    def test_dagger_writes_artifacts_and_resumes(self, tmp_path, config_file):
        out = tmp_path / "dg"
        code = run_cli("--config", config_file, "--out", str(out), "--seed", "1",
                       "train", "dagger")
        assert code == 0
        assert (out / "policy_final.ckpt").is_file()
        assert (out / "iter01.ckpt").is_file()
        report = json.loads((out / "dagger_report.json").read_text())
        assert report["betas"] == [0.5]
        code = run_cli("--config", config_file, "--out", str(out), "--seed", "1",
                       "train", "dagger", "--resume")
        assert code == 0

    def test_scale_shrinks_episode_counts(self, tmp_path, config_file):
        out = tmp_path / "scaled"
        code = run_cli("--config", config_file, "--out", str(out), "--seed", "2",
                       "train", "dagger", "--scale", "0.5", "--iters", "1")
        assert code == 0
        report = json.loads((out / "dagger_report.json").read_text())
        assert report["episodes_initial"] == 1  # ceil(2 * 0.5)


class TestEvaluateAndBench:
    def test_evaluate_rejects_zero_episodes(self, tmp_path, config_file):
        with pytest.raises(SystemExit) as exc:
            run_cli("--config", config_file, "--out", str(tmp_path / "o"),
                    "evaluate", "--episodes", "0")
        assert exc.value.code == 2

    def test_evaluate_expert_only(self, tmp_path, config_file):
        out = tmp_path / "eval"
        code = run_cli("--config", config_file, "--out", str(out),
                       "evaluate", "--include-expert", "--episodes", "2")
        assert code == 0
        report = json.loads((out / "eval_report.json").read_text())
        assert report["policies"]["expert"]["error_mean"] == 0.0

    def test_evaluate_with_checkpoint(self, tmp_path, config_file):
        bc_out = tmp_path / "bc"
        assert run_cli("--config", config_file, "--out", str(bc_out), "--seed", "1",
                       "train", "bc", "--episodes", "2") == 0
        out = tmp_path / "eval"
        code = run_cli("--config", config_file, "--out", str(out),
                       "evaluate", "--bc", str(bc_out / "policy_bc.ckpt"),
                       "--episodes", "2")
        assert code == 0
        assert (out / "current_error_hist_bc.csv").is_file()

    def test_bench_table(self, tmp_path, config_file):
        out = tmp_path / "bench"
        code = run_cli("--config", config_file, "--out", str(out),
                       "bench", "--horizons", "1,2", "--states", "3")
        assert code == 0
        table = json.loads((out / "timing.json").read_text())
        assert len(table) == 4


def test_evaluate_with_checkpoint_needs_matching_window(tmp_path, config_file):
    # checkpoint n_w=5 (from the tiny config) vs evaluate's default n_w=20
    bc_out = tmp_path / "bc"
    assert run_cli("--config", config_file, "--out", str(bc_out), "--seed", "1",
                   "train", "bc", "--episodes", "2") == 0
    code = run_cli("--out", str(tmp_path / "e"),
                   "evaluate", "--bc", str(bc_out / "policy_bc.ckpt"), "--episodes", "1")
    assert code == 1
