import json
import shutil
import subprocess
import sys

import numpy as np
import pytest

from comocma.cli import RunConfig, main, replay_check

BASE = ["--problem", "one", "--diag", "sphere", "--n", "3", "--p", "2",
        "--sigma0", "0.3", "--lower", "0", "--upper", "1",
        "--budget", "120", "--seed", "3"]


def run_cli(tmp_path, extra=(), name="out", offsets="offsets.json"):
    out = tmp_path / name
    argv = ["run", *BASE, *extra, "--out", str(out),
            "--offsets", str(tmp_path / offsets)]
    code = main(argv)
    return code, out


class TestRunConfig:

    def test_round_trip(self):
        cfg = RunConfig(problem="sep", diag="elli", n=4, p=3, sigma0=0.5,
                        lower=[-5], upper=[5], budget=1e3, seed=7, k=2)
        again = RunConfig.from_dict(cfg.to_dict())
        assert again == cfg
        assert json.loads(json.dumps(cfg.to_dict())) == cfg.to_dict()

    def test_scalar_bounds_broadcast(self):
        cfg = RunConfig(problem="one", diag="sphere", n=3, p=2, sigma0=0.5,
                        lower=0, upper=[1, 2, 3], budget=10, seed=1)
        assert cfg.as_bound("lower").tolist() == [0, 0, 0]
        assert cfg.as_bound("upper").tolist() == [1, 2, 3]

    def test_rejects_unknown_and_missing_fields(self):
        with pytest.raises(ValueError, match="unknown"):
            RunConfig.from_dict({"problem": "one", "bogus": 1})
        with pytest.raises(ValueError, match="missing"):
            RunConfig.from_dict({"problem": "one", "diag": "sphere"})

    def test_rejects_bad_shapes(self):
        base = dict(problem="one", diag="sphere", n=3, p=2, sigma0=0.5,
                    lower=[0], upper=[1], budget=10, seed=1)
        with pytest.raises(ValueError):
            RunConfig(**dict(base, ref=[1.1]))
        with pytest.raises(ValueError):
            RunConfig(**dict(base, lower=[0, 1]))
        with pytest.raises(ValueError):
            RunConfig(**dict(base, budget=0))


class TestRunCommand:

    def test_writes_artifacts(self, tmp_path):
        code, out = run_cli(tmp_path)
        assert code == 0
        for name in ("record.csv", "incumbents.txt", "archive.csv",
                     "metadata.json"):
            assert (out / name).exists()
        assert not (out / "eigenvalues.csv").exists()

    def test_eig_log_artifact(self, tmp_path):
        code, out = run_cli(tmp_path, extra=["--eig-log"])
        assert code == 0
        lines = (out / "eigenvalues.csv").read_text().splitlines()
        assert lines[0] == "epoch,kernel_id,eig_index,sqrt_eig"
        assert len(lines) > 1

    def test_metadata_echoes_resolved_config(self, tmp_path):
        code, out = run_cli(tmp_path)
        meta = json.loads((out / "metadata.json").read_text())
        cfg = meta["config"]
        assert cfg["problem"] == "one" and cfg["diag"] == "sphere"
        assert cfg["ref"] == [1.1, 1.1]
        assert cfg["mode"] == "sequential"
        assert cfg["rotation_seeds"] == [1000003, 1000033]
        assert meta["lam"] == 7
        assert meta["rng"]["spawn_children"] == 5
        assert meta["rng"]["layout"]["kernels"] == [3, 4]
        assert meta["offsets"]["key"] == "bi-sphere_n3_p2_ref1.1x1.1"
        assert meta["offsets"]["source"] == "analytic"
        assert meta["backend"] in ("numba", "numpy")
        res = meta["results"]
        assert res["eval_count"] == 2 + res["steps"] * (meta["lam"] + 1)
        assert res["evals_per_kernel"] == res["eval_count"] / 2
        assert res["convergence_gap"] > 0

    def test_incumbents_rows_are_x_then_objectives(self, tmp_path):
        code, out = run_cli(tmp_path)
        table = np.loadtxt(out / "incumbents.txt")
        assert table.shape == (2, 3 + 2)
        # objective columns reproduce f at the incumbent
        from comocma.problems import make_problem
        problem = make_problem("one", "sphere", 3)
        for row in table:
            f = problem.evaluate(row[:3], count=False)
            assert row[3] == f.f1 and row[4] == f.f2

    def test_archive_csv_sorted_nondominated(self, tmp_path):
        code, out = run_cli(tmp_path)
        lines = (out / "archive.csv").read_text().splitlines()
        assert lines[0] == "f1,f2"
        rows = np.array([[float(v) for v in line.split(",")]
                         for line in lines[1:]])
        assert (np.diff(rows[:, 0]) > 0).all()
        assert (np.diff(rows[:, 1]) < 0).all()

    def test_identical_config_identical_bytes(self, tmp_path):
        _, out_a = run_cli(tmp_path, name="a")
        _, out_b = run_cli(tmp_path, name="b")
        for name in ("record.csv", "incumbents.txt", "archive.csv"):
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes()

    def test_budget_below_init_cost_records_single_row(self, tmp_path):
        code, out = run_cli(tmp_path, extra=["--budget", "2"])
        assert code == 0
        lines = (out / "record.csv").read_text().splitlines()
        assert len(lines) == 2

    def test_offsets_store_updated(self, tmp_path):
        run_cli(tmp_path)
        store = json.loads((tmp_path / "offsets.json").read_text())
        entry = store["bi-sphere_n3_p2_ref1.1x1.1"]
        assert entry["source"] == "analytic"
        assert entry["hv_max"] == pytest.approx(0.8668000429, abs=1e-9)
        assert entry["hvarchive_max"] >= 1.21 - 1 / 6 - 1e-12

    def test_postponed_workers(self, tmp_path):
        code, out = run_cli(tmp_path,
                            extra=["--mode", "postponed", "--workers", "2"])
        assert code == 0
        meta = json.loads((out / "metadata.json").read_text())
        assert meta["config"]["mode"] == "postponed"
        assert meta["config"]["workers"] == 2


class TestConfigFile:

    def test_config_file_and_flag_override(self, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({
            "problem": "one", "diag": "sphere", "n": 3, "p": 2,
            "sigma0": 0.3, "lower": [0], "upper": [1],
            "budget": 120, "seed": 3}))
        out = tmp_path / "from_file"
        code = main(["run", "--config", str(cfg_path), "--seed", "9",
                     "--out", str(out),
                     "--offsets", str(tmp_path / "o.json")])
        assert code == 0
        meta = json.loads((out / "metadata.json").read_text())
        assert meta["config"]["seed"] == 9
        assert meta["config"]["budget"] == 120

    def test_config_file_equivalent_to_flags(self, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({
            "problem": "one", "diag": "sphere", "n": 3, "p": 2,
            "sigma0": 0.3, "lower": [0], "upper": [1],
            "budget": 120, "seed": 3}))
        out_file = tmp_path / "via_file"
        main(["run", "--config", str(cfg_path), "--out", str(out_file),
              "--offsets", str(tmp_path / "o.json")])
        _, out_flags = run_cli(tmp_path, name="via_flags", offsets="o.json")
        assert (out_file / "record.csv").read_bytes() \
            == (out_flags / "record.csv").read_bytes()

    def test_missing_config_file_exits_2(self, tmp_path):
        assert main(["run", "--config", str(tmp_path / "nope.json")]) == 2


class TestEnvironment:

    def test_output_dir_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv("COMOCMA_OUTPUT_DIR", str(tmp_path / "envbase"))
        code = main(["run", *BASE, "--offsets", str(tmp_path / "o.json")])
        assert code == 0
        produced = list((tmp_path / "envbase").iterdir())
        assert len(produced) == 1
        assert produced[0].name == "bi-sphere_n3_p2_ref1.1x1.1_seed3"
        assert (produced[0] / "record.csv").exists()

    def test_offsets_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv("COMOCMA_OFFSETS", str(tmp_path / "env_offsets.json"))
        code = main(["run", *BASE, "--out", str(tmp_path / "out")])
        assert code == 0
        assert (tmp_path / "env_offsets.json").exists()


class TestValidationErrors:

    def test_missing_required_field_exits_2(self, tmp_path):
        argv = ["run", "--problem", "one", "--diag", "sphere",
                "--out", str(tmp_path / "x")]
        assert main(argv) == 2

    def test_sep_without_k_exits_2(self, tmp_path):
        argv = ["run", *BASE, "--out", str(tmp_path / "x"),
                "--offsets", str(tmp_path / "o.json")]
        argv[argv.index("one")] = "sep"
        assert main(argv) == 2

    def test_workers_with_sequential_exits_2(self, tmp_path):
        code, _ = run_cli(tmp_path, extra=["--workers", "2"])
        assert code == 2


class TestReplay:

    def test_replay_matches(self, tmp_path):
        _, out = run_cli(tmp_path)
        assert replay_check(out) is True
        assert main(["replay", str(out)]) == 0

    def test_replay_accepts_record_path(self, tmp_path):
        _, out = run_cli(tmp_path)
        assert replay_check(out / "record.csv") is True

    def test_replay_with_eig_log(self, tmp_path):
        _, out = run_cli(tmp_path, extra=["--eig-log"])
        assert main(["replay", str(out)]) == 0

    def test_tampered_record_differs(self, tmp_path):
        _, out = run_cli(tmp_path)
        record = out / "record.csv"
        text = record.read_text()
        digit = "5" if text[-3] != "5" else "6"
        record.write_text(text[:-3] + digit + text[-2:])
        assert replay_check(out) is False
        assert main(["replay", str(out)]) == 1

    def test_tampered_eig_log_differs(self, tmp_path):
        _, out = run_cli(tmp_path, extra=["--eig-log"])
        path = out / "eigenvalues.csv"
        lines = path.read_text().splitlines()
        lines[1] = lines[1].rsplit(",", 1)[0] + ",0.123"
        path.write_text("\n".join(lines) + "\n")
        assert replay_check(out) is False

    def test_lambda_override_mismatch_detected(self, tmp_path):
        # a record produced under a different lambda cannot pass replay
        # against metadata claiming the default
        _, out_default = run_cli(tmp_path, name="default")
        _, out_lam = run_cli(tmp_path, name="override", extra=["--lam", "9"])
        record = (out_lam / "record.csv").read_bytes()
        (out_default / "record.csv").write_bytes(record)
        assert replay_check(out_default) is False

    def test_missing_files_exit_2(self, tmp_path):
        assert main(["replay", str(tmp_path / "nowhere")]) == 2


@pytest.mark.skipif(shutil.which("comocma") is None,
                    reason="console script not on PATH")
def test_console_script(tmp_path):
    out = tmp_path / "out"
    proc = subprocess.run(
        ["comocma", "run", *BASE, "--out", str(out),
         "--offsets", str(tmp_path / "o.json")],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (out / "record.csv").exists()
    proc = subprocess.run(["comocma", "replay", str(out)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
