"""Harness: dispatch, config precedence, determinism across workers, CLI codes."""

import json
import math
import os

import pytest

from dynawalk.cli import main
from dynawalk.errors import ValidationError
from dynawalk.harness import ExperimentConfig, run, summarize
from dynawalk.report import fmt


class TestRun:
    def test_genest_roundtrip(self, tmp_path):
        cfg = ExperimentConfig(
            "genest", {"n": 128, "z": 1.5, "set": "interval:0,1", "dist": "normal"},
            master_seed=42, reps=500, out=str(tmp_path / "g.json"),
        )
        report = run(cfg)
        assert report.subcommand == "genest"
        assert (tmp_path / "g.json").exists() and (tmp_path / "g.csv").exists()
        doc = json.loads((tmp_path / "g.json").read_text())
        assert doc["config"]["seed"] == 42
        # JSON and CSV carry the same numbers at full precision
        csv_text = (tmp_path / "g.csv").read_text()
        est = doc["rows"][0]["estimate"]
        assert fmt(est) in csv_text

    def test_unknown_subcommand(self):
        with pytest.raises(ValidationError):
            run(ExperimentConfig("nope"))

    def test_missing_params(self):
        with pytest.raises(ValidationError):
            run(ExperimentConfig("genest", {"n": 128}))

    def test_reps_zero_rejected(self):
        cfg = ExperimentConfig(
            "genest", {"n": 16, "z": 1.5, "set": "interval:0,1", "dist": "normal"}, reps=0
        )
        with pytest.raises(ValidationError):
            run(cfg)

    def test_wall_time_not_in_csv(self):
        cfg = ExperimentConfig(
            "entropy", {"set": "cantor:3", "eps": "0.1;0.01"}, master_seed=3
        )
        report = run(cfg)
        assert report.wall_time_s is not None
        assert "wall" not in report.to_csv()


WORKER_CONFIGS = [
    ("genest", {"n": 64, "z": 1.5, "set": "interval:0,1", "dist": "normal"}, 2500),
    ("chung", {"n": 32, "eps": "0.4;0.6"}, 5000),
    ("tightness", {"n": 32, "dist": "rademacher"}, 600),
    ("invariance", {"n": 64, "u_grid": "0.5;1.0", "t_grid": "0.0;1.0", "dist": "rademacher"}, 2500),
    ("ruin", {"z": "2", "dist": "pmf:-1:0.5;1:0.5"}, 5000),
    ("stable-range", {"alpha": "0.5", "eps": "0.05;0.025", "p": "1", "mesh": "2000"}, 80),
    ("ou-sup", {"set": "points:0.1;0.6", "z": "1.5"}, 70000),
]


class TestWorkerDeterminism:
    @pytest.mark.parametrize("sub,params,reps", WORKER_CONFIGS)
    def test_one_vs_many_workers_identical_csv(self, sub, params, reps):
        a = run(ExperimentConfig(sub, dict(params), master_seed=7, reps=reps, workers=1))
        b = run(ExperimentConfig(sub, dict(params), master_seed=7, reps=reps, workers=8))
        assert a.to_csv() == b.to_csv()

    def test_rerun_identical(self):
        cfg = dict(WORKER_CONFIGS[0][1])
        a = run(ExperimentConfig("genest", cfg, master_seed=9, reps=1000))
        b = run(ExperimentConfig("genest", cfg, master_seed=9, reps=1000))
        assert a.to_csv() == b.to_csv()


class TestSummarize:
    def _entropy_reports(self):
        eps = [3.0**-k for k in range(3, 9)]
        cfg = ExperimentConfig("entropy", {"set": "cantor:9", "eps": ";".join(map(repr, eps))})
        return [run(cfg)]

    def test_cantor_sweep_slope(self):
        table = summarize(self._entropy_reports())
        slope = table.extra["fitted_slope_log_y_vs_log_inverse_x"]
        assert abs(slope - math.log(2) / math.log(3)) <= 0.05

    def test_empty_list_rejected(self):
        with pytest.raises(ValidationError):
            summarize([])

    def test_single_row_flags_insufficient(self):
        cfg = ExperimentConfig("entropy", {"set": "cantor:3", "eps": "0.1"})
        table = summarize([run(cfg)])
        assert "insufficient points for fit" in table.flags

    def test_mixed_subcommands_rejected(self):
        a = run(ExperimentConfig("entropy", {"set": "cantor:3", "eps": "0.1"}))
        b = run(ExperimentConfig("green", {"n": "4", "dist": "pmf:-1:0.5;1:0.5"}))
        with pytest.raises(ValidationError):
            summarize([a, b])


class TestCli:
    def test_validation_exit_code(self, capsys):
        rc = main(["genest", "--n", "64", "--z", "1.5", "--set", "interval:0,1",
                   "--dist", "normal", "--reps", "0"])
        assert rc == 2

    def test_ok_exit_code(self, tmp_path):
        rc = main(["entropy", "--set", "cantor:2", "--eps", "0.1",
                   "--out", str(tmp_path / "e.csv")])
        assert rc == 0

    def test_bad_grammar_exit_code(self):
        assert main(["genest", "--n", "8", "--z", "1.5", "--set", "blob:1",
                     "--dist", "normal", "--reps", "10"]) == 2

    def test_config_file_and_override(self, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({
            "n": 64, "z": 1.5, "set": "interval:0,1", "dist": "normal",
            "seed": 5, "reps": 400,
        }))
        out1 = tmp_path / "a.json"
        rc = main(["genest", "--config", str(cfg_path), "--out", str(out1)])
        assert rc == 0
        doc = json.loads(out1.read_text())
        assert doc["config"]["seed"] == 5 and doc["config"]["reps"] == 400
        # CLI flag beats the file
        out2 = tmp_path / "b.json"
        rc = main(["genest", "--config", str(cfg_path), "--seed", "11", "--out", str(out2)])
        assert rc == 0
        assert json.loads(out2.read_text())["config"]["seed"] == 11

    def test_summarize_cli(self, tmp_path):
        p1 = tmp_path / "r1.json"
        main(["entropy", "--set", "cantor:8", "--eps",
              ";".join(repr(3.0**-k) for k in range(3, 8)), "--out", str(p1)])
        out = tmp_path / "sum.csv"
        rc = main(["summarize", str(p1), "--out", str(out)])
        assert rc == 0
        assert out.exists()

    def test_plotdata(self, tmp_path):
        out = tmp_path / "e.json"
        rc = main(["entropy", "--set", "cantor:4", "--eps", "0.1;0.01", "--out", str(out),
                   "--plotdata"])
        assert rc == 0
        dat = (tmp_path / "e.dat").read_text()
        assert len(dat.strip().splitlines()) == 3  # header + 2 rows

    def test_json_csv_roundtrip_precision(self, tmp_path):
        out = tmp_path / "g.json"
        main(["genest", "--n", "64", "--z", "1.5", "--set", "interval:0,1",
              "--dist", "normal", "--reps", "300", "--seed", "2", "--out", str(out)])
        doc = json.loads(out.read_text())
        csv_rows = (tmp_path / "g.csv").read_text().strip().splitlines()
        header = csv_rows[0].split(",")
        cells = csv_rows[1].split(",")
        est_json = doc["rows"][0]["estimate"]
        est_csv = float(cells[header.index("estimate")])
        assert est_csv == est_json
