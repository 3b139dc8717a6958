import json
import re

import pytest

from curvflow.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestConditionsCommand:
    def test_worked_example(self, capsys):
        code, out, _ = run_cli(capsys, "conditions", "--mu", "2", "--wdeg", "3")
        assert code == 0
        assert "(1, 2)" in out

    def test_json_report_keys(self, capsys, tmp_path):
        path = tmp_path / "cond.json"
        code, _, _ = run_cli(
            capsys, "conditions", "--mu", "2", "--wdeg", "3", "--json", str(path)
        )
        assert code == 0
        data = json.loads(path.read_text())
        assert set(data) >= {"nu", "delta_interval", "exponents", "sufficient", "rho"}
        assert len(data["exponents"]) == 5

    def test_out_of_theory_exit(self, capsys):
        code, out, _ = run_cli(capsys, "conditions", "--mu", "2", "--wdeg", "2")
        assert code == 2
        assert "no admissible delta interval" in out


class TestUsageErrors:
    def test_unknown_subcommand(self, capsys):
        code, _, err = run_cli(capsys, "bogus")
        assert code == 64
        assert "usage" in err.lower()

    def test_no_subcommand(self, capsys):
        code, _, _ = run_cli(capsys)
        assert code == 64

    def test_missing_config(self, capsys):
        code, _, err = run_cli(capsys, "run", "--config", "/nonexistent.toml")
        assert code == 64
        assert "config" in err

    def test_malformed_config_names_field(self, capsys, tmp_path):
        cfg = tmp_path / "bad.toml"
        cfg.write_text("[study]\nkind = 'interp'\n[sweep]\nbogus_field = 3\n")
        code, _, err = run_cli(capsys, "run", "--config", str(cfg))
        assert code == 64
        assert "bogus_field" in err


class TestStudies:
    def test_interp_study_report(self, capsys, tmp_path):
        code, out, _ = run_cli(
            capsys,
            "interp-study",
            "--elem", "hermite3", "--domain", "interval", "--cells0", "4",
            "--levels", "3", "--out", str(tmp_path),
        )
        assert code == 0
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["schema_version"] == "1"
        assert report["kind"] == "interp"
        assert report["config"]["element"]["kind"] == "hermite3"
        assert (tmp_path / "errors.csv").exists()
        assert (tmp_path / "rates.csv").exists()
        assert report["summary"]["min_rate_H1"] >= 2.0

    def test_oracle_profile_boundary_row(self, capsys, tmp_path):
        code, _, _ = run_cli(
            capsys,
            "oracle", "--regime", "mcf", "--eps", "0.25", "--R", "1",
            "--domain", "disk", "--resolution", "2000", "--out", str(tmp_path),
        )
        assert code == 0
        last = (tmp_path / "profile.csv").read_text().strip().splitlines()[-1]
        r, u, du = (float(t) for t in last.split(","))
        assert r == 1.0 and abs(u) < 1e-12

    def test_run_config_toml_deterministic(self, capsys, tmp_path):
        cfg = tmp_path / "study.toml"
        cfg.write_text(
            "\n".join(
                [
                    "[study]", 'kind = "interp"', "seed = 3",
                    "[domain]", 'kind = "interval"', "R = 1.0",
                    "[element]", 'kind = "hermite3"',
                    "[sweep]", "levels = 2", "cells0 = 4",
                ]
            )
        )
        out1 = tmp_path / "o1"
        out2 = tmp_path / "o2"
        assert run_cli(capsys, "run", "--config", str(cfg), "--out", str(out1))[0] == 0
        assert run_cli(capsys, "run", "--config", str(cfg), "--out", str(out2))[0] == 0
        strip = lambda p: re.sub(r'"timestamp": "[^"]*"', "", (p / "report.json").read_text())
        assert strip(out1) == strip(out2)
        assert (out1 / "errors.csv").read_bytes() == (out2 / "errors.csv").read_bytes()

    def test_run_accepts_json_config(self, capsys, tmp_path):
        cfg = tmp_path / "study.json"
        cfg.write_text(
            json.dumps(
                {
                    "study": {"kind": "conditions"},
                    "domain": {"kind": "disk", "R": 1.0},
                    "params": {"mu": 2.0, "wdeg": 3, "delta": 1.5},
                    "sweep": {"eps": [0.25], "h0": 0.25},
                }
            )
        )
        code, out, _ = run_cli(capsys, "run", "--config", str(cfg), "--out", str(tmp_path / "o"))
        assert code == 0
        report = json.loads((tmp_path / "o" / "report.json").read_text())
        assert report["summary"]["delta_interval"] == [1.0, 2.0]

    def test_contraction_study_admissible(self, capsys, tmp_path):
        code, out, _ = run_cli(
            capsys,
            "contraction-study", "--domain", "interval", "--regime", "mcf",
            "--elem", "hermite5", "--cells0", "16", "--levels", "2",
            "--eps", "1.0", "--pairs", "2", "--resolution", "2000",
            "--out", str(tmp_path),
        )
        assert code == 0
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["summary"]["max_rate"] < 1.0
        assert report["summary"]["rates_decreasing"] is True

    def test_full_study_interval(self, capsys, tmp_path):
        # hermite5 with (mu=3, wdeg=2, delta=0.6) satisfies every sufficient
        # condition, so the run exits 0; hermite3 would be flagged because
        # wdeg <= deg/2 cannot hold together with a nonempty ball condition
        code, out, _ = run_cli(
            capsys,
            "full-study", "--domain", "interval", "--regime", "imcf",
            "--elem", "hermite5", "--cells0", "4", "--levels", "2",
            "--eps", "0.25", "--resolution", "8000", "--out", str(tmp_path),
        )
        assert code == 0
        report = json.loads((tmp_path / "report.json").read_text())
        rows = report["tables"]["convergence"]["rows"]
        errs = [r[3] for r in rows]
        assert errs[0] > errs[1]
        assert report["summary"]["h1_errors_decreasing"] is True

    def test_solve_writes_trace_and_solution(self, capsys, tmp_path):
        code, _, _ = run_cli(
            capsys,
            "solve", "--regime", "imcf", "--domain", "interval",
            "--elem", "hermite5", "--cells0", "8", "--eps", "0.25",
            "--resolution", "2000", "--out", str(tmp_path),
        )
        assert code == 0
        trace = (tmp_path / "trace.csv").read_text().splitlines()
        assert trace[0] == "k,step_norm,residual,in_ball"
        assert (tmp_path / "solution.csv").exists()
        assert (tmp_path / "solution.json").exists()

    def test_solver_failure_exit(self, capsys, tmp_path):
        # the contracting 1D problem is unsolvable at eps=0.5 on R=1
        code, _, err = run_cli(
            capsys,
            "oracle", "--regime", "mcf", "--eps", "0.5", "--domain", "interval",
            "--resolution", "1000", "--out", str(tmp_path),
        )
        assert code == 1
        assert "solver failure" in err

    def test_out_of_theory_flagged(self, capsys, tmp_path):
        # wdeg > deg/2 violates the degree coupling: run is flagged, exit 2
        code, out, _ = run_cli(
            capsys,
            "mesh-info", "--domain", "disk", "--h0", "0.5", "--levels", "1",
            "--wdeg", "4", "--out", str(tmp_path),
        )
        assert code == 0  # mesh-info has no parameter gate
        code, out, _ = run_cli(
            capsys,
            "contraction-study", "--domain", "interval", "--regime", "mcf",
            "--elem", "hermite5", "--cells0", "8", "--levels", "1",
            "--eps", "1.0", "--wdeg", "4", "--pairs", "2",
            "--resolution", "2000", "--out", str(tmp_path / "c"),
        )
        assert code == 2
