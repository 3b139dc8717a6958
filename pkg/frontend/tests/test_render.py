import json
import math
import os

import pytest

from curvflow_plots import FigureSpec, SchemaError, fit_slope, render, render_all
from curvflow_plots.cli import main

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


def fixture(name):
    return os.path.join(FIXTURES, name)


def make_synthetic_eoc(tmp_path, power=2.0):
    """Schema-1 interp report with errors exactly h**power and exact rates."""
    hs = [0.5, 0.25, 0.125, 0.0625]
    rows = [[i, h, h**power, h**power, h**power, h**power] for i, h in enumerate(hs)]
    rate_rows = [[j, power, power, power] for j in range(len(hs) - 1)]
    report = {
        "schema_version": "1",
        "kind": "interp",
        "timestamp": "2026-08-10T00:00:00+00:00",
        "config": {"element": {"kind": "hermite3"}},
        "environment": {},
        "flags": {},
        "tables": {
            "errors": {
                "columns": ["level", "h", "err_L2", "err_H1", "err_H2", "err_W1inf"],
                "rows": rows,
            },
            "rates": {
                "columns": ["pair", "rate_L2", "rate_H1", "rate_H2"],
                "rows": rate_rows,
            },
        },
        "summary": {},
    }
    path = tmp_path / "synthetic.json"
    path.write_text(json.dumps(report, indent=2, sort_keys=True))
    return str(path)


class TestSlopeFidelity:
    def test_exact_square_law(self, tmp_path):
        path = make_synthetic_eoc(tmp_path, power=2.0)
        meta = render(FigureSpec(path, "eoc", str(tmp_path / "fig.svg")))
        report = json.loads(open(path).read())
        recorded = report["tables"]["rates"]["rows"][0][1]
        for slope in meta["slopes"].values():
            assert abs(slope - recorded) < 0.05

    def test_real_interp_fixture(self, tmp_path):
        meta = render(FigureSpec(fixture("interp_report.json"), "eoc", str(tmp_path / "f.svg")))
        report = json.loads(open(fixture("interp_report.json")).read())
        cols = report["tables"]["rates"]["columns"]
        rows = report["tables"]["rates"]["rows"]
        for label in ("L2", "H1", "H2"):
            recorded = [r[cols.index(f"rate_{label}")] for r in rows]
            mean_rate = sum(recorded) / len(recorded)
            assert abs(meta["slopes"][label] - mean_rate) < 0.05

    def test_fit_slope_exact(self):
        hs = [0.4, 0.2, 0.1]
        errs = [3 * h**2.5 for h in hs]
        assert fit_slope(hs, errs) == pytest.approx(2.5, abs=1e-12)


class TestRenderKinds:
    def test_contraction(self, tmp_path):
        out = tmp_path / "c.svg"
        meta = render(FigureSpec(fixture("contraction_report.json"), "contraction", str(out)))
        assert out.exists()
        assert math.isfinite(meta["slopes"]["rate"])
        assert meta["slopes"]["rate"] > 0  # rate decreases with h

    def test_admissibility(self, tmp_path):
        out = tmp_path / "a.svg"
        meta = render(FigureSpec(fixture("conditions_report.json"), "admissibility", str(out)))
        assert out.exists()
        assert meta["wdeg"] == 3

    def test_eps_sweep(self, tmp_path):
        out = tmp_path / "e.svg"
        meta = render(FigureSpec(fixture("linear_report.json"), "eps-sweep", str(out)))
        assert out.exists()
        assert meta["points"] == 3

    def test_empty_report_placeholder(self, tmp_path):
        report = {
            "schema_version": "1", "kind": "interp", "config": {},
            "tables": {"errors": {"columns": ["level", "h"], "rows": []}},
        }
        path = tmp_path / "empty.json"
        path.write_text(json.dumps(report))
        meta = render(FigureSpec(str(path), "eoc", str(tmp_path / "x.svg")))
        assert meta["empty"] is True
        assert (tmp_path / "x.svg").exists()

    def test_schema_mismatch_names_version(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"schema_version": "99", "kind": "interp"}))
        with pytest.raises(SchemaError, match="99"):
            render(FigureSpec(str(path), "eoc", str(tmp_path / "y.svg")))

    def test_inputs_never_modified(self, tmp_path):
        before = open(fixture("interp_report.json"), "rb").read()
        render(FigureSpec(fixture("interp_report.json"), "eoc", str(tmp_path / "z.svg")))
        assert open(fixture("interp_report.json"), "rb").read() == before


class TestIdempotence:
    def test_byte_identical_rerenders(self, tmp_path):
        for fmt in ("svg", "png"):
            a = tmp_path / f"one.{fmt}"
            b = tmp_path / f"two.{fmt}"
            render(FigureSpec(fixture("interp_report.json"), "eoc", str(a)))
            render(FigureSpec(fixture("interp_report.json"), "eoc", str(b)))
            assert a.read_bytes() == b.read_bytes()

    def test_render_all_idempotent(self, tmp_path):
        src = tmp_path / "reports"
        src.mkdir()
        for name in ("interp_report.json", "contraction_report.json"):
            (src / name).write_text(open(fixture(name)).read())
        out1 = tmp_path / "f1"
        out2 = tmp_path / "f2"
        render_all(str(src), str(out1))
        render_all(str(src), str(out2))
        files1 = sorted(os.listdir(out1))
        assert files1 == sorted(os.listdir(out2))
        for name in files1:
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


class TestRenderAll:
    def test_directory_with_mixed_content(self, tmp_path):
        src = tmp_path / "reports"
        src.mkdir()
        for name in ("interp_report.json", "contraction_report.json", "linear_report.json"):
            (src / name).write_text(open(fixture(name)).read())
        (src / "notes.txt").write_text("not a report")
        (src / "other.json").write_text(json.dumps({"schema_version": "7", "kind": "interp"}))
        out = tmp_path / "figs"
        result = render_all(str(src), str(out))
        assert len(result["rendered"]) == 3
        assert len(result["skipped"]) == 1  # unsupported schema; txt ignored
        index = (out / "index.html").read_text()
        assert index.count("<img") == 3

    def test_cli_paths(self, tmp_path, capsys):
        out = tmp_path / "fig.svg"
        code = main(["render", "--in", fixture("interp_report.json"),
                     "--kind", "eoc", "--out", str(out)])
        assert code == 0 and out.exists()
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"schema_version": "42"}))
        code = main(["render", "--in", str(bad), "--kind", "eoc", "--out", str(tmp_path / "n.svg")])
        assert code == 3
        err = capsys.readouterr().err
        assert "42" in err
