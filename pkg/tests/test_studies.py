import pytest

from curvflow.studies import (
    ConfigError,
    conditions_study,
    linear_study,
    resolve_config,
)


def make_cfg(**over):
    cfg = {
        "study": {"kind": "linear", "seed": 1},
        "domain": {"kind": "interval", "R": 1.0},
        "regime": {"name": "mcf"},
        "element": {"kind": "hermite5"},
        "params": {"mu": 3.0, "wdeg": 2, "gamma": 1.0, "delta": 0.6},
        "sweep": {"eps": [1.0, 0.8], "levels": 1, "cells0": 8, "h0": 0.25},
        "oracle": {"resolution": 2000},
    }
    for key, val in over.items():
        cfg[key].update(val)
    return resolve_config(cfg)


class TestResolveConfig:
    def test_unknown_section(self):
        with pytest.raises(ConfigError, match="bogus"):
            resolve_config({"bogus": {}})

    def test_unknown_field_named(self):
        with pytest.raises(ConfigError, match="typo"):
            resolve_config({"solver": {"typo": 1}})

    def test_unknown_kind(self):
        with pytest.raises(ConfigError, match="kind"):
            resolve_config({"study": {"kind": "nope"}})


class TestConditionsStudy:
    def test_summary_keys(self):
        cfg = make_cfg(study={"kind": "conditions"})
        rep = conditions_study(cfg)
        assert set(rep.summary) >= {"nu", "delta_interval", "exponents", "sufficient", "rho"}
        assert "budget" in rep.tables

    def test_out_of_theory_flag(self):
        cfg = make_cfg(study={"kind": "conditions"}, params={"wdeg": 4})
        rep = conditions_study(cfg)
        assert rep.flags.get("out_of_theory") is True


class TestThreadCap:
    def test_parallel_cells_deterministic(self, monkeypatch):
        cfg = make_cfg(
            study={"kind": "interp"},
            element={"kind": "hermite3"},
            sweep={"eps": [0.5], "levels": 3, "cells0": 4},
        )
        from curvflow.studies import interp_study

        seq = interp_study(cfg).tables["errors"].rows
        monkeypatch.setenv("CURVFLOW_THREADS", "3")
        par = interp_study(cfg).tables["errors"].rows
        assert seq == par


class TestLinearStudy:
    def test_sweep_diagnostics(self):
        rep = linear_study(make_cfg())
        rows = rep.tables["sweep"].rows
        assert len(rows) == 2
        cols = rep.tables["sweep"].columns
        bound_ok = cols.index("bound_ok")
        garding = cols.index("garding_ok")
        stability = cols.index("stability_ratio")
        best = cols.index("best_approx_ratio")
        for row in rows:
            assert row[bound_ok] == 1 or row[bound_ok] is True
            assert row[garding] == 1 or row[garding] is True
            assert row[stability] > 0
            assert row[best] is not None
        assert rep.summary["all_bounds_valid"] is True
