"""Study drivers: each takes a resolved config dict and returns a StudyReport.

A study is a grid of independent (eps, level) cells; cells may run in
parallel up to the CURVFLOW_THREADS cap, and results are collected in index
order so reports are deterministic given config and seed.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import analysis, conditions
from .analysis import NormSpec, eoc, norm
from .elements import ElementKind
from .fespace import build_space, boundary_corrected_interpolant, interpolate
from .fields import DifferenceField, sin_pi_field
from .mesh import Domain, boundary_strip_constant, build_disk_mesh, build_interval_mesh, refine
from .model import FlowRegime
from .oracle import radial_solve, regularization_gap
from .reports import StudyReport
from .solver import (
    SolverError,
    contraction_rate,
    fixed_point_solve,
    linearized_solve,
    newton_solve,
)

__all__ = [
    "StudyError",
    "ConfigError",
    "resolve_config",
    "run_study",
    "conditions_study",
    "mesh_info_study",
    "interp_study",
    "linear_study",
    "solve_study",
    "contraction_study",
    "oracle_study",
    "full_study",
]


class StudyError(RuntimeError):
    """A study cell failed (solver divergence, bad parameters, ...)."""


class ConfigError(ValueError):
    """Malformed or unknown configuration; names the offending field."""


_DEFAULTS = {
    "study": {"kind": "full", "out": "out", "seed": 7},
    "domain": {"kind": "disk", "R": 1.0, "boundary_order": 1},
    "regime": {"name": "mcf", "k": 1},
    "element": {"kind": "argyris5"},
    "params": {"mu": 3.0, "wdeg": 2, "gamma": 1.0, "delta": 0.6},
    "sweep": {"eps": [0.25], "levels": 3, "h0": 0.5},
    "solver": {"max_iter": 2000, "tol": 1e-9, "residual_tol": 1e-12, "pairs": 4},
    "oracle": {"resolution": 10000},
}

_KNOWN_KINDS = (
    "conditions",
    "mesh-info",
    "interp",
    "linear",
    "solve",
    "contraction",
    "oracle",
    "full",
)


def resolve_config(user: dict) -> dict:
    """Merge a user config over the documented defaults; reject unknown keys."""
    cfg = {}
    for section, defaults in _DEFAULTS.items():
        merged = dict(defaults)
        extra = user.get(section, {})
        if not isinstance(extra, dict):
            raise ConfigError(f"config section [{section}] must be a table")
        for key, value in extra.items():
            if key not in defaults and key not in ("cells0", "deg", "n"):
                raise ConfigError(f"unknown config field [{section}] {key}")
            merged[key] = value
        cfg[section] = merged
    for section in user:
        if section not in _DEFAULTS and section != "schema_version":
            raise ConfigError(f"unknown config section [{section}]")
    if cfg["study"]["kind"] not in _KNOWN_KINDS:
        raise ConfigError(f"unknown study kind {cfg['study']['kind']!r}")
    return cfg


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("CURVFLOW_THREADS", "1")))
    except ValueError:
        return 1


def _map_cells(fn, items):
    nt = _threads()
    if nt == 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=nt) as pool:
        return list(pool.map(fn, items))


def _regime(cfg) -> FlowRegime:
    r = cfg["regime"]
    if "sigma" in r and isinstance(r.get("sigma"), int):
        return FlowRegime(r["sigma"], r["alpha"])
    name = r.get("name", "mcf")
    if name == "imcf":
        return FlowRegime.imcf()
    if name == "mcf":
        return FlowRegime.mcf(int(r.get("k", 1)))
    raise ConfigError(f"unknown regime {name!r}")


def _element(cfg) -> ElementKind:
    kind = cfg["element"]["kind"]
    table = {
        "hermite3": ElementKind("hermite", 3),
        "hermite5": ElementKind("hermite", 5),
        "argyris5": ElementKind("argyris", 5),
        "argyris": ElementKind("argyris", 5),
    }
    if kind not in table:
        raise ConfigError(f"unknown element kind {kind!r}")
    return table[kind]


def _domain(cfg) -> Domain:
    d = cfg["domain"]
    return Domain(d["kind"], float(d["R"]))


def _mesh_level(cfg, level: int):
    dom = _domain(cfg)
    if dom.kind == "interval":
        cells0 = cfg["sweep"].get("cells0")
        if cells0 is None:
            cells0 = max(1, round(2.0 * dom.R / cfg["sweep"]["h0"]))
        return build_interval_mesh(dom.R, cells0 * 2**level)
    mesh = build_disk_mesh(
        dom.R, cfg["sweep"]["h0"], q=int(cfg["domain"]["boundary_order"])
    )
    for _ in range(level):
        mesh = refine(mesh)
    return mesh


def _params(cfg, eps: float, h: float) -> conditions.ParameterSet:
    p = cfg["params"]
    el = _element(cfg)
    dom = _domain(cfg)
    return conditions.ParameterSet(
        n=int(p.get("n", dom.dim - 1)),
        mu=float(p["mu"]),
        deg=int(p.get("deg", el.degree)),
        wdeg=int(p["wdeg"]),
        epsilon=eps,
        gamma=float(p["gamma"]),
        delta=float(p["delta"]),
        h=h,
    )


def _flag_theory(report: StudyReport, cond: conditions.ConditionReport):
    if not cond.sufficient_ok["all"]:
        report.flags["out_of_theory"] = True


def _oracle_field(cfg, regime, eps, dim):
    dom = _domain(cfg)
    prof = radial_solve(
        regime, eps, dom.R, dim - 1, resolution=int(cfg["oracle"]["resolution"])
    )
    return prof, prof.as_field(dim)


# ---------------------------------------------------------------------------


def conditions_study(cfg) -> StudyReport:
    report = StudyReport(kind="conditions", config=cfg)
    eps = float(cfg["sweep"]["eps"][0])
    h = float(cfg["sweep"]["h0"])
    params = _params(cfg, eps, h)
    cond = conditions.sufficient_conditions(params)
    _flag_theory(report, cond)
    report.summary = cond.to_dict()
    rho = cond.rho if cond.rho is not None else 0.0
    i1, i2, i3, a, b = conditions.bound_budget(params, min(rho, 1.0), 1.0)
    t = report.add_table("budget", ["I1", "I2", "I3", "A", "B"])
    t.append(i1, i2, i3, a, b)
    return report


def mesh_info_study(cfg) -> StudyReport:
    report = StudyReport(kind="mesh-info", config=cfg)
    dom = _domain(cfg)
    t = report.add_table(
        "meshes", ["level", "h", "vertices", "cells", "shape_ratio", "strip_constant"]
    )
    wdeg = int(cfg["params"]["wdeg"])
    for level in range(int(cfg["sweep"]["levels"])):
        mesh = _mesh_level(cfg, level)
        t.append(
            level,
            mesh.h,
            mesh.num_vertices,
            mesh.num_cells,
            mesh.shape_ratio,
            boundary_strip_constant(mesh, dom, wdeg),
        )
    report.summary["wdeg"] = wdeg
    return report


def interp_study(cfg) -> StudyReport:
    report = StudyReport(kind="interp", config=cfg)
    el = _element(cfg)
    dom = _domain(cfg)
    fn = sin_pi_field(dom.dim)
    levels = int(cfg["sweep"]["levels"])

    def cell(level):
        mesh = _mesh_level(cfg, level)
        space = build_space(mesh, el, constrained=False)
        u = interpolate(space, fn)
        row = [level, mesh.h]
        for m in (0, 1, 2):
            row.append(norm(DifferenceField(u, fn), NormSpec(m, 2, space)))
        row.append(norm(DifferenceField(u, fn), NormSpec(1, math.inf, space)))
        return row

    rows = _map_cells(cell, list(range(levels)))
    t = report.add_table("errors", ["level", "h", "err_L2", "err_H1", "err_H2", "err_W1inf"])
    for row in rows:
        t.append(*row)
    rates = report.add_table("rates", ["pair", "rate_L2", "rate_H1", "rate_H2"])
    series = {name: [(row[1], row[2 + i]) for row in rows] for i, name in enumerate(["L2", "H1", "H2"])}
    eocs = {name: eoc(vals) for name, vals in series.items()}
    for j in range(levels - 1):
        rates.append(j, eocs["L2"][j], eocs["H1"][j], eocs["H2"][j])
    report.summary = {
        "element": el.name,
        "min_rate_H1": min(eocs["H1"]) if eocs["H1"] else None,
        "min_rate_H2": min(eocs["H2"]) if eocs["H2"] else None,
    }
    return report


def linear_study(cfg) -> StudyReport:
    """Linearized solves with unit forcing across the eps sweep: stability
    ratio, sup-norm bound validity, coercivity check, best-approximation ratio
    against a one-level-finer reference solve."""
    from .fields import CallableField

    report = StudyReport(kind="linear", config=cfg)
    regime = _regime(cfg)
    el = _element(cfg)
    dom = _domain(cfg)
    t = report.add_table(
        "sweep",
        [
            "eps",
            "h",
            "stability_ratio",
            "sup_uh",
            "alexandrov_bound",
            "bound_ok",
            "garding_ok",
            "best_approx_ratio",
        ],
    )

    def one(eps):
        mesh = _mesh_level(cfg, 0)
        space = build_space(mesh, el, constrained=True)
        _, ref = _oracle_field(cfg, regime, eps, dom.dim)
        base = interpolate(space, ref)
        g_one = CallableField(dom.dim, lambda p: np.ones(len(p)))
        solve = linearized_solve(space, regime, eps, base, None, g_one)

        fine_mesh = refine(mesh)
        fine_space = build_space(fine_mesh, el, constrained=True)
        fine_base = interpolate(fine_space, ref)
        fine = linearized_solve(fine_space, regime, eps, fine_base, None, g_one)

        diag = analysis.stability_diagnostic(
            space, solve.field, solve.rhs_norm_lnp1, reference=fine.field
        )
        bound = analysis.alexandrov_bound(solve.alexandrov_input())
        sup = norm(solve.field, NormSpec(0, math.inf, space))
        gard = analysis.garding_check(
            space, solve.field, (solve.lam_q, solve.c_q), solve.rhs_values, eps_test=0.1
        )
        return [
            eps,
            mesh.h,
            diag["stability_ratio"],
            sup,
            bound,
            bool(bound >= sup),
            bool(gard),
            diag.get("best_approx_ratio"),
        ]

    for row in _map_cells(one, [float(e) for e in cfg["sweep"]["eps"]]):
        t.append(*row)
    report.summary["all_bounds_valid"] = all(bool(r[5]) for r in t.rows)
    return report


def solve_study(cfg, outdir: str | None = None) -> StudyReport:
    report = StudyReport(kind="solve", config=cfg)
    regime = _regime(cfg)
    el = _element(cfg)
    dom = _domain(cfg)
    eps = float(cfg["sweep"]["eps"][0])
    mesh = _mesh_level(cfg, 0)
    space = build_space(mesh, el, constrained=True)
    params = _params(cfg, eps, mesh.h)
    cond = conditions.sufficient_conditions(params)
    _flag_theory(report, cond)
    _, ref = _oracle_field(cfg, regime, eps, dom.dim)

    sol = cfg["solver"]
    try:
        u_fp, trace = fixed_point_solve(
            space,
            regime,
            eps,
            params,
            max_iter=int(sol["max_iter"]),
            tol=float(sol["tol"]),
            reference=ref,
            residual_tol=float(sol["residual_tol"]),
        )
        u_nw, _ = newton_solve(
            space,
            regime,
            eps,
            boundary_corrected_interpolant(space, ref),
            max_iter=50,
            tol=float(sol["residual_tol"]),
        )
    except SolverError as exc:
        raise StudyError(f"solve failed: {exc}") from exc

    t = report.add_table("trace", ["k", "step_norm", "residual", "in_ball"])
    for row in trace.to_rows():
        t.append(*row)
    report.summary = {
        "eps": eps,
        "h": mesh.h,
        "iterations": trace.iterations,
        "final_residual": trace.records[-1]["residual"],
        "rho": trace.rho,
        "rho_overflow": trace.rho_overflow,
        "all_in_ball": trace.all_in_ball(),
        "fp_newton_H1_distance": norm(u_fp - u_nw, NormSpec(1, 2, space)),
        "H1_error_vs_oracle": norm(DifferenceField(u_fp, ref), NormSpec(1, 2, space)),
        "sufficient_all": cond.sufficient_ok["all"],
    }
    if outdir:
        os.makedirs(outdir, exist_ok=True)
        trace.write_csv(os.path.join(outdir, "trace.csv"))
        u_fp.dump(
            os.path.join(outdir, "solution.csv"), os.path.join(outdir, "solution.json")
        )
    return report


def contraction_study(cfg) -> StudyReport:
    report = StudyReport(kind="contraction", config=cfg)
    regime = _regime(cfg)
    el = _element(cfg)
    dom = _domain(cfg)
    eps = float(cfg["sweep"]["eps"][0])
    _, ref = _oracle_field(cfg, regime, eps, dom.dim)
    seed = int(cfg["study"]["seed"])
    pairs = int(cfg["solver"]["pairs"])

    def one(level):
        mesh = _mesh_level(cfg, level)
        space = build_space(mesh, el, constrained=True)
        params = _params(cfg, eps, mesh.h)
        cond = conditions.sufficient_conditions(params)
        rate = contraction_rate(
            space, regime, eps, params, pairs=pairs, reference=ref, seed=seed
        )
        return [level, mesh.h, rate, cond.sufficient_ok["all"], cond.rho]

    rows = _map_cells(one, list(range(int(cfg["sweep"]["levels"]))))
    t = report.add_table("rates", ["level", "h", "rate", "sufficient_all", "rho"])
    for row in rows:
        t.append(*row)
        if not row[3]:
            report.flags["out_of_theory"] = True
    hs = [r[1] for r in rows]
    rates = [r[2] for r in rows]
    etas = eoc(list(zip(hs, rates)))
    report.summary = {
        "max_rate": max(rates),
        "rates_decreasing": all(a > b for a, b in zip(rates, rates[1:])),
        "measured_eta": etas,
        "seed": seed,
    }
    return report


def oracle_study(cfg, outdir: str | None = None) -> StudyReport:
    report = StudyReport(kind="oracle", config=cfg)
    regime = _regime(cfg)
    dom = _domain(cfg)
    n = int(cfg["params"].get("n", dom.dim - 1))
    res = int(cfg["oracle"]["resolution"])
    t = report.add_table("profiles", ["eps", "sup_u", "u_at_R", "ode_residual", "accuracy"])
    profs = []
    for eps in cfg["sweep"]["eps"]:
        prof = radial_solve(regime, float(eps), dom.R, n, resolution=res)
        profs.append(prof)
        t.append(
            float(eps),
            float(np.max(np.abs(prof.u))),
            float(prof.u[-1]),
            prof.ode_residual,
            prof.accuracy,
        )
    if regime.sigma == -1 and n >= 1:
        gaps = regularization_gap(regime, dom.R, n, [float(e) for e in cfg["sweep"]["eps"]], res)
        g = report.add_table("gap", ["eps", "gap", "accuracy"])
        for row in gaps:
            g.append(row["eps"], row["gap"], row["accuracy"])
    if outdir:
        os.makedirs(outdir, exist_ok=True)
        profs[0].dump(
            os.path.join(outdir, "profile.csv"), os.path.join(outdir, "profile.json")
        )
    return report


def full_study(cfg) -> StudyReport:
    """Conditions arithmetic, interpolation rates, nonlinear convergence to
    the radial reference and contraction rates, in one report."""
    report = StudyReport(kind="full", config=cfg)
    regime = _regime(cfg)
    el = _element(cfg)
    dom = _domain(cfg)
    levels = int(cfg["sweep"]["levels"])
    sol = cfg["solver"]

    cond0 = conditions.sufficient_conditions(
        _params(cfg, float(cfg["sweep"]["eps"][0]), float(cfg["sweep"]["h0"]))
    )
    _flag_theory(report, cond0)
    report.summary["conditions"] = cond0.to_dict()

    conv = report.add_table(
        "convergence", ["eps", "level", "h", "H1_error", "iterations", "in_ball"]
    )
    rates_t = report.add_table("convergence_rates", ["eps", "pair", "rate_H1"])

    for eps in [float(e) for e in cfg["sweep"]["eps"]]:
        _, ref = _oracle_field(cfg, regime, eps, dom.dim)

        def one(level, eps=eps, ref=ref):
            mesh = _mesh_level(cfg, level)
            space = build_space(mesh, el, constrained=True)
            params = _params(cfg, eps, mesh.h)
            try:
                u_fp, trace = fixed_point_solve(
                    space,
                    regime,
                    eps,
                    params,
                    max_iter=int(sol["max_iter"]),
                    tol=float(sol["tol"]),
                    reference=ref,
                    residual_tol=float(sol["residual_tol"]),
                )
            except SolverError as exc:
                raise StudyError(f"level {level} solve failed: {exc}") from exc
            err = norm(DifferenceField(u_fp, ref), NormSpec(1, 2, space))
            return [eps, level, mesh.h, err, trace.iterations, trace.all_in_ball()]

        rows = _map_cells(one, list(range(levels)))
        for row in rows:
            conv.append(*row)
        series = [(row[2], row[3]) for row in rows]
        for j, rate in enumerate(eoc(series)):
            rates_t.append(eps, j, rate)

    report.summary["h1_errors_decreasing"] = all(
        a[3] > b[3]
        for a, b in zip(conv.rows, conv.rows[1:])
        if a[0] == b[0]
    )
    return report


_RUNNERS = {
    "conditions": conditions_study,
    "mesh-info": mesh_info_study,
    "interp": interp_study,
    "linear": linear_study,
    "contraction": contraction_study,
}


def run_study(cfg: dict, outdir: str | None = None) -> StudyReport:
    kind = cfg["study"]["kind"]
    if kind == "solve":
        return solve_study(cfg, outdir)
    if kind == "oracle":
        return oracle_study(cfg, outdir)
    if kind == "full":
        return full_study(cfg)
    return _RUNNERS[kind](cfg)
