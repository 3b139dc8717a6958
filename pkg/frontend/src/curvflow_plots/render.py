"""Figure rendering for curvflow report files (schema version 1).

Four figure kinds:
  eoc           log-log error vs h with least-squares slope annotations
                (interp and full reports)
  contraction   contraction rate vs h, fitted h-exponent (contraction reports)
  admissibility shaded admissible delta region over a mu range, using the
                wdeg recorded in the report's configuration
  eps-sweep     stability ratio and sup-norm bound against 1/eps (linear
                reports)

Rendering is deterministic: fixed svg hash salt, stripped date metadata, and
inputs are never modified.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

plt.rcParams["svg.hashsalt"] = "curvflow-plots"

SUPPORTED_SCHEMAS = ("1",)
FIGURE_KINDS = ("eoc", "contraction", "admissibility", "eps-sweep")

__all__ = [
    "FigureSpec",
    "SchemaError",
    "render",
    "render_all",
    "fit_slope",
]


class SchemaError(RuntimeError):
    """Report schema version not supported by this renderer."""


@dataclass
class FigureSpec:
    input_path: str
    kind: str
    output_path: str
    logx: bool = True
    logy: bool = True

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}")


def _load_report(path: str) -> dict:
    with open(path) as fh:
        report = json.load(fh)
    version = str(report.get("schema_version"))
    if version not in SUPPORTED_SCHEMAS:
        raise SchemaError(
            f"unsupported schema version {version!r} (supported: {', '.join(SUPPORTED_SCHEMAS)})"
        )
    return report


def _table(report: dict, name: str):
    t = report.get("tables", {}).get(name)
    if t is None:
        return None, None
    return t["columns"], t["rows"]


def fit_slope(hs, errs) -> float:
    """Least-squares slope of log(err) against log(h)."""
    x = np.log(np.asarray(hs, dtype=float))
    y = np.log(np.asarray(errs, dtype=float))
    a, _ = np.polyfit(x, y, 1)
    return float(a)


def _save(fig, path: str):
    meta = {"Date": None} if path.endswith(".svg") else {}
    fig.savefig(path, metadata=meta)
    plt.close(fig)


def _placeholder(spec: FigureSpec, message: str) -> dict:
    fig, ax = plt.subplots(figsize=(5, 3.4))
    ax.text(0.5, 0.5, message, ha="center", va="center", transform=ax.transAxes)
    ax.set_axis_off()
    _save(fig, spec.output_path)
    return {"kind": spec.kind, "empty": True, "message": message}


def _render_eoc(report: dict, spec: FigureSpec) -> dict:
    cols, rows = _table(report, "errors")
    series = []
    if rows:
        hs = [r[cols.index("h")] for r in rows]
        for name in cols:
            if name.startswith("err_"):
                series.append((name[4:], hs, [r[cols.index(name)] for r in rows]))
    else:
        cols, rows = _table(report, "convergence")
        if rows:
            by_eps = {}
            for r in rows:
                by_eps.setdefault(r[cols.index("eps")], []).append(
                    (r[cols.index("h")], r[cols.index("H1_error")])
                )
            for eps, pts in sorted(by_eps.items()):
                series.append(
                    (f"H1, eps={eps:g}", [p[0] for p in pts], [p[1] for p in pts])
                )
    if not rows:
        return _placeholder(spec, "no data")

    fig, ax = plt.subplots(figsize=(5.2, 3.8))
    slopes = {}
    for label, hs, errs in series:
        keep = [(h, e) for h, e in zip(hs, errs) if e and e > 0]
        if len(keep) < 2:
            continue
        hs2, errs2 = zip(*keep)
        slope = fit_slope(hs2, errs2)
        slopes[label] = slope
        ax.loglog(hs2, errs2, "o-", label=f"{label}: slope {slope:.2f}")
    ax.set_xlabel("h")
    ax.set_ylabel("error")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    ax.set_title("convergence under refinement")
    _save(fig, spec.output_path)
    return {"kind": "eoc", "slopes": slopes}


def _render_contraction(report: dict, spec: FigureSpec) -> dict:
    cols, rows = _table(report, "rates")
    if not rows:
        return _placeholder(spec, "no data")
    hs = [r[cols.index("h")] for r in rows]
    rates = [r[cols.index("rate")] for r in rows]
    fig, ax = plt.subplots(figsize=(5.2, 3.8))
    slope = fit_slope(hs, rates) if len(rows) > 1 else float("nan")
    ax.loglog(hs, rates, "s-", label=f"rate: slope {slope:.2f}")
    ax.axhline(1.0, color="k", lw=0.8, ls="--", label="contraction threshold")
    ax.set_xlabel("h")
    ax.set_ylabel("measured contraction rate")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    ax.set_title("fixed-point contraction rate vs h")
    _save(fig, spec.output_path)
    return {"kind": "contraction", "slopes": {"rate": slope}}


def _delta_lower(mu: float) -> float:
    return 2.0 if mu > 3 else 3.0 / mu - 0.5


def _nu(mu: float, wdeg: int) -> float:
    return 3.0 / mu - 3.5 + (4.0 * wdeg) / 3.0


def _render_admissibility(report: dict, spec: FigureSpec) -> dict:
    params = report.get("config", {}).get("params", {})
    wdeg = int(params.get("wdeg", 3))
    mu = np.linspace(2.0, 6.0, 241)
    lower = np.array([_delta_lower(m) for m in mu])
    upper = np.array([_nu(m, wdeg) for m in mu])
    fig, ax = plt.subplots(figsize=(5.2, 3.8))
    feasible = upper > lower
    ax.fill_between(mu, lower, upper, where=feasible, alpha=0.35,
                    label=f"admissible delta (wdeg={wdeg})")
    ax.plot(mu, lower, "k-", lw=1, label="lower endpoint")
    ax.plot(mu, upper, "b-", lw=1, label="upper endpoint")
    delta = params.get("delta")
    if delta is not None:
        ax.axhline(float(delta), color="r", lw=0.9, ls=":", label=f"delta={delta}")
    ax.set_xlabel("mu")
    ax.set_ylabel("delta")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    ax.set_title("admissible radius exponents")
    _save(fig, spec.output_path)
    return {"kind": "admissibility", "wdeg": wdeg}


def _render_eps_sweep(report: dict, spec: FigureSpec) -> dict:
    cols, rows = _table(report, "sweep")
    if not rows:
        return _placeholder(spec, "no data")
    eps = np.array([r[cols.index("eps")] for r in rows], dtype=float)
    ratio = np.array([r[cols.index("stability_ratio")] for r in rows], dtype=float)
    bound = np.array([r[cols.index("alexandrov_bound")] for r in rows], dtype=float)
    inv = 1.0 / eps
    order = np.argsort(inv)
    inv, ratio, bound = inv[order], ratio[order], bound[order]
    fig, ax = plt.subplots(figsize=(5.2, 3.8))
    ax.loglog(inv, ratio, "o-", label="stability ratio")
    finite = np.isfinite(bound)
    if finite.any():
        ax.loglog(inv[finite], bound[finite], "^--", label="sup-norm bound")
    ax.set_xlabel("1/eps")
    ax.set_ylabel("realized constant")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    ax.set_title("constants against the regularization parameter")
    _save(fig, spec.output_path)
    return {"kind": "eps-sweep", "points": int(len(rows))}


_RENDERERS = {
    "eoc": _render_eoc,
    "contraction": _render_contraction,
    "admissibility": _render_admissibility,
    "eps-sweep": _render_eps_sweep,
}


def render(spec: FigureSpec) -> dict:
    """Render one figure; returns a small metadata dict (fitted slopes...)."""
    report = _load_report(spec.input_path)
    return _RENDERERS[spec.kind](report, spec)


_KIND_BY_REPORT = {
    "interp": "eoc",
    "full": "eoc",
    "contraction": "contraction",
    "conditions": "admissibility",
    "linear": "eps-sweep",
}


def render_all(report_dir: str, out_dir: str | None = None, fmt: str = "svg") -> dict:
    """One figure per recognized report below report_dir, plus an HTML index.

    Unrecognized or unsupported files are skipped with a log line; reruns on
    unchanged input produce identical bytes."""
    out_dir = out_dir or report_dir
    os.makedirs(out_dir, exist_ok=True)
    rendered = []
    skipped = []
    for root, _dirs, files in sorted(os.walk(report_dir)):
        for name in sorted(files):
            if not name.endswith(".json"):
                continue
            path = os.path.join(root, name)
            try:
                report = _load_report(path)
            except (SchemaError, json.JSONDecodeError, KeyError) as exc:
                skipped.append((path, str(exc)))
                print(f"skipping {path}: {exc}")
                continue
            kind = _KIND_BY_REPORT.get(report.get("kind"))
            if kind is None:
                skipped.append((path, f"unrecognized report kind {report.get('kind')!r}"))
                print(f"skipping {path}: unrecognized report kind")
                continue
            rel = os.path.relpath(path, report_dir).replace(os.sep, "_")
            out_name = os.path.splitext(rel)[0] + f"_{kind}.{fmt}"
            spec = FigureSpec(path, kind, os.path.join(out_dir, out_name))
            meta = render(spec)
            rendered.append((out_name, kind, meta))

    index = os.path.join(out_dir, "index.html")
    lines = [
        "<!DOCTYPE html>",
        "<html><head><meta charset='utf-8'><title>curvflow figures</title></head><body>",
        "<h1>curvflow figures</h1>",
    ]
    for out_name, kind, _meta in rendered:
        lines.append(f"<h2>{out_name} ({kind})</h2>")
        lines.append(f"<img src='{out_name}' alt='{out_name}' width='640'>")
    if skipped:
        lines.append("<h2>skipped</h2><ul>")
        for path, reason in skipped:
            lines.append(f"<li>{os.path.basename(path)}: {reason}</li>")
        lines.append("</ul>")
    lines.append("</body></html>")
    with open(index, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return {"rendered": rendered, "skipped": skipped, "index": index}
