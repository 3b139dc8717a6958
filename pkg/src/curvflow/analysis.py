"""Norms, convergence rates, sup-norm bounds and embedding diagnostics.

W^{m,p} norms aggregate the Frobenius magnitudes of all derivative tensors up
to order m: finite p by quadrature, p = infinity by per-cell tensor sampling
(a documented under-estimate of the true sup).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "NormSpec",
    "norm",
    "eoc",
    "AlexandrovInput",
    "alexandrov_bound",
    "stability_diagnostic",
    "garding_check",
    "sobolev_embedding_check",
]


@dataclass(frozen=True)
class NormSpec:
    """W^{m,p} norm over a space's meshed region (optionally a cell subset)."""

    m: int
    p: float
    space: object
    cell_mask: np.ndarray | None = None

    def __post_init__(self):
        if self.m not in (0, 1, 2):
            raise ValueError("derivative order m must be 0, 1 or 2")
        if not (self.p >= 1):
            raise ValueError("p must be in [1, inf]")


def _eval_at(obj, space, points_flat, tables, order):
    """Evaluate a field-like object on the table points, (nc, nq[, ...])."""
    from .fespace import DiscreteField
    from .fields import DifferenceField

    nc, nq = tables["points"].shape[:2]
    if isinstance(obj, DiscreteField) and obj.space is space:
        return obj.at_tables(tables, order)
    if isinstance(obj, DifferenceField):
        return _eval_at(obj.a, space, points_flat, tables, order) - _eval_at(
            obj.b, space, points_flat, tables, order
        )
    out = obj.evaluate(points_flat, order)
    return out.reshape((nc, nq) + out.shape[1:])


def _magnitudes(obj, spec: NormSpec, tables) -> list[np.ndarray]:
    space = spec.space
    pts = tables["points"].reshape(-1, space.dim)
    mags = []
    for k in range(spec.m + 1):
        v = _eval_at(obj, space, pts, tables, k)
        if k == 0:
            mags.append(np.abs(v))
        elif k == 1:
            mags.append(np.sqrt(np.sum(v * v, axis=-1)))
        else:
            mags.append(np.sqrt(np.sum(v * v, axis=(-2, -1))))
    if spec.cell_mask is not None:
        mags = [m[spec.cell_mask] for m in mags]
    return mags


def norm(field_or_difference, spec: NormSpec) -> float:
    """W^{m,p}(Omega^h) norm of a field or difference of fields."""
    space = spec.space
    if np.isinf(spec.p):
        tabs = space.sample_tables()
        mags = _magnitudes(field_or_difference, spec, tabs)
        return float(max(np.max(m) for m in mags))
    tabs = space.quad_tables()
    mags = _magnitudes(field_or_difference, spec, tabs)
    w = tabs["weights"]
    if spec.cell_mask is not None:
        w = w[spec.cell_mask]
    total = sum(float(np.sum(w * m**spec.p)) for m in mags)
    return total ** (1.0 / spec.p)


def eoc(errors: list[tuple[float, float]]) -> list[float]:
    """Experimental orders log(e_i/e_{i+1}) / log(h_i/h_{i+1}).

    h must be strictly decreasing; a zero error saturates the rate (inf)."""
    hs = [h for h, _ in errors]
    if any(h2 >= h1 for h1, h2 in zip(hs, hs[1:])):
        raise ValueError("h must be strictly decreasing")
    rates = []
    for (h1, e1), (h2, e2) in zip(errors, errors[1:]):
        if e2 == 0.0 or e1 == 0.0:
            rates.append(math.inf)
        else:
            rates.append(math.log(e1 / e2) / math.log(h1 / h2))
    return rates


# ---------------------------------------------------------------------------
# sup-norm bound with explicit constant
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AlexandrovInput:
    """Data of the sup-norm bound for a_ij D_i D_j u + b^i D_i u + c u >= f."""

    lam: float  # ellipticity lower bound, > 0
    Lam: float  # ellipticity upper bound, >= lam
    c1: float  # sup |b|
    c2: float  # sup |c| (with c <= 0; does not enter the extracted constant)
    diam: float
    f_norm: float  # ||f||_{L^{n+1}}
    n: int  # ambient dimension is n+1
    volume: float  # measure of the domain

    def __post_init__(self):
        if not (0 < self.lam <= self.Lam):
            raise ValueError("need 0 < lam <= Lam")
        if self.c1 < 0 or self.c2 < 0 or self.diam <= 0 or self.volume <= 0:
            raise ValueError("c1, c2 >= 0 and diam, volume > 0 required")
        if self.f_norm < 0:
            raise ValueError("f_norm >= 0 required")


def _sphere_area(n: int) -> float:
    """Surface measure of the unit n-sphere in R^{n+1}."""
    return 2.0 * math.pi ** ((n + 1) / 2.0) / math.gamma((n + 1) / 2.0)


def alexandrov_dimensional_constant(n: int) -> float:
    """C_n = 2^{2n-1} / (omega_n (n+1)^n): the collected constants of the
    contact-set volume estimate (pointwise 2^n, lower-bound 2^{n-1}, radial
    integral omega_n/(n+1), denominator ((n+1) lam)^{n+1})."""
    return 2.0 ** (2 * n - 1) / (_sphere_area(n) * (n + 1) ** n)


def alexandrov_bound(inp: AlexandrovInput) -> float:
    """sup_Omega u <= diam * [exp(C_n lam^-(n+1) (c1^{n+1} vol +
    f_norm^{n+1}/mu^{n+1})) mu^{n+1}]^{1/(n+1)} with mu = f_norm.

    Returns 0 when f_norm = 0, +inf when the exponential overflows."""
    if inp.f_norm == 0.0:
        return 0.0
    d = inp.n + 1
    cn = alexandrov_dimensional_constant(inp.n)
    x = cn * inp.lam ** (-d) * (inp.c1**d * inp.volume + 1.0)
    if x / d > 700.0:
        return math.inf
    return inp.diam * math.exp(x / d) * inp.f_norm


# ---------------------------------------------------------------------------
# diagnostics on linearized solves
# ---------------------------------------------------------------------------


def stability_diagnostic(space, u_h, rhs_norm: float, reference=None) -> dict:
    """Realized stability and best-approximation ratios for one solve.

    reference, when given, is a higher-accuracy solution of the same problem
    (e.g. a fine-mesh solve); the best-approximation denominator is the
    interpolation error of that reference in this space.
    """
    from .fespace import interpolate
    from .fields import DifferenceField

    h2 = norm(u_h, NormSpec(m=2, p=2, space=space))
    out = {
        "u_h_H2": h2,
        "rhs_Lnp1": rhs_norm,
        "stability_ratio": h2 / rhs_norm if rhs_norm > 0 else None,
    }
    if reference is not None:
        err = norm(DifferenceField(u_h, reference), NormSpec(m=1, p=2, space=space))
        proxy = norm(
            DifferenceField(interpolate(space, reference), reference),
            NormSpec(m=1, p=2, space=space),
        )
        out["best_approx_error_H1"] = err
        out["best_approx_proxy_H1"] = proxy
        out["best_approx_ratio"] = err / proxy if proxy > 0 else None
    return out


def garding_check(space, field, coefficient_fields, rhs_values, eps_test: float) -> bool:
    """Coercivity-up-to-lower-order inequality, evaluated by quadrature:

        lam int |Du|^2 <= int (eps |c.Du|^2 + c_eps u^2) + int (f^2 + u^2)

    with c_eps = 1/(4 eps_test).  coefficient_fields supplies per-quad-point
    (lam_q, c_q); rhs_values the pointwise forcing f at the same points.
    """
    tabs = space.quad_tables()
    w = tabs["weights"]
    u = field.at_tables(tabs, 0)
    du = field.at_tables(tabs, 1)
    lam_q, c_q = coefficient_fields
    lam = float(np.min(lam_q))
    c_eps = 1.0 / (4.0 * eps_test)
    lhs = lam * float(np.sum(w * np.sum(du * du, axis=-1)))
    drift = np.einsum("cqd,cqd->cq", c_q, du)
    rhs = float(
        np.sum(w * (eps_test * drift**2 + c_eps * u**2))
        + np.sum(w * (rhs_values**2 + u**2))
    )
    return lhs <= rhs


def sobolev_embedding_check(
    field_family, m: int, p: float, k: int, alpha: float, n: int, seed: int = 0
) -> dict:
    """Ratio ||u||_{C^{k,alpha}} / ||u||_{W^{m,p}} over a family of fields.

    The precondition m - (n+1)/p >= k + alpha is evaluated and reported; the
    Holder seminorm is estimated from 10^4 random point pairs with separation
    >= h/10 (a lower estimate, the safe direction for boundedness reports).
    """
    d = n + 1
    inv_p = 0.0 if np.isinf(p) else 1.0 / p
    pre = m - d * inv_p >= k + alpha
    out = {"precondition": bool(pre), "m": m, "p": p, "k": k, "alpha": alpha, "n": n}
    if not pre or not field_family:
        out["ratios"] = []
        out["skipped"] = not pre
        return out
    rng = np.random.default_rng(seed)
    ratios = []
    for fld in field_family:
        space = fld.space
        mesh = space.mesh
        npairs = 10_000
        cells = rng.integers(0, mesh.num_cells, size=2 * npairs)
        if mesh.dim == 1:
            lam = rng.uniform(0, 1, size=(2 * npairs, 1))
            lam = np.column_stack([1 - lam[:, 0], lam[:, 0]])
        else:
            a = rng.uniform(0, 1, size=2 * npairs)
            b = rng.uniform(0, 1, size=2 * npairs)
            flip = a + b > 1
            a[flip], b[flip] = 1 - a[flip], 1 - b[flip]
            lam = np.column_stack([1 - a - b, a, b])
        pts = np.einsum("pv,pvd->pd", lam, mesh.vertices[mesh.cells[cells]])
        x, y = pts[:npairs], pts[npairs:]
        sep = np.linalg.norm(x - y, axis=1)
        keep = sep >= mesh.h / 10.0
        x, y, sep = x[keep], y[keep], sep[keep]
        vx = fld.evaluate(x, k)
        vy = fld.evaluate(y, k)
        dv = vx - vy
        mag = np.abs(dv) if k == 0 else np.sqrt(np.sum(dv * dv, axis=-1))
        holder = float(np.max(mag / sep**alpha)) if len(sep) else 0.0
        sup = max(
            norm(fld, NormSpec(m=0, p=np.inf, space=space)),
            norm(fld, NormSpec(m=min(k, 2), p=np.inf, space=space)),
        )
        ck = max(sup, holder)
        wmp = norm(fld, NormSpec(m=m, p=p, space=space))
        ratios.append(ck / wmp if wmp > 0 else 0.0)
    out["ratios"] = ratios
    out["skipped"] = False
    return out
