"""Linear solves, the frozen-Jacobian fixed-point map and a Newton reference.

The fixed-point map T freezes the linearization at the radial reference
solution itself (the computable stand-in for the continuous linearization
point) and iterates
    w_{k+1} = w_k - L^{-1} residual(w_k)
starting from the boundary-corrected interpolant of the reference.  Ball
membership along the iteration is measured in W^{2,mu} against that
interpolant; the radius is exp(eps**-gamma) h**delta from the conditions
module, skipped (and flagged) when it overflows.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as spla

from .analysis import NormSpec, norm
from .assembly import LinearSystem, assemble_linearized, assemble_residual, fixed_point_rhs
from .conditions import ParameterSet, RadiusOverflowError, rho_radius
from .fespace import DiscreteField, FESpace, boundary_corrected_interpolant
from .model import FlowRegime

__all__ = [
    "SolverError",
    "IterationTrace",
    "LinearizedSolve",
    "solve_linear",
    "linearized_solve",
    "FrozenLinearization",
    "apply_T",
    "fixed_point_solve",
    "newton_solve",
    "contraction_rate",
]


class SolverError(RuntimeError):
    def __init__(self, message: str, trace: "IterationTrace | None" = None):
        super().__init__(message)
        self.trace = trace


@dataclass
class IterationTrace:
    """Per-iteration records (k, step W^{2,mu} norm, residual sup, in_ball)."""

    records: list = field(default_factory=list)
    rho: float | None = None
    rho_overflow: bool = False

    def append(self, k: int, step_norm: float, residual: float, in_ball):
        self.records.append(
            {"k": k, "step_norm": step_norm, "residual": residual, "in_ball": in_ball}
        )

    @property
    def iterations(self) -> int:
        return len(self.records)

    def all_in_ball(self) -> bool:
        return all(r["in_ball"] for r in self.records if r["in_ball"] is not None)

    def to_rows(self):
        return [
            [r["k"], r["step_norm"], r["residual"],
             "" if r["in_ball"] is None else int(r["in_ball"])]
            for r in self.records
        ]

    def write_csv(self, path: str) -> None:
        with open(path, "w") as fh:
            fh.write("k,step_norm,residual,in_ball\n")
            for row in self.to_rows():
                fh.write(",".join(str(x) for x in row) + "\n")


def _condition_estimate(matrix) -> float:
    try:
        lu = spla.splu(matrix.tocsc())
        inv_norm = spla.onenormest(
            spla.LinearOperator(matrix.shape, matvec=lu.solve)
        )
        return float(spla.onenormest(matrix) * inv_norm)
    except Exception:
        return float("inf")


def solve_linear(system: LinearSystem) -> np.ndarray:
    """Direct sparse solve with iterative refinement to ||Ax-b|| <= 1e-12 ||b||."""
    a = system.matrix.tocsc()
    b = system.rhs
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros_like(b)
    try:
        lu = spla.splu(a)
    except RuntimeError as exc:
        raise SolverError(
            f"sparse factorization failed ({exc}); cond~{_condition_estimate(system.matrix):.3e}"
        ) from exc
    x = lu.solve(b)
    for _ in range(4):
        r = b - a @ x
        if np.linalg.norm(r) <= 1e-12 * bnorm:
            break
        x = x + lu.solve(r)
    r = b - a @ x
    if not np.all(np.isfinite(x)) or np.linalg.norm(r) > 1e-10 * bnorm:
        raise SolverError(
            f"linear solve failed to reach tolerance: |r|/|b|={np.linalg.norm(r)/bnorm:.3e}, "
            f"cond~{_condition_estimate(system.matrix):.3e}"
        )
    return x


@dataclass
class LinearizedSolve:
    """One completed solve of the linearized problem with all the data the
    sup-norm bound and the coercivity diagnostics need."""

    space: FESpace
    regime: FlowRegime
    eps: float
    base_field: DiscreteField
    field: DiscreteField
    rhs_norm_lnp1: float  # ||D_i f_i + g||_{L^{n+1}(Omega^h)}
    lam_q: np.ndarray  # per-quad-point ellipticity lower bound of -a
    c_q: np.ndarray  # per-quad-point drift vector
    rhs_values: np.ndarray  # pointwise forcing at the quad points

    def alexandrov_input(self):
        from .analysis import AlexandrovInput

        from .model import f_eps

        mesh = self.space.mesh
        tabs = self.space.quad_tables()
        volume = float(np.sum(tabs["weights"]))
        if mesh.provenance and mesh.provenance[0] in ("interval", "disk"):
            diam = 2.0 * mesh.provenance[1]
        else:
            hull = mesh.vertices[np.unique(mesh.cells)]
            diam = float(np.linalg.norm(hull.max(axis=0) - hull.min(axis=0)))
        from .assembly import base_gradient_at_tables

        grad_b = base_gradient_at_tables(self.space, self.base_field, tabs)
        big_lam = float(np.max(1.0 / f_eps(grad_b, self.eps)))
        return AlexandrovInput(
            lam=float(np.min(self.lam_q)),
            Lam=big_lam,
            c1=float(np.max(np.linalg.norm(self.c_q, axis=-1))),
            c2=0.0,
            diam=diam,
            f_norm=self.rhs_norm_lnp1,
            n=mesh.dim - 1,
            volume=volume,
        )


def linearized_solve(
    space: FESpace,
    regime: FlowRegime,
    eps: float,
    base_field: DiscreteField,
    f_fields,
    g_field,
) -> LinearizedSolve:
    """Assemble and solve the linearized problem with right side D_i f_i + g."""
    from .assembly import assemble_functional, functional_rhs_norm
    from .model import linearized_coeffs

    system = assemble_linearized(space, base_field, regime, eps)
    system.rhs = assemble_functional(space, f_fields, g_field)
    x = solve_linear(system)
    field = DiscreteField(space, x)

    from .assembly import base_gradient_at_tables

    tabs = space.quad_tables()
    grad_b = base_gradient_at_tables(space, base_field, tabs)
    _, c_q, lam_q, _ = linearized_coeffs(regime, eps, grad_b)
    pts = tabs["points"].reshape(-1, space.dim)
    nc, nq = tabs["weights"].shape
    dens = np.zeros((nc, nq))
    if f_fields is not None:
        for i, fi in enumerate(f_fields):
            dens += fi.evaluate(pts, 1).reshape(nc, nq, space.dim)[..., i]
    if g_field is not None:
        dens += g_field.evaluate(pts, 0).reshape(nc, nq)
    d = space.dim
    return LinearizedSolve(
        space=space,
        regime=regime,
        eps=eps,
        base_field=base_field,
        field=field,
        rhs_norm_lnp1=functional_rhs_norm(space, f_fields, g_field, p=d),
        lam_q=lam_q,
        c_q=c_q,
        rhs_values=dens,
    )


class FrozenLinearization:
    """Factorized linearized operator at a fixed base field (discrete or any
    evaluatable field, e.g. the radial reference)."""

    def __init__(self, space: FESpace, base_field,
                 regime: FlowRegime, eps: float):
        self.space = space
        self.base_field = base_field
        self.regime = regime
        self.eps = eps
        self.system = assemble_linearized(space, base_field, regime, eps)
        try:
            self._lu = spla.splu(self.system.matrix.tocsc())
        except RuntimeError as exc:
            raise SolverError(f"frozen linearization is singular: {exc}") from exc

    def correction(self, w_h: DiscreteField) -> np.ndarray:
        rhs = fixed_point_rhs(self.space, w_h, self.regime, self.eps)
        a = self.system.matrix
        x = self._lu.solve(rhs)
        for _ in range(2):
            r = rhs - a @ x
            nb = np.linalg.norm(rhs)
            if nb == 0 or np.linalg.norm(r) <= 1e-12 * nb:
                break
            x = x + self._lu.solve(r)
        return x

    def apply(self, w_h: DiscreteField) -> DiscreteField:
        return DiscreteField(self.space, w_h.coeffs - self.correction(w_h))


def apply_T(
    space: FESpace,
    w_h: DiscreteField,
    base_field,
    regime: FlowRegime,
    eps: float,
    frozen: FrozenLinearization | None = None,
) -> DiscreteField:
    """One frozen-Jacobian correction step Tw = w - L^{-1} residual(w)."""
    lin = frozen or FrozenLinearization(space, base_field, regime, eps)
    return lin.apply(w_h)


def _ball_radius(params: ParameterSet | None):
    if params is None:
        return None, False
    try:
        return rho_radius(params.epsilon, params.gamma, params.h, params.delta), False
    except RadiusOverflowError:
        return None, True


def fixed_point_solve(
    space: FESpace,
    regime: FlowRegime,
    eps: float,
    params: ParameterSet | None,
    max_iter: int,
    tol: float,
    reference,
    residual_tol: float | None = None,
) -> tuple[DiscreteField, IterationTrace]:
    """Banach iteration of T started at the boundary-corrected interpolant of
    the reference solution.  Stops when the W^{2,mu} step norm drops below
    tol (or, if residual_tol is given, when the residual sup norm does); on
    a step-norm stop the residual is checked against 10 tol / h (documented
    slack).  Three consecutive growing steps abort the run."""
    mu = params.mu if params is not None else 2.0
    base = boundary_corrected_interpolant(space, reference)
    base = DiscreteField(space, space.apply_constraints(base.coeffs))
    rho, overflow = _ball_radius(params)
    trace = IterationTrace(rho=rho, rho_overflow=overflow)
    # the operator is frozen at the reference itself: on polygonal disks the
    # corrected interpolant's corner distortion would poison the frozen
    # coefficients and the iteration can stop contracting at fine h
    lin = FrozenLinearization(space, reference, regime, eps)
    w2mu = NormSpec(m=2, p=mu, space=space)

    w = base.copy()
    prev_step = None
    grow = 0
    for k in range(max_iter):
        w_next = lin.apply(w)
        step = norm(w_next - w, w2mu)
        res = float(np.max(np.abs(assemble_residual(space, w_next, regime, eps))))
        in_ball = None if rho is None else bool(norm(w_next - base, w2mu) <= rho)
        trace.append(k, step, res, in_ball)
        if prev_step is not None and step > prev_step:
            grow += 1
            if grow >= 3:
                raise SolverError(
                    f"fixed-point iteration diverging after {k+1} steps "
                    f"(step {step:.3e})",
                    trace,
                )
        else:
            grow = 0
        prev_step = step
        w = w_next
        if residual_tol is not None and res <= residual_tol:
            return w, trace
        if step <= tol:
            slack = 10.0 * tol / space.mesh.h
            if res > slack:
                raise SolverError(
                    f"fixed point converged in step norm but residual {res:.3e} "
                    f"exceeds slack {slack:.3e}",
                    trace,
                )
            return w, trace
    raise SolverError(f"fixed-point iteration did not converge in {max_iter} steps", trace)


def newton_solve(
    space: FESpace,
    regime: FlowRegime,
    eps: float,
    initial: DiscreteField,
    max_iter: int,
    tol: float,
) -> tuple[DiscreteField, IterationTrace]:
    """Full Newton on the residual, re-linearized at every iterate."""
    trace = IterationTrace()
    w = initial.copy()
    w = DiscreteField(space, space.apply_constraints(w.coeffs))
    prev_res = None
    grow = 0
    for k in range(max_iter):
        res_vec = assemble_residual(space, w, regime, eps)
        res = float(np.max(np.abs(res_vec)))
        trace.append(k, float("nan"), res, None)
        if res <= tol:
            return w, trace
        if prev_res is not None and res > prev_res:
            grow += 1
            if grow >= 3:
                raise SolverError(f"Newton diverging (residual {res:.3e})", trace)
        else:
            grow = 0
        prev_res = res
        system = assemble_linearized(space, w, regime, eps)
        system.rhs = res_vec
        delta = solve_linear(system)
        w = DiscreteField(space, w.coeffs - delta)
    raise SolverError(f"Newton did not converge in {max_iter} iterations", trace)


def contraction_rate(
    space: FESpace,
    regime: FlowRegime,
    eps: float,
    params: ParameterSet,
    pairs: int,
    reference,
    seed: int = 0,
) -> float:
    """max ||Tv - Tw|| / ||v - w|| in W^{2,mu} over random pairs in the ball.

    Pairs are uniform random dof perturbations of the boundary-corrected
    reference interpolant, rescaled to radii drawn uniformly in (0, rho]."""
    rho, overflow = _ball_radius(params)
    if overflow or rho is None:
        raise SolverError("ball radius overflows; no ball to sample")
    base = boundary_corrected_interpolant(space, reference)
    base = DiscreteField(space, space.apply_constraints(base.coeffs))
    lin = FrozenLinearization(space, reference, regime, eps)
    w2mu = NormSpec(m=2, p=params.mu, space=space)
    rng = np.random.default_rng(seed)

    def sample() -> DiscreteField:
        p = space.apply_constraints(rng.standard_normal(space.ndofs))
        size = norm(DiscreteField(space, p), w2mu)
        if size == 0.0:
            raise SolverError("degenerate zero perturbation")
        radius = rng.uniform(0.0, 1.0) * rho
        if radius == 0.0:
            radius = rho
        return DiscreteField(space, base.coeffs + p * (radius / size))

    worst = 0.0
    for _ in range(pairs):
        v = sample()
        w = sample()
        dist = norm(v - w, w2mu)
        if dist == 0.0:
            continue
        tv = lin.apply(v)
        tw = lin.apply(w)
        worst = max(worst, norm(tv - tw, w2mu) / dist)
    return worst
