"""Quadrature assembly of the nonlinear residual, its linearization and
functional right-hand sides of the form D_i f_i + g.

Sign convention: residual(w)[k] = int grad f_eps(Dw) . D phi_k
                                + int eta(f_eps(Dw)) phi_k,
so residual(w) = 0 is the discrete problem with the speed term moved to the
left-hand side.  The linearized bilinear form is exactly the derivative of
the residual, which the tests verify against finite differences.

Assembly loops are vectorized over cells with a fixed reduction order, so
identical inputs produce bit-identical vectors and matrices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sparse

from .fespace import DiscreteField, FESpace
from .model import FlowRegime, eta, f_eps, f_eps_derivatives, linearized_coeffs

__all__ = [
    "LinearSystem",
    "assemble_residual",
    "assemble_linearized",
    "assemble_functional",
    "fixed_point_rhs",
    "expansion_difi_diagnostic",
    "difi_direct",
]


@dataclass
class LinearSystem:
    matrix: sparse.csr_matrix
    rhs: np.ndarray
    constrained: np.ndarray  # boolean mask of constrained dofs

    @property
    def ndofs(self) -> int:
        return self.matrix.shape[0]

    def dump_triplets(self, path: str) -> None:
        coo = self.matrix.tocoo()
        with open(path, "w") as fh:
            for r, c, v in zip(coo.row, coo.col, coo.data):
                fh.write(f"{int(r)} {int(c)} {float(v)!r}\n")


def _constrained_mask(space: FESpace) -> np.ndarray:
    mask = np.zeros(space.ndofs, dtype=bool)
    if space.constrained:
        mask[space.boundary_dofs] = True
    return mask


def assemble_residual(
    space: FESpace, w_h: DiscreteField, regime: FlowRegime, eps: float
) -> np.ndarray:
    """Residual vector of the discrete regularized level-set equation.

    Entries at constrained dofs are zeroed: test functions run over the
    constrained space only."""
    tabs = space.quad_tables()
    w = tabs["weights"]
    grad_w = w_h.at_tables(tabs, 1)  # (nc, nq, d)
    fe = f_eps(grad_w, eps)  # (nc, nq)
    eta_val, _ = eta(regime, fe)
    flux = grad_w / fe[..., None]
    loc = np.einsum("cq,cqd,cqkd->ck", w, flux, tabs["grad"])
    loc += np.einsum("cq,cq,cqk->ck", w, eta_val, tabs["val"])
    out = np.zeros(space.ndofs)
    np.add.at(out, space.cell_dofs, loc)
    out[_constrained_mask(space)] = 0.0
    return out


def base_gradient_at_tables(space: FESpace, base_field, tabs) -> np.ndarray:
    """Gradient of a linearization point at the quadrature points; accepts
    discrete fields on this space or any evaluatable field (e.g. the radial
    reference itself)."""
    if isinstance(base_field, DiscreteField) and base_field.space is space:
        return base_field.at_tables(tabs, 1)
    pts = tabs["points"].reshape(-1, space.dim)
    nc, nq = tabs["weights"].shape
    return base_field.evaluate(pts, 1).reshape(nc, nq, space.dim)


def assemble_linearized(
    space: FESpace, base_field, regime: FlowRegime, eps: float
) -> LinearSystem:
    """Matrix of the linearization at base_field: the bilinear form
    -int a_ij D_j u D_i v + int c_i D_i u v with coefficients evaluated at
    the base gradient.  For a discrete base this equals the Jacobian of
    assemble_residual there."""
    tabs = space.quad_tables()
    w = tabs["weights"]
    grad_b = base_gradient_at_tables(space, base_field, tabs)
    a, c, _, _ = linearized_coeffs(regime, eps, grad_b)
    k = -a  # positive definite diffusion block
    loc = np.einsum("cq,cqki,cqij,cqlj->ckl", w, tabs["grad"], k, tabs["grad"])
    loc += np.einsum("cq,cqk,cqj,cqlj->ckl", w, tabs["val"], c, tabs["grad"])

    nloc = space.cell_dofs.shape[1]
    rows = np.repeat(space.cell_dofs, nloc, axis=1).ravel()
    cols = np.tile(space.cell_dofs, (1, nloc)).ravel()
    mat = sparse.coo_matrix(
        (loc.ravel(), (rows, cols)), shape=(space.ndofs, space.ndofs)
    ).tocsr()

    mask = _constrained_mask(space)
    if mask.any():
        keep = sparse.diags((~mask).astype(float))
        mat = keep @ mat @ keep + sparse.diags(mask.astype(float))
    return LinearSystem(matrix=mat, rhs=np.zeros(space.ndofs), constrained=mask)


def assemble_functional(space: FESpace, f_fields, g_field) -> np.ndarray:
    """Load vector int (D_i f_i + g) v by pointwise differentiation of the
    C^1 data f at the quadrature points (no integration by parts)."""
    tabs = space.quad_tables()
    w = tabs["weights"]
    pts = tabs["points"].reshape(-1, space.dim)
    nc, nq = w.shape
    dens = np.zeros((nc, nq))
    if f_fields is not None:
        for i, fi in enumerate(f_fields):
            gi = fi.evaluate(pts, 1).reshape(nc, nq, space.dim)
            dens += gi[..., i]
    if g_field is not None:
        dens += g_field.evaluate(pts, 0).reshape(nc, nq)
    loc = np.einsum("cq,cq,cqk->ck", w, dens, tabs["val"])
    out = np.zeros(space.ndofs)
    np.add.at(out, space.cell_dofs, loc)
    out[_constrained_mask(space)] = 0.0
    return out


def functional_rhs_norm(space: FESpace, f_fields, g_field, p: float) -> float:
    """||D_i f_i + g||_{L^p(Omega^h)} of the pointwise density."""
    tabs = space.quad_tables()
    w = tabs["weights"]
    pts = tabs["points"].reshape(-1, space.dim)
    nc, nq = w.shape
    dens = np.zeros((nc, nq))
    if f_fields is not None:
        for i, fi in enumerate(f_fields):
            dens += fi.evaluate(pts, 1).reshape(nc, nq, space.dim)[..., i]
    if g_field is not None:
        dens += g_field.evaluate(pts, 0).reshape(nc, nq)
    if np.isinf(p):
        return float(np.max(np.abs(dens)))
    return float(np.sum(w * np.abs(dens) ** p) ** (1.0 / p))


def fixed_point_rhs(
    space: FESpace, w_h: DiscreteField, regime: FlowRegime, eps: float
) -> np.ndarray:
    """The correction functional of the frozen-Jacobian map tested against the
    basis.  Testing -D_i(D_i w/|Dw|_eps) + eta(|Dw|_eps) against functions
    that vanish on the boundary and integrating by parts gives exactly the
    residual form (the interface flux is continuous for C^1 fields), so this
    is the same vector by construction."""
    return assemble_residual(space, w_h, regime, eps)


def _gauss01(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def expansion_difi_diagnostic(
    space: FESpace,
    w_h: DiscreteField,
    v_h: DiscreteField,
    base_field,
    points: np.ndarray,
    eps: float,
    n_t: int = 8,
) -> np.ndarray:
    """Four-term t-integral form of the divergence D_i f_i of the linearized
    remainder, evaluated pointwise by Gauss quadrature in t.

    With xi = v - w and alpha(t) = w + t xi the integrand collects the
    third-derivative differences of f_eps along the segment against Dxi and
    the curvature mismatch to the base field; it must agree with the direct
    differentiation difi_direct at interior points."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    dw = w_h.evaluate(pts, 1)
    d2w = w_h.evaluate(pts, 2)
    dxi = v_h.evaluate(pts, 1) - dw
    d2xi = v_h.evaluate(pts, 2) - d2w
    du = base_field.evaluate(pts, 1)
    d2u = base_field.evaluate(pts, 2)

    _, hess_u, third_u = f_eps_derivatives(du, eps)
    tg, wg = _gauss01(n_t)
    total = np.zeros(len(pts))
    for t, wt in zip(tg, wg):
        dal = dw + t * dxi
        d2al = d2w + t * d2xi
        _, hess_a, third_a = f_eps_derivatives(dal, eps)
        d3diff = third_a - third_u
        d2curv = d2al - d2u
        term = np.einsum("pmri,pm,pir->p", d3diff, dxi, d2curv)
        term += np.einsum("pmri,pm,pir->p", d3diff, dxi, d2u)
        term += np.einsum("pmri,pm,pir->p", third_u, dxi, d2curv)
        term += np.einsum("pri,pir->p", hess_a - hess_u, d2xi)
        total += wt * term
    return total


def difi_direct(
    space: FESpace,
    w_h: DiscreteField,
    v_h: DiscreteField,
    base_field,
    points: np.ndarray,
    eps: float,
) -> np.ndarray:
    """Direct pointwise differentiation of
    f_i = grad f_eps(Dv) - grad f_eps(Dw) - hess f_eps(Du) Dxi."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    dw = w_h.evaluate(pts, 1)
    d2w = w_h.evaluate(pts, 2)
    dv = v_h.evaluate(pts, 1)
    d2v = v_h.evaluate(pts, 2)
    dxi = dv - dw
    d2xi = d2v - d2w
    du = base_field.evaluate(pts, 1)
    d2u = base_field.evaluate(pts, 2)
    _, hess_v, _ = f_eps_derivatives(dv, eps)
    _, hess_w, _ = f_eps_derivatives(dw, eps)
    _, hess_u, third_u = f_eps_derivatives(du, eps)
    out = np.einsum("pir,pir->p", hess_v, d2v) - np.einsum("pir,pir->p", hess_w, d2w)
    out -= np.einsum("pirj,pir,pj->p", third_u, d2u, dxi)
    out -= np.einsum("pij,pij->p", hess_u, d2xi)
    return out
