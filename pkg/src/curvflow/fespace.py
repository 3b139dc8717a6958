"""H^2-conforming finite element spaces over interval and disk meshes.

Global functions are C^1 piecewise polynomials: Hermite elements (degree 3
or 5) on intervals, the quintic Argyris triangle on disks.  A space is
"constrained" when the trace-relevant boundary dofs are forced to zero, which
realizes the homogeneous boundary condition on the mesh boundary exactly.

Fields are plain coefficient vectors over the global dofs and evaluate with
derivatives up to second order anywhere in the meshed region.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .elements import ElementKind, ElementTables, build_element_tables, monomial_tables
from .fields import DifferenceField
from .mesh import Mesh
from .quadrature import QuadratureRule, for_cell_dim

__all__ = [
    "FESpace",
    "DiscreteField",
    "build_space",
    "interpolate",
    "boundary_corrected_interpolant",
    "evaluate",
    "interpolation_error",
    "inverse_estimate_ratio",
]


@dataclass
class FESpace:
    mesh: Mesh
    kind: ElementKind
    constrained: bool
    element: ElementTables = field(repr=False, default=None)
    _quad_cache: dict = field(default_factory=dict, repr=False)

    @property
    def ndofs(self) -> int:
        return self.element.ndofs

    @property
    def cell_dofs(self) -> np.ndarray:
        return self.element.cell_dofs

    @property
    def boundary_dofs(self) -> np.ndarray:
        return self.element.boundary_dofs

    @property
    def dim(self) -> int:
        return self.mesh.dim

    @property
    def default_quad_degree(self) -> int:
        # nonlinear integrands are not polynomial; 2*deg keeps interpolation
        # studies quadrature-limited well below the discretization error
        return 2 * self.kind.degree

    def free_mask(self) -> np.ndarray:
        mask = np.ones(self.ndofs, dtype=bool)
        if self.constrained:
            mask[self.boundary_dofs] = False
        return mask

    def apply_constraints(self, coeffs: np.ndarray) -> np.ndarray:
        if self.constrained:
            coeffs = coeffs.copy()
            coeffs[self.boundary_dofs] = 0.0
        return coeffs

    # -- cached tables -----------------------------------------------------

    def quad_tables(self, degree: int | None = None) -> dict:
        """Physical quadrature points/weights and basis tables per cell."""
        deg = self.default_quad_degree if degree is None else degree
        key = ("quad", deg)
        if key not in self._quad_cache:
            rule = for_cell_dim(self.dim, deg)
            self._quad_cache[key] = self._build_tables(rule.points, rule.weights)
        return self._quad_cache[key]

    def sample_tables(self, per_axis: int = 5) -> dict:
        """Tensor sample grid (per_axis**dim points) per cell, for sup norms."""
        key = ("sample", per_axis)
        if key not in self._quad_cache:
            t = np.linspace(0.0, 1.0, per_axis)
            if self.dim == 1:
                pts = t[:, None]
            else:
                xi, et = np.meshgrid(t, t, indexing="ij")
                pts = np.column_stack([xi.ravel(), (et * (1.0 - xi)).ravel()])
            self._quad_cache[key] = self._build_tables(pts, None)
        return self._quad_cache[key]

    def _build_tables(self, ref_points: np.ndarray, ref_weights) -> dict:
        mesh, el = self.mesh, self.element
        nc = mesh.num_cells
        nq = len(ref_points)
        coords = mesh.cell_coords()  # (nc, dim+1, dim)
        v0 = coords[:, 0, :]
        jac = np.stack([coords[:, i + 1, :] - v0 for i in range(self.dim)], axis=2)
        phys = v0[:, None, :] + np.einsum("cdi,qi->cqd", jac, ref_points)
        detj = np.abs(np.linalg.det(jac)) if self.dim == 2 else np.abs(jac[:, 0, 0])

        local = (phys - el.centers[:, None, :]) / el.scales[:, None, None]
        flat = local.reshape(-1, self.dim)
        mval, mgrad, mhess = monomial_tables(el.exps, flat)
        nm = len(el.exps)
        mval = mval.reshape(nc, nq, nm)
        mgrad = mgrad.reshape(nc, nq, nm, self.dim)
        mhess = mhess.reshape(nc, nq, nm, self.dim, self.dim)

        s1 = el.scales[:, None, None, None]
        val = np.einsum("cqm,cmk->cqk", mval, el.coeffs)
        grad = np.einsum("cqmd,cmk->cqkd", mgrad / s1, el.coeffs)
        hess = np.einsum("cqmde,cmk->cqkde", mhess / (s1[..., None] * el.scales[:, None, None, None, None]), el.coeffs)

        out = {"points": phys, "val": val, "grad": grad, "hess": hess}
        if ref_weights is not None:
            out["weights"] = detj[:, None] * ref_weights[None, :]
        return out

    # -- point location ----------------------------------------------------

    def locate(self, points: np.ndarray) -> np.ndarray:
        """Cell index containing each point (nearest cell within 1e-8 slack)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        mesh = self.mesh
        if self.dim == 1:
            x = mesh.vertices[:, 0]
            idx = np.searchsorted(x, pts[:, 0], side="right") - 1
            idx = np.clip(idx, 0, mesh.num_cells - 1)
            lo = x[mesh.cells[idx, 0]] - 1e-8
            hi = x[mesh.cells[idx, 1]] + 1e-8
            bad = (pts[:, 0] < lo - 1e-8) | (pts[:, 0] > hi + 1e-8)
            if np.any(bad):
                raise ValueError("point outside all cells")
            return idx
        coords = mesh.cell_coords()
        v0 = coords[:, 0, :]
        jac = np.stack([coords[:, 1, :] - v0, coords[:, 2, :] - v0], axis=2)
        inv = np.linalg.inv(jac)
        out = np.empty(len(pts), dtype=int)
        chunk = 256
        for s in range(0, len(pts), chunk):
            p = pts[s : s + chunk]
            lam = np.einsum("cij,pcj->pci", inv, p[:, None, :] - v0[None, :, :])
            lam0 = 1.0 - lam.sum(axis=2)
            score = np.minimum(np.minimum(lam[:, :, 0], lam[:, :, 1]), lam0)
            best = np.argmax(score, axis=1)
            if np.any(score[np.arange(len(p)), best] < -1e-8):
                raise ValueError("point outside all cells")
            out[s : s + chunk] = best
        return out

    def basis_at(self, points: np.ndarray, cells: np.ndarray):
        """Basis values/gradients/Hessians of the located cells at points."""
        el = self.element
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        local = (pts - el.centers[cells]) / el.scales[cells][:, None]
        mval, mgrad, mhess = monomial_tables(el.exps, local)
        c = el.coeffs[cells]  # (np, nm, nloc)
        s = el.scales[cells]
        val = np.einsum("pm,pmk->pk", mval, c)
        grad = np.einsum("pmd,pmk->pkd", mgrad, c) / s[:, None, None]
        hess = np.einsum("pmde,pmk->pkde", mhess, c) / (s**2)[:, None, None, None]
        return val, grad, hess


@dataclass
class DiscreteField:
    space: FESpace
    coeffs: np.ndarray

    @property
    def dim(self) -> int:
        return self.space.dim

    def copy(self) -> "DiscreteField":
        return DiscreteField(self.space, self.coeffs.copy())

    def __sub__(self, other):
        if isinstance(other, DiscreteField) and other.space is self.space:
            return DiscreteField(self.space, self.coeffs - other.coeffs)
        return DifferenceField(self, other)

    def __add__(self, other):
        if isinstance(other, DiscreteField) and other.space is self.space:
            return DiscreteField(self.space, self.coeffs + other.coeffs)
        raise TypeError("can only add fields on the same space")

    def evaluate(self, points: np.ndarray, order: int = 0) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        cells = self.space.locate(pts)
        val, grad, hess = self.space.basis_at(pts, cells)
        u = self.coeffs[self.space.cell_dofs[cells]]  # (np, nloc)
        if order == 0:
            return np.einsum("pk,pk->p", val, u)
        if order == 1:
            return np.einsum("pkd,pk->pd", grad, u)
        if order == 2:
            return np.einsum("pkde,pk->pde", hess, u)
        raise ValueError("order must be 0, 1 or 2")

    def at_tables(self, tables: dict, order: int = 0) -> np.ndarray:
        """Fast evaluation on this space's cached tables: (nc, nq, ...)."""
        u = self.coeffs[self.space.cell_dofs]  # (nc, nloc)
        if order == 0:
            return np.einsum("cqk,ck->cq", tables["val"], u)
        if order == 1:
            return np.einsum("cqkd,ck->cqd", tables["grad"], u)
        return np.einsum("cqkde,ck->cqde", tables["hess"], u)

    def dump(self, csv_path: str, json_path: str | None = None) -> None:
        """CSV of (x,[y],value,grad...,hess...) at cell sample points, plus an
        optional JSON sidecar with the raw dof coefficients."""
        import json

        tabs = self.space.sample_tables()
        pts = tabs["points"].reshape(-1, self.dim)
        val = self.at_tables(tabs, 0).reshape(-1)
        grad = self.at_tables(tabs, 1).reshape(-1, self.dim)
        hess = self.at_tables(tabs, 2).reshape(len(val), -1)
        cols = (
            ["x", "y"][: self.dim]
            + ["value"]
            + [f"grad_{i}" for i in range(self.dim)]
            + [f"hess_{i}{j}" for i in range(self.dim) for j in range(self.dim)]
        )
        with open(csv_path, "w") as fh:
            fh.write(",".join(cols) + "\n")
            for i in range(len(val)):
                row = list(pts[i]) + [val[i]] + list(grad[i]) + list(hess[i])
                fh.write(",".join(repr(float(x)) for x in row) + "\n")
        if json_path:
            with open(json_path, "w") as fh:
                json.dump(
                    {"element": self.space.kind.name, "coefficients": self.coeffs.tolist()},
                    fh,
                )


def build_space(mesh: Mesh, kind: ElementKind, constrained: bool = True) -> FESpace:
    element = build_element_tables(mesh, kind)
    return FESpace(mesh=mesh, kind=kind, constrained=constrained, element=element)


def interpolate(space: FESpace, fn) -> DiscreteField:
    """Dof-wise interpolant; reproduces polynomials of the element degree."""
    coeffs = np.empty(space.ndofs)
    el = space.element
    orders = np.array([f.order for f in el.functionals])
    pts = np.array([f.point for f in el.functionals])
    vals = fn.evaluate(pts, 0)
    grads = fn.evaluate(pts, 1) if np.any(orders >= 1) else None
    hesss = fn.evaluate(pts, 2) if np.any(orders == 2) else None
    for i, f in enumerate(el.functionals):
        if f.order == 0:
            coeffs[i] = vals[i]
        elif f.order == 1:
            coeffs[i] = f.d1 @ grads[i]
        else:
            coeffs[i] = f.d1 @ hesss[i] @ f.d2
    return DiscreteField(space, coeffs)


def boundary_corrected_interpolant(space: FESpace, fn) -> DiscreteField:
    """Interpolant minus its boundary-node trace part: lands in the
    constrained space exactly; the correction is supported on boundary cells."""
    u = interpolate(space, fn)
    out = u.coeffs.copy()
    out[space.boundary_dofs] = 0.0
    return DiscreteField(space, out)


def evaluate(fld: DiscreteField, x: np.ndarray, order: int = 0) -> np.ndarray:
    return fld.evaluate(x, order)


def interpolation_error(space: FESpace, fn, m: int, p: float) -> float:
    """W^{m,p} norm of fn - I_h fn measured by quadrature/sampling."""
    from .analysis import NormSpec, norm

    u = interpolate(space, fn)
    return norm(DifferenceField(u, fn), NormSpec(m=m, p=p, space=space))


def inverse_estimate_ratio(
    space: FESpace,
    trials: int,
    l: int,
    p: float,
    m: int,
    q: float,
    seed: int = 0,
) -> float:
    """Worst measured constant of the discrete inverse estimate
    ||v||_{W^{l,p}} <= c h^{m-l+min(0, n/p-n/q)} ||v||_{W^{m,q}} over random
    coefficient vectors (n is the codimension, mesh dim - 1)."""
    from .analysis import NormSpec, norm

    if not (0 <= m <= l <= 2):
        raise ValueError("need 0 <= m <= l <= 2")
    if trials < 1:
        raise ValueError("trials >= 1")
    n = space.mesh.dim - 1
    inv_p = 0.0 if np.isinf(p) else 1.0 / p
    inv_q = 0.0 if np.isinf(q) else 1.0 / q
    expo = m - l + min(0.0, n * inv_p - n * inv_q)
    scale = space.mesh.h**expo
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        v = rng.standard_normal(space.ndofs)
        v = space.apply_constraints(v)
        fld = DiscreteField(space, v)
        denom = norm(fld, NormSpec(m=m, p=q, space=space))
        numer = norm(fld, NormSpec(m=l, p=p, space=space))
        if denom > 0:
            worst = max(worst, numer / (scale * denom))
    return worst
