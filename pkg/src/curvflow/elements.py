"""C^1 element machinery: Hermite intervals and the quintic Argyris triangle.

Basis functions are constructed per physical cell by inverting the matrix of
degree-of-freedom functionals applied to scaled local monomials.  Functionals
are described uniformly as (order, point, directions):

  order 0 -- point value,
  order 1 -- directional derivative d . grad,
  order 2 -- second derivative v1^T H v2.

At boundary vertices of 2D meshes the six Argyris vertex dofs are taken in
the directions of the two incident boundary edges (value, dt1, dt2, t1Ht1,
t1Ht2, t2Ht2) so that the homogeneous boundary condition and the boundary
correction of interpolants are plain index sets: a function has zero trace on
the mesh boundary iff the dofs {value, dt1, dt2, t1Ht1, t2Ht2} vanish at
every boundary vertex.  The mixed dof t1Ht2 and the edge-midpoint normal
derivatives stay free.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import Mesh

__all__ = ["ElementKind", "DofFunctional", "ElementTables", "build_element_tables"]


@dataclass(frozen=True)
class ElementKind:
    family: str  # "hermite" | "argyris"
    degree: int

    def __post_init__(self):
        if self.family == "hermite":
            if self.degree not in (3, 5):
                raise ValueError("hermite elements support degree 3 or 5")
        elif self.family == "argyris":
            if self.degree != 5:
                raise ValueError("argyris element has degree 5")
        else:
            raise ValueError(f"unknown element family {self.family!r}")

    @property
    def dim(self) -> int:
        return 1 if self.family == "hermite" else 2

    @property
    def name(self) -> str:
        return f"{self.family}{self.degree}"


@dataclass
class DofFunctional:
    """One global dof: an order-k derivative functional at a node."""

    order: int
    point: np.ndarray  # physical node coordinates
    d1: np.ndarray | None = None  # direction (order>=1)
    d2: np.ndarray | None = None  # second direction (order==2)

    def apply_to_field(self, field) -> float:
        p = self.point[None, :]
        if self.order == 0:
            return float(field.evaluate(p, 0)[0])
        if self.order == 1:
            return float(self.d1 @ field.evaluate(p, 1)[0])
        h = field.evaluate(p, 2)[0]
        return float(self.d1 @ h @ self.d2)


def monomial_exponents(dim: int, degree: int) -> np.ndarray:
    if dim == 1:
        return np.array([[k] for k in range(degree + 1)], dtype=int)
    return np.array(
        [[a, b] for total in range(degree + 1) for a in range(total + 1) for b in [total - a]],
        dtype=int,
    )


def monomial_tables(exps: np.ndarray, pts: np.ndarray):
    """Values, gradients and Hessians of the monomials at local points.

    Returns val (npts, nm), grad (npts, nm, dim), hess (npts, nm, dim, dim).
    """
    pts = np.atleast_2d(pts)
    npts, dim = pts.shape
    nm = len(exps)
    val = np.ones((npts, nm))
    for d in range(dim):
        val *= pts[:, d][:, None] ** exps[:, d][None, :]

    def shifted(e_shift):
        out = np.ones((npts, nm))
        ok = np.ones(nm, dtype=bool)
        fac = np.ones(nm)
        for d in range(dim):
            e = exps[:, d] - e_shift[d]
            ok &= e >= 0
            f = np.ones(nm)
            for s in range(e_shift[d]):
                f *= np.maximum(exps[:, d] - s, 0)
            fac *= f
            out *= pts[:, d][:, None] ** np.maximum(e, 0)[None, :]
        return out * (fac * ok)[None, :]

    grad = np.zeros((npts, nm, dim))
    for d in range(dim):
        sh = np.zeros(dim, dtype=int)
        sh[d] = 1
        grad[:, :, d] = shifted(sh)
    hess = np.zeros((npts, nm, dim, dim))
    for d1 in range(dim):
        for d2 in range(dim):
            sh = np.zeros(dim, dtype=int)
            sh[d1] += 1
            sh[d2] += 1
            hess[:, :, d1, d2] = shifted(sh)
    return val, grad, hess


@dataclass
class ElementTables:
    """Per-mesh element data: dof map, functionals and basis coefficients."""

    kind: ElementKind
    ndofs: int
    cell_dofs: np.ndarray  # (nc, nloc)
    functionals: list[DofFunctional]  # global dof -> functional
    boundary_dofs: np.ndarray  # trace-relevant dof indices (sorted)
    coeffs: np.ndarray  # (nc, nm, nloc) scaled-monomial coefficients
    centers: np.ndarray  # (nc, dim) local-coordinate origins
    scales: np.ndarray  # (nc,) local-coordinate scales
    exps: np.ndarray  # monomial exponents

    @property
    def n_local(self) -> int:
        return self.cell_dofs.shape[1]


def _local_rows(exps, pt_local, order, d1, d2):
    val, grad, hess = monomial_tables(exps, pt_local[None, :])
    if order == 0:
        return val[0]
    if order == 1:
        return grad[0] @ d1
    return np.einsum("i,mij,j->m", d1, hess[0], d2)


def _hermite_layout(mesh: Mesh, kind: ElementKind):
    per_vertex = 2 if kind.degree == 3 else 3
    nv = mesh.num_vertices
    ndofs = per_vertex * nv
    e0 = np.array([1.0])
    functionals = []
    for v in range(nv):
        pt = mesh.vertices[v]
        functionals.append(DofFunctional(0, pt))
        functionals.append(DofFunctional(1, pt, e0))
        if per_vertex == 3:
            functionals.append(DofFunctional(2, pt, e0, e0))
    cell_dofs = np.array(
        [
            [per_vertex * c[0] + k for k in range(per_vertex)]
            + [per_vertex * c[1] + k for k in range(per_vertex)]
            for c in mesh.cells
        ],
        dtype=int,
    )
    # trace on an interval boundary is the point value only
    bdofs = np.array(sorted(per_vertex * f.vertices[0] for f in mesh.boundary_facets))
    return ndofs, cell_dofs, functionals, bdofs


def _boundary_tangents(mesh: Mesh):
    """Unit tangents of the two incident boundary edges per boundary vertex."""
    partners: dict[int, list[int]] = {}
    for f in mesh.boundary_facets:
        a, b = f.vertices
        partners.setdefault(a, []).append(b)
        partners.setdefault(b, []).append(a)
    tangents = {}
    for v, others in partners.items():
        if len(others) != 2:
            raise ValueError(f"boundary vertex {v} has {len(others)} boundary edges")
        others = sorted(others)
        ts = []
        for o in others:
            t = mesh.vertices[o] - mesh.vertices[v]
            ts.append(t / np.linalg.norm(t))
        tangents[v] = ts
    return tangents


def _argyris_layout(mesh: Mesh, kind: ElementKind):
    nv = mesh.num_vertices
    edges, cell_edges = mesh.edges()
    ne = len(edges)
    ndofs = 6 * nv + ne
    tangents = _boundary_tangents(mesh)
    ex = np.array([1.0, 0.0])
    ey = np.array([0.0, 1.0])

    functionals: list[DofFunctional] = []
    bdofs = []
    for v in range(nv):
        pt = mesh.vertices[v]
        if v in tangents:
            t1, t2 = tangents[v]
            base = 6 * v
            functionals.append(DofFunctional(0, pt))
            functionals.append(DofFunctional(1, pt, t1))
            functionals.append(DofFunctional(1, pt, t2))
            functionals.append(DofFunctional(2, pt, t1, t1))
            functionals.append(DofFunctional(2, pt, t1, t2))
            functionals.append(DofFunctional(2, pt, t2, t2))
            # zero trace on both incident edges: everything except t1Ht2
            bdofs.extend([base, base + 1, base + 2, base + 3, base + 5])
        else:
            functionals.append(DofFunctional(0, pt))
            functionals.append(DofFunctional(1, pt, ex))
            functionals.append(DofFunctional(1, pt, ey))
            functionals.append(DofFunctional(2, pt, ex, ex))
            functionals.append(DofFunctional(2, pt, ex, ey))
            functionals.append(DofFunctional(2, pt, ey, ey))
    for e, (lo, hi) in enumerate(edges):
        mid = 0.5 * (mesh.vertices[lo] + mesh.vertices[hi])
        t = mesh.vertices[hi] - mesh.vertices[lo]
        t = t / np.linalg.norm(t)
        n = np.array([t[1], -t[0]])  # fixed by global lo->hi edge direction
        functionals.append(DofFunctional(1, mid, n))

    cell_dofs = np.zeros((mesh.num_cells, 21), dtype=int)
    for ci, c in enumerate(mesh.cells):
        loc = []
        for v in c:
            loc.extend(range(6 * v, 6 * v + 6))
        loc.extend(6 * nv + cell_edges[ci])
        cell_dofs[ci] = loc
    return ndofs, cell_dofs, functionals, np.array(sorted(bdofs), dtype=int)


def build_element_tables(mesh: Mesh, kind: ElementKind) -> ElementTables:
    if kind.dim != mesh.dim:
        raise ValueError(
            f"element {kind.name} is {kind.dim}D but mesh is {mesh.dim}D"
        )
    if kind.family == "hermite":
        ndofs, cell_dofs, functionals, bdofs = _hermite_layout(mesh, kind)
    else:
        ndofs, cell_dofs, functionals, bdofs = _argyris_layout(mesh, kind)

    exps = monomial_exponents(mesh.dim, kind.degree)
    nm = len(exps)
    nloc = cell_dofs.shape[1]
    if nm != nloc:
        raise RuntimeError("dof count does not match polynomial dimension")

    nc = mesh.num_cells
    coords = mesh.cell_coords()
    centers = coords.mean(axis=1)
    scales = np.array(
        [
            max(np.linalg.norm(coords[c, i] - coords[c, j]) for i in range(mesh.dim + 1) for j in range(i))
            / 2.0
            for c in range(nc)
        ]
    )

    coeffs = np.zeros((nc, nm, nloc))
    for c in range(nc):
        s = scales[c]
        b = np.zeros((nloc, nloc))
        orders = np.zeros(nloc)
        for i, gd in enumerate(cell_dofs[c]):
            fn = functionals[gd]
            local_pt = (fn.point - centers[c]) / s
            b[i] = _local_rows(exps, local_pt, fn.order, fn.d1, fn.d2)
            orders[i] = fn.order
        coeffs[c] = np.linalg.solve(b, np.diag(scales[c] ** orders))
    return ElementTables(
        kind=kind,
        ndofs=ndofs,
        cell_dofs=cell_dofs,
        functionals=functionals,
        boundary_dofs=bdofs,
        coeffs=coeffs,
        centers=centers,
        scales=scales,
        exps=exps,
    )
