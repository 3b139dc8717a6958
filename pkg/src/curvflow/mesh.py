"""Simplicial meshes of interval and disk domains with curved boundary data.

The disk mesh is the deterministic "spiderweb" triangulation: ring i carries
6i vertices, every annulus is triangulated sector by sector, all boundary
vertices are snapped onto the circle.  Boundary edges optionally carry a
degree-q polynomial parametrization interpolating the circle, which realizes
a boundary-approximation order wdeg = q+1 in the strip inclusion.

A text file format round-trips meshes bit-identically (header `dim nv nc nb`,
vertex lines, cell lines, boundary facet lines with curvature parameters).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

__all__ = [
    "Domain",
    "Mesh",
    "BoundaryFacet",
    "BoundaryMap",
    "build_interval_mesh",
    "build_disk_mesh",
    "refine",
    "signed_distance",
    "offset_domain",
    "build_boundary_map",
    "boundary_strip_constant",
    "save_mesh",
    "load_mesh",
]


@dataclass(frozen=True)
class Domain:
    """Interval (-R, R) or disk of radius R."""

    kind: str  # "interval" | "disk"
    R: float

    def __post_init__(self):
        if self.kind not in ("interval", "disk"):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if self.R <= 0:
            raise ValueError("R must be positive")

    @property
    def dim(self) -> int:
        return 1 if self.kind == "interval" else 2

    @property
    def diameter(self) -> float:
        return 2.0 * self.R

    @property
    def volume(self) -> float:
        return 2.0 * self.R if self.kind == "interval" else math.pi * self.R**2

    def delta0(self) -> float:
        """Width of the collar in which offset domains stay well behaved."""
        return 0.25 * self.R


@dataclass
class BoundaryFacet:
    """One boundary facet: a vertex in 1D, an edge with optional curve in 2D.

    For q >= 2 `points` holds the q-1 interior interpolation points of the
    degree-q parametrization (on the circle, equally spaced in angle).
    """

    vertices: tuple[int, ...]
    curved: bool = False
    q: int = 1
    points: np.ndarray | None = None

    def curve_points(self, mesh_vertices: np.ndarray, s: np.ndarray) -> np.ndarray:
        """Evaluate the facet parametrization at parameters s in [0, 1]."""
        a = mesh_vertices[self.vertices[0]]
        if len(self.vertices) == 1:
            return np.repeat(a[None, :], len(s), axis=0)
        b = mesh_vertices[self.vertices[1]]
        nodes = [a] + ([] if self.points is None else list(self.points)) + [b]
        nodes = np.asarray(nodes)
        q = len(nodes) - 1
        ts = np.linspace(0.0, 1.0, q + 1)
        # Lagrange interpolation through the q+1 nodes
        out = np.zeros((len(s), nodes.shape[1]))
        for j in range(q + 1):
            lj = np.ones_like(s)
            for m in range(q + 1):
                if m != j:
                    lj = lj * (s - ts[m]) / (ts[j] - ts[m])
            out += lj[:, None] * nodes[j]
        return out


@dataclass
class Mesh:
    dim: int
    vertices: np.ndarray  # (nv, dim)
    cells: np.ndarray  # (nc, dim+1) vertex indices
    boundary_facets: list[BoundaryFacet]
    h: float
    shape_ratio: float
    provenance: tuple = ()  # recipe for deterministic refinement
    _edges: np.ndarray | None = field(default=None, repr=False)
    _cell_edges: np.ndarray | None = field(default=None, repr=False)

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def num_cells(self) -> int:
        return len(self.cells)

    def cell_coords(self) -> np.ndarray:
        """Vertex coordinates per cell, shape (nc, dim+1, dim)."""
        return self.vertices[self.cells]

    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Unique edges (lo < hi vertex index) and per-cell edge indices (2D)."""
        if self.dim != 2:
            raise ValueError("edges() is a 2D mesh query")
        if self._edges is None:
            raw = np.concatenate(
                [self.cells[:, [0, 1]], self.cells[:, [1, 2]], self.cells[:, [0, 2]]]
            )
            raw.sort(axis=1)
            uniq, inv = np.unique(raw, axis=0, return_inverse=True)
            object.__setattr__(self, "_edges", uniq)
            ce = inv.reshape(3, self.num_cells).T  # columns: edge (0,1),(1,2),(0,2)
            object.__setattr__(self, "_cell_edges", ce)
        return self._edges, self._cell_edges

    def boundary_vertices(self) -> np.ndarray:
        idx = sorted({v for f in self.boundary_facets for v in f.vertices})
        return np.array(idx, dtype=int)

    def boundary_edge_set(self) -> set[tuple[int, int]]:
        out = set()
        for f in self.boundary_facets:
            if len(f.vertices) == 2:
                a, b = f.vertices
                out.add((min(a, b), max(a, b)))
        return out


def _triangle_quality(coords: np.ndarray) -> tuple[float, float]:
    """(diameter, diameter/inradius) for one triangle given 3x2 coords."""
    a, b, c = coords
    la, lb, lc = (
        np.linalg.norm(b - c),
        np.linalg.norm(a - c),
        np.linalg.norm(a - b),
    )
    diam = max(la, lb, lc)
    s = 0.5 * (la + lb + lc)
    area = 0.5 * abs((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    inradius = area / s
    return diam, diam / inradius


def build_interval_mesh(R: float, cells: int) -> Mesh:
    """Uniform mesh of (-R, R) with the given number of cells; exact boundary."""
    if cells < 1:
        raise ValueError("cells must be >= 1")
    verts = np.linspace(-R, R, cells + 1)[:, None]
    conn = np.column_stack([np.arange(cells), np.arange(1, cells + 1)])
    h = 2.0 * R / cells
    facets = [BoundaryFacet((0,)), BoundaryFacet((cells,))]
    return Mesh(
        dim=1,
        vertices=verts,
        cells=conn,
        boundary_facets=facets,
        h=h,
        shape_ratio=2.0,
        provenance=("interval", R, cells),
    )


def _disk_rings(R: float, n_rings: int, snap_boundary: bool):
    verts = [np.zeros(2)]
    for i in range(1, n_rings + 1):
        r = R * i / n_rings
        m = 6 * i
        theta = 2.0 * math.pi * np.arange(m) / m
        if i == n_rings and not snap_boundary:
            # polyhedral-style boundary: nodes sit inside the circle within an
            # O(h^2) strip, exercising the boundary diffeomorphism machinery
            hh = 1.21 * R / n_rings
            r = R - 0.2 * hh**2 / R * (1.0 + 0.5 * np.cos(3.0 * theta))
        ring = np.column_stack([r * np.cos(theta), r * np.sin(theta)])
        verts.append(ring)
    return np.vstack([verts[0][None, :], *verts[1:]])


def _ring_start(i: int) -> int:
    # center vertex is index 0; ring i starts after 6*(1+...+(i-1)) ring nodes
    return 1 + 3 * i * (i - 1)


def build_disk_mesh(
    R: float,
    h_target: float,
    q: int = 1,
    snap_boundary: bool = True,
) -> Mesh:
    """Spiderweb triangulation of the disk with boundary order q.

    Boundary edges carry a degree-q parametrization interpolating the circle;
    the measured boundary deviation is O(h^{q+1}), i.e. wdeg = q+1.
    """
    if h_target >= R:
        raise ValueError(f"h_target={h_target} too large to mesh a disk of radius {R}")
    if q < 1:
        raise ValueError("boundary order q must be >= 1")
    n_rings = max(2, math.ceil(1.21 * R / h_target))

    verts = _disk_rings(R, n_rings, snap_boundary)
    cells = []
    # innermost fan
    for j in range(6):
        cells.append((0, 1 + j, 1 + (j + 1) % 6))
    # annuli: march two angular pointers around the band, always advancing the
    # ring whose next node comes first (ties advance the outer ring)
    for i in range(2, n_rings + 1):
        inner0, outer0 = _ring_start(i - 1), _ring_start(i)
        n_in, n_out = 6 * (i - 1), 6 * i
        a = b = 0
        while a < n_out or b < n_in:
            adv_outer = b == n_in or (
                a < n_out and (a + 1) / n_out <= (b + 1) / n_in + 1e-15
            )
            oa = outer0 + a % n_out
            ib = inner0 + b % n_in
            if adv_outer:
                o1 = outer0 + (a + 1) % n_out
                cells.append((oa, o1, ib))
                a += 1
            else:
                i1 = inner0 + (b + 1) % n_in
                cells.append((oa, i1, ib))
                b += 1
    cells = np.array(cells, dtype=int)

    # boundary facets along the outer ring, with curvature data for q >= 2
    outer0 = _ring_start(n_rings)
    n_out = 6 * n_rings
    facets = []
    for j in range(n_out):
        v0 = outer0 + j
        v1 = outer0 + (j + 1) % n_out
        pts = None
        if q >= 2:
            th0 = math.atan2(verts[v0][1], verts[v0][0])
            th1 = th0 + 2.0 * math.pi / n_out
            ss = np.arange(1, q) / q
            ang = th0 + ss * (th1 - th0)
            pts = np.column_stack([R * np.cos(ang), R * np.sin(ang)])
        facets.append(BoundaryFacet((v0, v1), curved=(q >= 2), q=q, points=pts))

    diams, ratios = zip(*(_triangle_quality(verts[c]) for c in cells))
    return Mesh(
        dim=2,
        vertices=verts,
        cells=cells,
        boundary_facets=facets,
        h=max(diams),
        shape_ratio=max(ratios),
        provenance=("disk", R, n_rings, q, snap_boundary),
    )


def _disk_from_rings(R, n_rings, q, snap_boundary) -> Mesh:
    h_target = 1.21 * R / n_rings
    return build_disk_mesh(R, h_target * 1.0000001, q=q, snap_boundary=snap_boundary)


def refine(mesh: Mesh) -> Mesh:
    """Uniform refinement: interval cells double, disk ring count doubles."""
    kind = mesh.provenance[0] if mesh.provenance else None
    if kind == "interval":
        _, R, cells = mesh.provenance
        return build_interval_mesh(R, 2 * cells)
    if kind == "disk":
        _, R, n_rings, q, snap = mesh.provenance
        return _disk_from_rings(R, 2 * n_rings, q, snap)
    raise ValueError("mesh has no refinement recipe")


def signed_distance(domain: Domain, x: np.ndarray) -> np.ndarray:
    """|x| - R: negative inside, zero on the boundary, positive outside."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    return np.linalg.norm(x, axis=-1) - domain.R


def offset_domain(domain: Domain, delta: float) -> Domain:
    """Level set {d < delta} of the signed distance: same kind, radius R+delta."""
    if delta <= -domain.R:
        raise ValueError("offset would produce an empty domain")
    if abs(delta) >= domain.delta0():
        raise ValueError(
            f"|delta|={abs(delta):.3g} exceeds the collar width {domain.delta0():.3g}"
        )
    return Domain(domain.kind, domain.R + delta)


def boundary_strip_constant(mesh: Mesh, domain: Domain, wdeg: int, samples: int = 17) -> float:
    """Measured strip constant sup |d(x)| / h**wdeg over boundary facet samples."""
    s = np.linspace(0.0, 1.0, samples)
    worst = 0.0
    for f in mesh.boundary_facets:
        pts = f.curve_points(mesh.vertices, s)
        worst = max(worst, float(np.max(np.abs(signed_distance(domain, pts)))))
    return worst / mesh.h**wdeg


class _SmoothStep:
    """C^2 cutoff: 0 for t <= -2w, 1 for t >= -w, quintic smoothstep between."""

    def __init__(self, width: float):
        self.width = width

    def _s(self, t):
        return np.clip((np.asarray(t, dtype=float) + 2.0 * self.width) / self.width, 0.0, 1.0)

    def __call__(self, t):
        s = self._s(t)
        return s**3 * (10.0 - 15.0 * s + 6.0 * s**2)

    def derivative(self, t):
        s = self._s(t)
        inside = (s > 0) & (s < 1)
        return np.where(inside, 30.0 * s**2 * (1.0 - s) ** 2 / self.width, 0.0)

    def second_derivative(self, t):
        s = self._s(t)
        inside = (s > 0) & (s < 1)
        return np.where(
            inside, 60.0 * s * (1.0 - 3.0 * s + 2.0 * s**2) / self.width**2, 0.0
        )


@dataclass
class BoundaryMap:
    """Collar diffeomorphism pushing boundary mesh nodes onto the circle.

    In distance coordinates (angle, t=d(x)) the map is
        (theta, t) |-> (theta, t - u(theta) rho(t))
    with u the periodic spline through the per-node normal offsets and rho the
    cutoff (identity for t <= -2 eps_width).  Jacobian determinant in these
    coordinates: 1 - u(theta) rho'(t).
    """

    domain: Domain
    eps_width: float
    graph_offsets: np.ndarray  # per boundary node: signed distance of the node
    cutoff: _SmoothStep
    _spline: CubicSpline = field(repr=False, default=None)
    mesh_h: float = 0.0

    def _offset(self, theta, deriv=0):
        th = np.mod(theta, 2.0 * math.pi)
        return self._spline(th, deriv)

    def apply(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        r = np.linalg.norm(pts, axis=1)
        t = r - self.domain.R
        theta = np.arctan2(pts[:, 1], pts[:, 0])
        shift = self._offset(theta) * self.cutoff(t)
        r_new = r - shift
        return np.column_stack([r_new * np.cos(theta), r_new * np.sin(theta)])

    def jacobian_det(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        t = np.linalg.norm(pts, axis=1) - self.domain.R
        theta = np.arctan2(pts[:, 1], pts[:, 0])
        return 1.0 - self._offset(theta) * self.cutoff.derivative(t)

    def offset_constants(self) -> dict[str, float]:
        """Sampled sup of |u|/h^2, |Du|/h, |D2u| of the offset graph."""
        th = np.linspace(0.0, 2.0 * math.pi, 720, endpoint=False)
        R = self.domain.R
        u = self._offset(th)
        du = self._offset(th, 1) / R  # arc-length derivative
        d2u = self._offset(th, 2) / R**2
        h = self.mesh_h
        return {
            "c_value": float(np.max(np.abs(u)) / h**2),
            "c_grad": float(np.max(np.abs(du)) / h),
            "c_hess": float(np.max(np.abs(d2u))),
        }


def build_boundary_map(
    domain: Domain,
    mesh: Mesh,
    eps_width: float,
    kappa: float = 0.5,
    check_factor: float = 8.0,
) -> BoundaryMap:
    """Construct the collar map for a disk mesh whose boundary nodes sit near
    the circle.  Preconditions: boundary nodes inside the strip |d| < eps_width
    and h <= check_factor * eps_width**2 (mesh much finer than the collar)."""
    if domain.kind != "disk" or mesh.dim != 2:
        raise ValueError("boundary map is built for disk meshes")
    if mesh.h > check_factor * eps_width**2:
        raise ValueError(
            f"mesh too coarse for collar width: h={mesh.h:.3g} > "
            f"{check_factor}*eps_width^2={check_factor * eps_width**2:.3g}"
        )
    bverts = mesh.boundary_vertices()
    coords = mesh.vertices[bverts]
    d = signed_distance(domain, coords)
    if np.any(np.abs(d) >= eps_width):
        raise ValueError("boundary mesh nodes fall outside the collar strip")

    theta = np.mod(np.arctan2(coords[:, 1], coords[:, 0]), 2.0 * math.pi)
    order = np.argsort(theta)
    th_sorted = theta[order]
    off_sorted = d[order]
    th_ext = np.concatenate([th_sorted, [th_sorted[0] + 2.0 * math.pi]])
    off_ext = np.concatenate([off_sorted, [off_sorted[0]]])
    spline = CubicSpline(th_ext, off_ext, bc_type="periodic")

    bmap = BoundaryMap(
        domain=domain,
        eps_width=eps_width,
        graph_offsets=d,
        cutoff=_SmoothStep(eps_width),
        _spline=spline,
        mesh_h=mesh.h,
    )

    # invertibility: sample the collar over every boundary cell
    bedges = mesh.boundary_edge_set()
    for ci, cell in enumerate(mesh.cells):
        pairs = {(min(a, b), max(a, b)) for a, b in
                 [(cell[0], cell[1]), (cell[1], cell[2]), (cell[0], cell[2])]}
        if not (pairs & bedges):
            continue
        pts = mesh.vertices[cell]
        mids = np.vstack([pts, pts.mean(axis=0), 0.5 * (pts + np.roll(pts, 1, axis=0))])
        dets = bmap.jacobian_det(mids)
        if np.any(dets <= 1.0 - kappa) or np.any(dets >= 1.0 + kappa):
            raise ValueError(
                f"boundary map Jacobian out of ({1-kappa}, {1+kappa}) on cell {ci}"
            )
    return bmap


# ---------------------------------------------------------------------------
# text file format: header `dim nv nc nb`, then vertices, cells, facets
# ---------------------------------------------------------------------------

def save_mesh(mesh: Mesh, path: str) -> None:
    lines = [f"{mesh.dim} {mesh.num_vertices} {mesh.num_cells} {len(mesh.boundary_facets)}"]
    for v in mesh.vertices:
        lines.append(" ".join(repr(float(x)) for x in v))
    for c in mesh.cells:
        lines.append(" ".join(str(int(i)) for i in c))
    for f in mesh.boundary_facets:
        parts = [str(int(i)) for i in f.vertices]
        parts.append(str(1 if f.curved else 0))
        parts.append(str(int(f.q)))
        if f.points is not None:
            for p in f.points:
                parts.extend(repr(float(x)) for x in p)
        lines.append(" ".join(parts))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_mesh(path: str) -> Mesh:
    with open(path) as fh:
        lines = fh.read().splitlines()
    dim, nv, nc, nb = (int(tok) for tok in lines[0].split())
    verts = np.array([[float(t) for t in lines[1 + i].split()] for i in range(nv)])
    cells = np.array(
        [[int(t) for t in lines[1 + nv + i].split()] for i in range(nc)], dtype=int
    )
    facets = []
    nvert_per_facet = 1 if dim == 1 else 2
    for i in range(nb):
        toks = lines[1 + nv + nc + i].split()
        vs = tuple(int(t) for t in toks[:nvert_per_facet])
        curved = bool(int(toks[nvert_per_facet]))
        q = int(toks[nvert_per_facet + 1])
        rest = [float(t) for t in toks[nvert_per_facet + 2:]]
        pts = np.array(rest).reshape(-1, dim) if rest else None
        facets.append(BoundaryFacet(vs, curved=curved, q=q, points=pts))
    diams_ratios = None
    if dim == 2:
        diams_ratios = [_triangle_quality(verts[c]) for c in cells]
        h = max(d for d, _ in diams_ratios)
        ratio = max(r for _, r in diams_ratios)
    else:
        h = float(np.max(verts[cells[:, 1], 0] - verts[cells[:, 0], 0]))
        ratio = 2.0
    return Mesh(
        dim=dim,
        vertices=verts,
        cells=cells,
        boundary_facets=facets,
        h=h,
        shape_ratio=ratio,
    )
