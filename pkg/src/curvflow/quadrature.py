"""Quadrature rules on the reference interval [0,1] and reference triangle.

Triangle rules come from collapsing a tensor Gauss rule on the unit square
(Duffy substitution x=xi, y=eta(1-xi)); the extra polynomial factor of the
Jacobian is accounted for in the point counts, so the declared exactness
degree is honest and is verified on monomials by the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["QuadratureRule", "gauss_interval", "duffy_triangle", "for_cell_dim"]


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray  # (nq, dim), reference coordinates
    weights: np.ndarray  # (nq,)
    degree: int  # polynomial exactness degree

    @property
    def dim(self) -> int:
        return self.points.shape[1]


def gauss_interval(degree: int) -> QuadratureRule:
    """Gauss-Legendre rule on [0,1] exact for polynomials of the given degree."""
    n = max(1, math.ceil((degree + 1) / 2))
    x, w = np.polynomial.legendre.leggauss(n)
    pts = (0.5 * (x + 1.0))[:, None]
    return QuadratureRule(points=pts, weights=0.5 * w, degree=2 * n - 1)


def duffy_triangle(degree: int) -> QuadratureRule:
    """Rule on the triangle {x,y>=0, x+y<=1} exact for the given degree."""
    nx = max(1, math.ceil((degree + 2) / 2))
    ny = max(1, math.ceil((degree + 1) / 2))
    gx, wx = np.polynomial.legendre.leggauss(nx)
    gy, wy = np.polynomial.legendre.leggauss(ny)
    gx = 0.5 * (gx + 1.0)
    gy = 0.5 * (gy + 1.0)
    wx *= 0.5
    wy *= 0.5
    pts = []
    wts = []
    for i in range(nx):
        for j in range(ny):
            x = gx[i]
            y = gy[j] * (1.0 - x)
            pts.append((x, y))
            wts.append(wx[i] * wy[j] * (1.0 - x))
    return QuadratureRule(points=np.array(pts), weights=np.array(wts), degree=degree)


def for_cell_dim(dim: int, degree: int) -> QuadratureRule:
    if dim == 1:
        return gauss_interval(degree)
    if dim == 2:
        return duffy_triangle(degree)
    raise ValueError(f"unsupported cell dimension {dim}")
