"""Scalar fields with derivatives up to second order.

Everything that gets interpolated, integrated or compared implements the same
small surface: ``evaluate(points, order)`` returning values (npts,), gradients
(npts, dim) or Hessians (npts, dim, dim).  Discrete fields, analytic test
functions, radial oracle profiles and differences all share it.
"""

from __future__ import annotations

import numpy as np

__all__ = ["CallableField", "DifferenceField", "ZeroField"]


class CallableField:
    """Analytic field from vectorized callables for value/gradient/hessian."""

    def __init__(self, dim, value, gradient=None, hessian=None):
        self.dim = dim
        self._value = value
        self._gradient = gradient
        self._hessian = hessian

    def evaluate(self, points: np.ndarray, order: int = 0) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if order == 0:
            return np.asarray(self._value(pts), dtype=float)
        if order == 1:
            if self._gradient is None:
                raise ValueError("field has no gradient callable")
            return np.asarray(self._gradient(pts), dtype=float)
        if order == 2:
            if self._hessian is None:
                raise ValueError("field has no hessian callable")
            return np.asarray(self._hessian(pts), dtype=float)
        raise ValueError("order must be 0, 1 or 2")


class DifferenceField:
    """Pointwise difference a - b of two fields with the same dimension."""

    def __init__(self, a, b):
        self.a = a
        self.b = b
        self.dim = a.dim

    def evaluate(self, points, order=0):
        return self.a.evaluate(points, order) - self.b.evaluate(points, order)


class ZeroField:
    def __init__(self, dim):
        self.dim = dim

    def evaluate(self, points, order=0):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        n = len(pts)
        if order == 0:
            return np.zeros(n)
        if order == 1:
            return np.zeros((n, self.dim))
        return np.zeros((n, self.dim, self.dim))


def sin_pi_field(dim: int) -> CallableField:
    """sin(pi x) in 1D, sin(pi x) cos(pi y) in 2D; smooth test function."""
    import math

    pi = math.pi
    if dim == 1:

        def val(p):
            return np.sin(pi * p[:, 0])

        def grad(p):
            return (pi * np.cos(pi * p[:, 0]))[:, None]

        def hess(p):
            return (-(pi**2) * np.sin(pi * p[:, 0]))[:, None, None]

        return CallableField(1, val, grad, hess)

    def val2(p):
        return np.sin(pi * p[:, 0]) * np.cos(pi * p[:, 1])

    def grad2(p):
        gx = pi * np.cos(pi * p[:, 0]) * np.cos(pi * p[:, 1])
        gy = -pi * np.sin(pi * p[:, 0]) * np.sin(pi * p[:, 1])
        return np.column_stack([gx, gy])

    def hess2(p):
        s, c = np.sin(pi * p[:, 0]), np.cos(pi * p[:, 0])
        sy, cy = np.sin(pi * p[:, 1]), np.cos(pi * p[:, 1])
        out = np.empty((len(p), 2, 2))
        out[:, 0, 0] = -(pi**2) * s * cy
        out[:, 0, 1] = out[:, 1, 0] = -(pi**2) * c * sy
        out[:, 1, 1] = -(pi**2) * s * cy
        return out

    return CallableField(2, val2, grad2, hess2)


def polynomial_field(dim: int, coeffs: dict) -> CallableField:
    """Polynomial from {exponent tuple: coefficient}; exact derivatives."""

    items = [(np.array(e, dtype=int), float(c)) for e, c in coeffs.items()]

    def _mono(p, e):
        out = np.ones(len(p))
        for d in range(dim):
            out = out * p[:, d] ** e[d]
        return out

    def val(p):
        return sum(c * _mono(p, e) for e, c in items)

    def grad(p):
        g = np.zeros((len(p), dim))
        for e, c in items:
            for d in range(dim):
                if e[d] > 0:
                    e2 = e.copy()
                    e2[d] -= 1
                    g[:, d] += c * e[d] * _mono(p, e2)
        return g

    def hess(p):
        h = np.zeros((len(p), dim, dim))
        for e, c in items:
            for d1 in range(dim):
                for d2 in range(dim):
                    e2 = e.copy()
                    e2[d1] -= 1
                    fac = e[d1]
                    if e2[d2] > 0:
                        fac *= e2[d2]
                        e2[d2] -= 1
                    elif fac:
                        fac = 0
                    if fac:
                        h[:, d1, d2] += c * fac * _mono(p, e2)
        return h

    return CallableField(dim, val, grad, hess)
