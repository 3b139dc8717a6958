"""Regularized nonlinearity, speed function and linearized coefficients.

The scheme replaces |z| by f_eps(z) = sqrt(|z|^2 + eps^2).  All operators of
the discrete problem are built from f_eps, its derivatives up to third order
and the speed function eta(r) = sigma * r**alpha evaluated at the
regularized gradient norm.

All functions are vectorized: ``z`` may be a single vector of shape (d,) or
a batch of shape (..., d); derivative tensors gain trailing axes (d,), (d,d),
(d,d,d).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "FlowRegime",
    "f_eps",
    "f_eps_derivatives",
    "eta",
    "linearized_coeffs",
]


@dataclass(frozen=True)
class FlowRegime:
    """Speed-law selector: sigma * r**alpha.

    Admissible regimes: (sigma=+1, alpha=1) expanding inverse-curvature flow,
    or (sigma=-1, alpha=-1/k) contraction by the k-th power of curvature.
    """

    sigma: int
    alpha: float

    def __post_init__(self):
        if self.sigma == 1:
            if self.alpha != 1:
                raise ValueError("sigma=+1 requires alpha=1")
        elif self.sigma == -1:
            if self.alpha >= 0:
                raise ValueError("sigma=-1 requires alpha=-1/k with integer k>=1")
            k = -1.0 / self.alpha
            if abs(k - round(k)) > 1e-12 or round(k) < 1:
                raise ValueError("sigma=-1 requires alpha=-1/k with integer k>=1")
        else:
            raise ValueError("sigma must be +1 or -1")

    @classmethod
    def mcf(cls, k: int = 1) -> "FlowRegime":
        """Contracting flow by the k-th power of mean curvature (k=1: MCF)."""
        return cls(sigma=-1, alpha=-1.0 / k)

    @classmethod
    def imcf(cls) -> "FlowRegime":
        """Expanding inverse mean curvature flow."""
        return cls(sigma=1, alpha=1.0)

    @property
    def name(self) -> str:
        if self.sigma == 1:
            return "imcf"
        k = round(-1.0 / self.alpha)
        return "mcf" if k == 1 else f"mcf{k}"


def f_eps(z: np.ndarray, eps: float) -> np.ndarray:
    """Regularized norm sqrt(|z|^2 + eps^2); always >= eps."""
    z = np.asarray(z, dtype=float)
    return np.sqrt(np.sum(z * z, axis=-1) + eps * eps)


def f_eps_derivatives(z: np.ndarray, eps: float):
    """Gradient, Hessian and third derivative tensor of f_eps at z.

    grad_i  = z_i / fe
    hess_ij = delta_ij / fe - z_i z_j / fe^3
    third_ijm = -(delta_ij z_m + delta_im z_j + delta_jm z_i) / fe^3
                + 3 z_i z_j z_m / fe^5

    The third-order formula follows by differentiating hess_ij once more; it
    is gated by the finite-difference tests before any diagnostic use.
    """
    z = np.asarray(z, dtype=float)
    d = z.shape[-1]
    fe = f_eps(z, eps)[..., None]  # (..., 1)
    grad = z / fe

    eye = np.eye(d)
    fe3 = fe[..., None] ** 3  # (..., 1, 1)
    hess = eye / fe[..., None] - z[..., :, None] * z[..., None, :] / fe3

    fe5 = fe[..., None, None] ** 5  # (..., 1, 1, 1)
    zi = z[..., :, None, None]
    zj = z[..., None, :, None]
    zm = z[..., None, None, :]
    third = (
        -(eye[:, :, None] * zm + eye[:, None, :] * zj + eye[None, :, :] * zi)
        / fe3[..., None]
        + 3.0 * zi * zj * zm / fe5
    )
    return grad, hess, third


def eta(regime: FlowRegime, r):
    """Speed value and derivative: (sigma r**alpha, sigma alpha r**(alpha-1)).

    The argument is the regularized gradient norm, hence r > 0 always."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("eta requires r > 0 (argument is a regularized norm >= eps)")
    value = regime.sigma * r**regime.alpha
    deriv = regime.sigma * regime.alpha * r ** (regime.alpha - 1.0)
    return value, deriv


def linearized_coeffs(regime: FlowRegime, eps: float, grad_u: np.ndarray):
    """Coefficients of the linearization at a gradient field.

    Returns (a, c, lam, Lam):
      a_ij = -hess f_eps(grad_u)             (negative definite)
      c_i  = eta'(|grad_u|_eps) grad_u_i / |grad_u|_eps
      lam  = eps^2 / |grad_u|_eps^3, Lam = 1 / |grad_u|_eps
             (spectral bounds of -a, used by the sup-norm bound)

    eta' is evaluated at the regularized norm |grad_u|_eps, which keeps the
    derivative finite at critical points for alpha < 1.
    """
    grad_u = np.asarray(grad_u, dtype=float)
    fe = f_eps(grad_u, eps)
    _, hess, _ = f_eps_derivatives(grad_u, eps)
    a = -hess
    _, deta = eta(regime, fe)
    c = deta[..., None] * grad_u / fe[..., None]
    lam = eps * eps / fe**3
    big = 1.0 / fe
    return a, c, lam, big
