"""Explicit parameter arithmetic for the regularized level-set scheme.

Every admissibility condition of the discrete existence/uniqueness theory is
an explicit formula in the run parameters (n, mu, deg, wdeg, eps, gamma,
delta, h).  This module evaluates those formulas as pure arithmetic so that
studies can decide, before any mesh is built, whether a parameter cell lies
inside the theory and how large the fixed-point ball radius rho is.

Conventions:
  * the ambient space has dimension n+1 (interval: n=0, disk: n=1); the
    closed-form delta interval and the wdeg lower bound are stated for the
    n=2 reduction and are kept in that literal form,
  * generic constants and the exp(P(1/eps)) stability factors are normalized
    to 1; the module reports exponent structure, not absolute constants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

__all__ = [
    "ParameterSet",
    "ConditionReport",
    "RadiusOverflowError",
    "nu",
    "delta_interval",
    "wdeg_lower_bound",
    "contraction_exponents",
    "sufficient_conditions",
    "rho_radius",
    "bound_budget",
]

# exp() argument beyond this is treated as an overflow of the ball radius
RHO_OVERFLOW_EXPONENT = 700.0


class RadiusOverflowError(OverflowError):
    """Raised when exp(eps**-gamma) would overflow a double ("radius overflows")."""


@dataclass(frozen=True)
class ParameterSet:
    """One complete parameter cell of a study.

    n      -- spatial codimension parameter; ambient dimension is n+1
    mu     -- integrability exponent of the W^{2,mu} ball norm, mu >= 2
    deg    -- polynomial degree of the finite element space, integer >= 3
    wdeg   -- boundary-approximation order, integer >= 1
    epsilon, gamma, delta, h -- regularization, radius exponents, mesh size

    Strict positivity and mu >= 2 are enforced here; the relation
    wdeg <= deg/2 is *reported* by sufficient_conditions rather than
    enforced, so that out-of-theory cells remain representable.
    """

    n: int
    mu: float
    deg: int
    wdeg: int
    epsilon: float
    gamma: float = 1.0
    delta: float = 1.0
    h: float = 1.0

    def __post_init__(self):
        if self.n < 0 or int(self.n) != self.n:
            raise ValueError(f"n must be a nonnegative integer, got {self.n}")
        if self.mu < 2:
            raise ValueError(f"mu must be >= 2, got {self.mu}")
        if self.deg < 3 or int(self.deg) != self.deg:
            raise ValueError(f"deg must be an integer >= 3, got {self.deg}")
        if self.wdeg < 1 or int(self.wdeg) != self.wdeg:
            raise ValueError(f"wdeg must be an integer >= 1, got {self.wdeg}")
        for name in ("epsilon", "gamma", "delta", "h"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")


@dataclass
class ConditionReport:
    """Evaluated admissibility report for one ParameterSet."""

    nu: float
    delta_interval: tuple[float, float] | None
    exponents: list[float]
    sufficient_ok: dict[str, bool]
    rho: float | None
    rho_overflow: bool = False
    params: ParameterSet | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "nu": self.nu,
            "delta_interval": list(self.delta_interval) if self.delta_interval else None,
            "exponents": list(self.exponents),
            "sufficient": dict(self.sufficient_ok),
            "rho": self.rho,
            "rho_overflow": self.rho_overflow,
        }


def nu(mu: float, wdeg: int) -> float:
    """Upper endpoint of the admissible delta interval: 3/mu - 7/2 + (4/3) wdeg.

    The product is computed as (4 wdeg)/3 so that wdeg divisible by 3 gives
    the exact value (the worked example mu=2, wdeg=3 must yield exactly 2)."""
    if mu < 2:
        raise ValueError("mu must be >= 2")
    if wdeg < 1:
        raise ValueError("wdeg must be >= 1")
    return 3.0 / mu - 3.5 + (4.0 * wdeg) / 3.0


def delta_lower(mu: float) -> float:
    """Lower endpoint of the admissible delta interval (2 for mu>3, else 3/mu - 1/2)."""
    return 2.0 if mu > 3 else 3.0 / mu - 0.5


def delta_interval(mu: float, wdeg: int) -> tuple[float, float] | None:
    """Open interval of admissible delta, or None if it is empty."""
    lower = delta_lower(mu)
    upper = nu(mu, wdeg)
    if lower < upper:
        return (lower, upper)
    return None


def wdeg_lower_bound(mu: float) -> float:
    """Smallest boundary order compatible with a nonempty delta interval."""
    if mu < 2:
        raise ValueError("mu must be >= 2")
    if mu > 3:
        return 0.75 * (5.5 - 3.0 / mu)
    return 2.25


def contraction_exponents(params: ParameterSet) -> list[float]:
    """The five h-powers whose positivity makes the fixed-point map contract.

    With M := min(0, 1 - (n+1)/mu) the terms are, in order:
      2(delta+1) - (n+1)/mu + M - (n+1)/2
      delta + deg + M - (n+1)/2
      delta + 1 + M - (n+1)/2
      2(deg-1) + M + (n+1)/mu - (n+1)/2
      deg - 1 + M + (n+1)/mu - (n+1)/2
    """
    d = params.n + 1
    mu = params.mu
    deg = params.deg
    delta = params.delta
    m = min(0.0, 1.0 - d / mu)
    half = d / 2.0
    return [
        2.0 * (delta + 1.0) - d / mu + m - half,
        delta + deg + m - half,
        delta + 1.0 + m - half,
        2.0 * (deg - 1.0) + m + d / mu - half,
        deg - 1.0 + m + d / mu - half,
    ]


def rho_radius(epsilon: float, gamma: float, h: float, delta: float) -> float:
    """Fixed-point ball radius rho = exp(eps**-gamma) * h**delta.

    Raises RadiusOverflowError instead of returning infinity when the
    exponent eps**-gamma exceeds RHO_OVERFLOW_EXPONENT.
    """
    if min(epsilon, gamma, h) <= 0 or delta < 0:
        raise ValueError("epsilon, gamma, h must be > 0 and delta >= 0")
    power = epsilon ** (-gamma)
    if power > RHO_OVERFLOW_EXPONENT:
        raise RadiusOverflowError(
            f"radius overflows: eps**-gamma = {power:.3g} > {RHO_OVERFLOW_EXPONENT}"
        )
    return math.exp(power) * h**delta


def sufficient_conditions(params: ParameterSet) -> ConditionReport:
    """Evaluate every sufficient condition of the contraction argument.

    Keys of sufficient_ok:
      delta_lower  -- delta > 2 (mu>3) resp. delta > 3/mu - 1/2 (mu<=3)
      ball_a       -- (n+1)/mu - (n+1)/2 + wdeg - 2 + wdeg/(n+1) > delta
      ball_b       -- wdeg - 2 + wdeg/mu > delta
      wdeg_degree  -- wdeg <= deg/2
      contraction  -- all five contraction exponents positive
      all          -- conjunction of the above
    """
    d = params.n + 1
    mu, wdeg, deg, delta = params.mu, params.wdeg, params.deg, params.delta
    exps = contraction_exponents(params)

    ok = {
        "delta_lower": delta > delta_lower(mu),
        "ball_a": d / mu - d / 2.0 + wdeg - 2.0 + wdeg / d > delta,
        "ball_b": wdeg - 2.0 + wdeg / mu > delta,
        "wdeg_degree": wdeg <= deg / 2.0,
        "contraction": all(e > 0.0 for e in exps),
    }
    ok["all"] = all(ok.values())

    overflow = False
    try:
        rho = rho_radius(params.epsilon, params.gamma, params.h, params.delta)
    except RadiusOverflowError:
        rho = None
        overflow = True

    return ConditionReport(
        nu=nu(mu, wdeg),
        delta_interval=delta_interval(mu, wdeg),
        exponents=exps,
        sufficient_ok=ok,
        rho=rho,
        rho_overflow=overflow,
        params=params,
    )


def bound_budget(
    params: ParameterSet, rho: float, u_norm: float
) -> tuple[float, float, float, float, float]:
    """Exponent-structure budget (I1, I2, I3, A, B) of the contraction bound.

    Generic constants and the exp(P(1/eps)) factor are normalized to 1:
      I1 = h**(1-(n+1)/mu) * rho         (ball-radius part of the W^{1,oo} gap)
      I2 = h**(deg-1) * u_norm           (interpolation part, u_norm ~ |u|_{C^deg})
      I3 = h**(1+min(0, 1-(n+1)/mu))     (norm-switching factor)
      A  = (I1+I2) h^-1 (I1+I2+h+1) I3 + h^-1 (I1+I2) I3
      B  = (I1+I2) I3
    """
    if rho < 0 or u_norm < 0:
        raise ValueError("rho and u_norm must be nonnegative")
    d = params.n + 1
    h = params.h
    i1 = h ** (1.0 - d / params.mu) * rho
    i2 = h ** (params.deg - 1.0) * u_norm
    i3 = h ** (1.0 + min(0.0, 1.0 - d / params.mu))
    a = (i1 + i2) / h * (i1 + i2 + h + 1.0) * i3 + (i1 + i2) / h * i3
    b = (i1 + i2) * i3
    return (i1, i2, i3, a, b)
