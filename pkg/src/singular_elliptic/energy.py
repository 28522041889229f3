"""Energy functional, its regularized gradient, and the scalar-ray identities.

The objective is

    E(u) = 1/2 u'Au - lambda * w'F(u) - sum_i w_i a_i G(|u_i|)

with G from the model module. Points with a_i > 0 and u_i = 0 are outside the
effective domain when gamma >= 1; the energy returns +inf there so that line
searches can reject such steps without raising.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Union

import numpy as np

from . import model
from .grid import DiscreteOperators, GridFunction, h1_norm
from .model import Nonlinearity, SingularExponent, Weight, as_exponent, evaluate_weight

ArrayLike = Union[GridFunction, np.ndarray]


@dataclass(frozen=True, eq=False)
class EnergyContext:
    """One problem instance: operators, exponent, nodal weight, f, and lambda."""

    ops: DiscreteOperators
    gamma: SingularExponent
    weight: Weight
    f: Nonlinearity
    lam: float
    a: np.ndarray  # cached nodal weight values

    def with_lambda(self, lam: float) -> "EnergyContext":
        if lam < 0.0:
            raise ValueError(f"lambda must be >= 0, got {lam}")
        return replace(self, lam=float(lam))

    @property
    def grid(self):
        return self.ops.grid


def make_context(
    ops: DiscreteOperators,
    gamma,
    weight: Weight,
    f: Nonlinearity,
    lam: float,
) -> EnergyContext:
    if lam < 0.0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    if isinstance(f, model.Custom):
        model.validate_custom(f)
    a = evaluate_weight(weight, ops.grid)
    if np.any(a < 0.0):
        raise ValueError("weight must be nonnegative at interior nodes")
    return EnergyContext(ops, as_exponent(gamma), weight, f, float(lam), a)


def _values(ctx: EnergyContext, u: ArrayLike) -> np.ndarray:
    from .grid import _values_on

    return _values_on(ctx.ops, u)


def _singular_integral(ctx: EnergyContext, g_of_u: np.ndarray, mask: np.ndarray) -> float:
    """sum of w*a*g over the nodes where a > 0; +inf propagates."""
    return float(np.sum(ctx.ops.quad[mask] * ctx.a[mask] * g_of_u))


def energy_value(ctx: EnergyContext, u: ArrayLike) -> float:
    """E(u); +inf marks points outside the effective domain (gamma >= 1)."""
    v = _values(ctx, u)
    mask = ctx.a > 0.0
    absu = np.abs(v[mask])
    if ctx.gamma.gamma >= 1.0 and np.any(absu == 0.0):
        return np.inf
    quad = 0.5 * float(v @ (ctx.ops.stiffness @ v))
    f_term = ctx.lam * float(ctx.ops.quad @ model.big_f_eval(ctx.f, v))
    g_term = _singular_integral(ctx, model.g_value(ctx.gamma, absu), mask)
    return quad - f_term - g_term


def regularized_energy(ctx: EnergyContext, u: ArrayLike, eps: float) -> float:
    """E with the singular term smoothed: G(|u|) replaced by G(u + eps).

    Returns +inf whenever u + eps <= 0 at a node with positive weight, which
    keeps backtracking line searches inside the positive cone.
    """
    if eps <= 0.0:
        raise ValueError(f"eps must be positive, got {eps}")
    v = _values(ctx, u)
    mask = ctx.a > 0.0
    shifted = v[mask] + eps
    if np.any(shifted <= 0.0):
        return np.inf
    quad = 0.5 * float(v @ (ctx.ops.stiffness @ v))
    f_term = ctx.lam * float(ctx.ops.quad @ model.big_f_eval(ctx.f, v))
    g_term = _singular_integral(ctx, model.g_value(ctx.gamma, shifted), mask)
    return quad - f_term - g_term


def residual_reg(ctx: EnergyContext, u: ArrayLike, eps: float) -> GridFunction:
    """Gradient of the regularized energy: Au - w*a*(u+eps)^(-gamma) - lambda*w*f(u)."""
    if eps <= 0.0:
        raise ValueError(f"eps must be positive, got {eps}")
    v = _values(ctx, u)
    if np.any(v < 0.0):
        raise ValueError("residual_reg expects nodally nonnegative u")
    r = ctx.ops.stiffness @ v
    mask = ctx.a > 0.0
    r[mask] -= ctx.ops.quad[mask] * ctx.a[mask] * (v[mask] + eps) ** (-ctx.gamma.gamma)
    if ctx.lam != 0.0:
        r -= ctx.lam * ctx.ops.quad * model.f_eval(ctx.f, v)
    return GridFunction(ctx.grid, r)


def h_lambda(ctx: EnergyContext, u: ArrayLike) -> float:
    """Spectral-gap quadratic form ||u||^2 - lambda * theta * integral(u^2)."""
    v = _values(ctx, u)
    return h1_norm(ctx.ops, v) ** 2 - ctx.lam * ctx.f.theta * float(ctx.ops.quad @ v**2)


def j_lambda(ctx: EnergyContext, u: ArrayLike) -> float:
    """Comparison functional 1/2 H(u) - (1/(1-gamma)) * integral(a |u|^(1-gamma)).

    Only defined for gamma != 1; +inf can be returned for gamma > 1 when u
    vanishes on nodes carrying weight.
    """
    gamma = ctx.gamma.gamma
    if gamma == 1.0:
        raise ValueError("j_lambda is not defined for gamma = 1")
    v = _values(ctx, u)
    mask = ctx.a > 0.0
    absu = np.abs(v[mask])
    with np.errstate(divide="ignore"):
        powers = np.where(absu > 0.0, np.where(absu > 0.0, absu, 1.0) ** (1.0 - gamma), np.inf)
    s = _singular_integral(ctx, powers, mask)
    return 0.5 * h_lambda(ctx, v) - s / (1.0 - gamma)


def singular_ray_integral(ctx: EnergyContext, u: ArrayLike) -> float:
    """integral of a |u|^(1-gamma); the scaling coefficient of the singular term."""
    gamma = ctx.gamma.gamma
    v = _values(ctx, u)
    mask = ctx.a > 0.0
    absu = np.abs(v[mask])
    with np.errstate(divide="ignore"):
        powers = np.where(absu > 0.0, np.where(absu > 0.0, absu, 1.0) ** (1.0 - gamma), np.inf)
    return _singular_integral(ctx, powers, mask)


def t_star(ctx: EnergyContext, u: ArrayLike) -> tuple[float, float]:
    """Closed-form minimizer of t -> j_lambda(t*u) over t > 0 and its value.

    Returns (t, j_min) with t = (S/H)^(1/(1+gamma)) and
    j_min = -((1+gamma)/(2(1-gamma))) * S * (S/H)^((1-gamma)/(1+gamma)),
    where S is the singular ray integral and H = h_lambda(u). j_min is
    negative for gamma < 1 and positive for gamma > 1.
    """
    gamma = ctx.gamma.gamma
    if gamma == 1.0:
        raise ValueError("t_star is not defined for gamma = 1")
    s = singular_ray_integral(ctx, u)
    if not np.isfinite(s) or s <= 0.0:
        raise ValueError("u is outside the effective domain or the weight vanishes")
    h = h_lambda(ctx, u)
    if h <= 0.0:
        raise ValueError(
            f"h_lambda(u) = {h} <= 0; lambda is at or above the critical value"
        )
    ratio = s / h
    t = ratio ** (1.0 / (1.0 + gamma))
    j_min = -((1.0 + gamma) / (2.0 * (1.0 - gamma))) * s * ratio ** ((1.0 - gamma) / (1.0 + gamma))
    return t, j_min


def nehari_residual(ctx: EnergyContext, u: ArrayLike) -> float:
    """Scalar stationarity defect ||u||^2 - lambda*integral(f(u)u) - integral(a u^(1-gamma)).

    Vanishes at any interior minimizer of the energy (the map t -> E(t*u) is
    stationary at t = 1 there). Requires nodally positive u.
    """
    v = _values(ctx, u)
    if np.any(v <= 0.0):
        raise ValueError("nehari_residual expects nodally positive u")
    gamma = ctx.gamma.gamma
    norm_sq = h1_norm(ctx.ops, v) ** 2
    f_term = ctx.lam * float(ctx.ops.quad @ (model.f_eval(ctx.f, v) * v))
    sing = float(ctx.ops.quad @ (ctx.a * v ** (1.0 - gamma)))
    return norm_sq - f_term - sing


def phi1_upper_bound(ctx: EnergyContext, eig) -> float:
    """Value of j_lambda at the optimally scaled principal eigenfunction.

    Converged energies must sit at or below this bound (for gamma != 1 and an
    admissible weight); it tends to 0 from above for gamma > 1 and to -inf for
    gamma < 1 as lambda approaches the critical value.
    """
    return t_star(ctx, eig.phi1)[1]
