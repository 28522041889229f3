"""Problem data: singular exponent, weight functions, and the nonlinear term.

The singular antiderivative G has three branches in the exponent gamma
(power-law below 1, logarithm at 1, negative power above 1, the latter two
taking the value +inf at 0). The nonlinearity f is extended to negative
arguments by its value at 0, and F is its antiderivative from 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad as _quad

from .grid import Grid, GridFunction, GridMismatchError, boundary_distance


@dataclass(frozen=True)
class SingularExponent:
    """Exponent gamma > 0 of the singular term a(x) u^(-gamma)."""

    gamma: float

    def __post_init__(self):
        if not self.gamma > 0.0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")

    @property
    def branch(self) -> str:
        if self.gamma < 1.0:
            return "sublinear"
        if self.gamma == 1.0:
            return "log"
        return "strong"


def as_exponent(gamma) -> SingularExponent:
    return gamma if isinstance(gamma, SingularExponent) else SingularExponent(float(gamma))


def g_value(gamma, t):
    """Antiderivative of s -> s^(-gamma), pinned to 0 at t=1 for the log branch.

    Defined for t >= 0 only (it is always composed with |u|); +inf at t = 0
    when gamma >= 1 marks points outside the effective domain of the energy.
    """
    gamma = as_exponent(gamma).gamma
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0.0):
        raise ValueError("g_value is defined for t >= 0 only")
    with np.errstate(divide="ignore"):
        if gamma < 1.0:
            out = t_arr ** (1.0 - gamma) / (1.0 - gamma)
        elif gamma == 1.0:
            out = np.where(t_arr > 0.0, np.log(np.where(t_arr > 0.0, t_arr, 1.0)), np.inf)
        else:
            out = np.where(
                t_arr > 0.0,
                np.where(t_arr > 0.0, t_arr, 1.0) ** (1.0 - gamma) / (1.0 - gamma),
                np.inf,
            )
    return float(out) if np.isscalar(t) or t_arr.ndim == 0 else out


# ---------------------------------------------------------------------------
# nonlinearities
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Linear:
    """f(s) = s; asymptotic slope theta = 1."""

    @property
    def theta(self) -> float:
        return 1.0

    def raw(self, s):
        return np.asarray(s, dtype=float) + 0.0

    def antiderivative(self, s):
        return np.asarray(s, dtype=float) ** 2 / 2.0

    def derivative(self, s):
        return np.ones_like(np.asarray(s, dtype=float))


@dataclass(frozen=True)
class AffineSublinear:
    """f(s) = a*s + s^r + 1 with a > 0 and r in (0, 1); theta = a."""

    a: float
    r: float

    def __post_init__(self):
        if not self.a > 0.0:
            raise ValueError(f"coefficient a must be positive, got {self.a}")
        if not 0.0 < self.r < 1.0:
            raise ValueError(f"exponent r must lie in (0, 1), got {self.r}")

    @property
    def theta(self) -> float:
        return self.a

    def raw(self, s):
        s = np.asarray(s, dtype=float)
        return self.a * s + s**self.r + 1.0

    def antiderivative(self, s):
        s = np.asarray(s, dtype=float)
        return self.a * s**2 / 2.0 + s ** (1.0 + self.r) / (1.0 + self.r) + s

    def derivative(self, s):
        # singular at 0; callers clamp s away from 0 where it matters
        s = np.asarray(s, dtype=float)
        return self.a + self.r * s ** (self.r - 1.0)


@dataclass(frozen=True)
class Custom:
    """User-supplied continuous f on [0, inf) with declared asymptotic slope theta.

    The declared theta is cross-checked against f(s)/s at large s by
    check_f_conditions; the antiderivative falls back to adaptive quadrature
    and the derivative to central differences.
    """

    func: Callable[[float], float]
    theta: float

    def __post_init__(self):
        if not self.theta > 0.0:
            raise ValueError(f"theta must be positive, got {self.theta}")

    def raw(self, s):
        s = np.asarray(s, dtype=float)
        if s.ndim == 0:
            return float(self.func(float(s)))
        return np.array([self.func(float(x)) for x in s])

    def antiderivative(self, s):
        def one(t: float) -> float:
            if t == 0.0:
                return 0.0
            val, err = _quad(self.func, 0.0, t, epsabs=1e-10, epsrel=1e-10, limit=200)
            if err > 1e-8 * max(1.0, abs(val)):
                raise RuntimeError(f"antiderivative quadrature did not converge at t={t}")
            return val

        s = np.asarray(s, dtype=float)
        if s.ndim == 0:
            return one(float(s))
        return np.array([one(float(x)) for x in s])

    def derivative(self, s):
        s = np.asarray(s, dtype=float)
        step = 1e-6 * np.maximum(1.0, np.abs(s))
        lo = np.maximum(s - step, 0.0)
        return (self.raw(s + step) - self.raw(lo)) / (s + step - lo)


Nonlinearity = Linear | AffineSublinear | Custom


def f_eval(f: Nonlinearity, t):
    """Total extension of f: f(t) for t >= 0 and the constant f(0) for t < 0."""
    t_arr = np.asarray(t, dtype=float)
    out = np.where(t_arr >= 0.0, f.raw(np.maximum(t_arr, 0.0)), f.raw(np.zeros_like(t_arr)))
    return float(out) if np.isscalar(t) or t_arr.ndim == 0 else out


def big_f_eval(f: Nonlinearity, t):
    """Antiderivative of the extended f from 0; equals f(0)*t for t < 0."""
    t_arr = np.asarray(t, dtype=float)
    f0 = f.raw(np.zeros_like(t_arr))
    out = np.where(t_arr >= 0.0, f.antiderivative(np.maximum(t_arr, 0.0)), f0 * t_arr)
    return float(out) if np.isscalar(t) or t_arr.ndim == 0 else out


def f_derivative(f: Nonlinearity, t):
    """Derivative of the extended f: f'(t) for t > 0, zero for t < 0."""
    t_arr = np.asarray(t, dtype=float)
    out = np.where(t_arr > 0.0, f.derivative(np.maximum(t_arr, np.finfo(float).tiny)), 0.0)
    return float(out) if np.isscalar(t) or t_arr.ndim == 0 else out


@dataclass(frozen=True)
class FConditionReport:
    """Sampled diagnostics for the asymptotic-slope and monotonicity conditions."""

    theta_est: float
    monotone_ok: bool
    lower_bound_ok: bool
    c_upper: float  # smallest c with f(s) <= (theta_est + 0.1) s + c on the samples


def check_f_conditions(f: Nonlinearity, samples: int = 64) -> FConditionReport:
    """Probe f(s)/s on a log grid s in [1e-6, 1e8].

    theta_est is the ratio at the largest sample; monotone_ok demands a
    non-increasing ratio (small slack for rounding); the lower bound
    f(s) >= theta_est * s is also verified on the samples. Violations are
    reported, not raised.
    """
    if samples < 16:
        raise ValueError(f"need at least 16 samples, got {samples}")
    s = np.logspace(-6.0, 8.0, samples)
    values = f_eval(f, s)
    ratios = values / s
    slack = 1e-12 * np.maximum(1.0, np.abs(ratios[:-1]))
    monotone_ok = bool(np.all(np.diff(ratios) <= slack))
    theta_est = float(ratios[-1])
    lower_slack = 1e-12 * np.maximum(1.0, theta_est * s)
    lower_bound_ok = bool(np.all(values >= theta_est * s - lower_slack))
    c_upper = float(max(np.max(values - (theta_est + 0.1) * s), 0.0))
    return FConditionReport(theta_est, monotone_ok, lower_bound_ok, c_upper)


def validate_custom(f: Custom, rel_tol: float = 1e-3) -> FConditionReport:
    """Reject a Custom nonlinearity whose declared theta disagrees with the data."""
    report = check_f_conditions(f)
    if abs(report.theta_est - f.theta) > rel_tol * abs(f.theta):
        raise ValueError(
            f"declared theta={f.theta} but sampled slope is {report.theta_est}"
        )
    return report


# ---------------------------------------------------------------------------
# weights
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConstantWeight:
    """a(x) = c. c = 0 is accepted as a testing hook that switches the
    singular term off; it is never admissible for an actual solve."""

    c: float

    def __post_init__(self):
        if self.c < 0.0:
            raise ValueError(f"constant weight must be >= 0, got {self.c}")


@dataclass(frozen=True)
class DistPowWeight:
    """a(x) = scale * d(x)^eta with d the boundary distance."""

    eta: float
    scale: float = 1.0

    def __post_init__(self):
        if not self.scale > 0.0:
            raise ValueError(f"scale must be positive, got {self.scale}")


@dataclass(eq=False)
class NodalWeight:
    """a given by strictly positive nodal values on a specific grid."""

    values: GridFunction

    def __post_init__(self):
        if not np.all(self.values.values > 0.0):
            raise ValueError("nodal weight must be strictly positive at interior nodes")


Weight = ConstantWeight | DistPowWeight | NodalWeight


def evaluate_weight(weight: Weight, grid: Grid) -> np.ndarray:
    """Nodal values of the weight on the interior nodes."""
    if isinstance(weight, ConstantWeight):
        return np.full(grid.m, weight.c)
    if isinstance(weight, DistPowWeight):
        d = boundary_distance(grid).values
        return weight.scale * d**weight.eta
    if isinstance(weight, NodalWeight):
        if not grid.compatible(weight.values.grid):
            raise GridMismatchError("nodal weight lives on a different grid")
        return weight.values.values.copy()
    raise TypeError(f"unsupported weight type {type(weight).__name__}")


def weight_admissible(weight: Weight, gamma, phi1: GridFunction | None = None) -> bool:
    """Whether the weight keeps the effective domain of the energy nonempty.

    For gamma <= 1 this is boundedness of a; for gamma > 1 the distance-power
    weight needs 1 + eta - gamma > 0, and a nodal weight is screened by the
    finiteness of the discrete integral of a * phi1^(1-gamma) (phi1 is computed
    on the weight's own grid when not supplied).
    """
    gamma = as_exponent(gamma).gamma
    if isinstance(weight, ConstantWeight):
        return weight.c > 0.0 and gamma <= 1.0
    if isinstance(weight, DistPowWeight):
        if gamma <= 1.0:
            return weight.eta >= 0.0
        return 1.0 + weight.eta - gamma > 0.0
    if isinstance(weight, NodalWeight):
        if gamma <= 1.0:
            return True
        if phi1 is None:
            from .grid import assemble_operators
            from .spectral import principal_eigenpair

            phi1 = principal_eigenpair(assemble_operators(weight.values.grid)).phi1
        a = weight.values.values
        with np.errstate(over="ignore"):
            trial = a * phi1.values ** (1.0 - gamma)
        return bool(np.all(np.isfinite(trial)))
    raise TypeError(f"unsupported weight type {type(weight).__name__}")
