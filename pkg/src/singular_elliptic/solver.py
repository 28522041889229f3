"""Damped Newton with smoothing continuation for the singular Euler-Lagrange system.

For each eps in a decreasing schedule the smoothed optimality system

    Au = w*a*(u+eps)^(-gamma) + lambda*w*f(u)

is solved by Newton's method, globalized by a fraction-to-boundary step cap
(iterates stay strictly positive) and Armijo backtracking on the regularized
energy, with a gradient-descent fallback. The eps stages are warm-started from
each other; divergence across the schedule is classified as evidence that no
solution exists at this lambda (which is exactly what happens at or above the
critical parameter).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import model
from .energy import EnergyContext, energy_value, nehari_residual, regularized_energy
from .grid import GridFunction, boundary_distance, h1_norm
from .spectral import principal_eigenpair

_ARMIJO_C = 1e-4
_MIN_STEP = 1e-14
_STAGE_DIFF_TOL = 1e-8  # sup-norm agreement demanded of the last two eps stages
_STAGE_GROWTH = 1.5  # norm growth factor that counts as divergence evidence


@dataclass(frozen=True)
class SolverPolicy:
    eps_schedule: tuple[float, ...] = tuple(10.0**-k for k in range(1, 11))
    tol_residual: float = 1e-10  # on ||r|| / ||Au||
    max_newton: int = 200  # per eps stage
    norm_cap: float = 1e6
    damping: float = 0.99  # fraction-to-boundary factor

    def __post_init__(self):
        eps = np.asarray(self.eps_schedule)
        if eps.size == 0 or np.any(eps <= 0.0) or np.any(np.diff(eps) >= 0.0):
            raise ValueError("eps_schedule must be strictly decreasing and positive")
        if self.tol_residual <= 0.0 or self.norm_cap <= 0.0:
            raise ValueError("tol_residual and norm_cap must be positive")
        if not 0.0 < self.damping < 1.0:
            raise ValueError(f"damping must lie in (0, 1), got {self.damping}")

    @property
    def final_eps(self) -> float:
        return self.eps_schedule[-1]


@dataclass(frozen=True)
class Diagnostics:
    energy: float
    h1: float
    nehari: float
    iterations: int
    min_u_over_d: float


@dataclass(frozen=True)
class SolveOutcome:
    status: str  # converged | no_solution | failed
    u: GridFunction | None = None
    diagnostics: Diagnostics | None = None
    reason: str = ""

    @property
    def converged(self) -> bool:
        return self.status == "converged"


@dataclass
class _StageInfo:
    converged: bool = False
    iterations: int = 0
    norm_grew: bool = False
    blown_up: bool = False
    end: np.ndarray = field(default_factory=lambda: np.empty(0))


def _scaled_residual_norm(ctx: EnergyContext, r: np.ndarray, u: np.ndarray) -> float:
    scale = float(np.linalg.norm(ctx.ops.stiffness @ u))
    return float(np.linalg.norm(r)) / max(scale, np.finfo(float).tiny)


def _residual_array(ctx: EnergyContext, u: np.ndarray, eps: float) -> np.ndarray:
    r = ctx.ops.stiffness @ u
    mask = ctx.a > 0.0
    r[mask] -= ctx.ops.quad[mask] * ctx.a[mask] * (u[mask] + eps) ** (-ctx.gamma.gamma)
    if ctx.lam != 0.0:
        r -= ctx.lam * ctx.ops.quad * model.f_eval(ctx.f, u)
    return r


def _jacobian(ctx: EnergyContext, u: np.ndarray, eps: float) -> sp.csc_matrix:
    gamma = ctx.gamma.gamma
    sing = np.zeros_like(u)
    mask = ctx.a > 0.0
    sing[mask] = gamma * ctx.a[mask] * (u[mask] + eps) ** (-gamma - 1.0)
    # the f' term clamps u away from 0, consistent with the smoothed objective
    fp = model.f_derivative(ctx.f, np.maximum(u, eps)) if ctx.lam != 0.0 else 0.0
    diag = ctx.ops.quad * (sing - ctx.lam * fp)
    return (ctx.ops.stiffness + sp.diags(diag)).tocsc()


def _fraction_to_boundary(u: np.ndarray, p: np.ndarray, rho: float) -> float:
    neg = p < 0.0
    if not np.any(neg):
        return 1.0
    return float(min(1.0, rho * np.min(u[neg] / -p[neg])))


def _newton_stage(
    ctx: EnergyContext, u: np.ndarray, eps: float, policy: SolverPolicy
) -> _StageInfo:
    info = _StageInfo()
    h1_start = h1_norm(ctx.ops, u)
    for _ in range(policy.max_newton):
        r = _residual_array(ctx, u, eps)
        r_norm = float(np.linalg.norm(r))
        if _scaled_residual_norm(ctx, r, u) <= policy.tol_residual:
            info.converged = True
            break
        p = None
        try:
            p = spla.splu(_jacobian(ctx, u, eps)).solve(-r)
            if not np.all(np.isfinite(p)) or float(r @ p) >= 0.0:
                p = None
        except RuntimeError:
            p = None
        if p is None:
            p = -r  # gradient-descent fallback
        g_dot_p = float(r @ p)

        s = _fraction_to_boundary(u, p, policy.damping)
        e0 = regularized_energy(ctx, u, eps)
        # the slack keeps the test meaningful once decreases reach rounding level
        noise = 16.0 * np.finfo(float).eps * max(abs(e0), 1.0)
        accepted = False
        first_trial = True
        while s >= _MIN_STEP:
            trial = u + s * p
            if regularized_energy(ctx, trial, eps) <= e0 + _ARMIJO_C * s * g_dot_p + noise:
                accepted = True
                break
            if first_trial and np.all(np.isfinite(trial)):
                # energy is at rounding resolution; a plain residual decrease
                # of the undamped step is still sound progress
                r_trial = _residual_array(ctx, np.maximum(trial, 0.0), eps)
                if float(np.linalg.norm(r_trial)) <= 0.9 * r_norm and np.all(trial > 0.0):
                    accepted = True
                    break
            first_trial = False
            s *= 0.5
        if not accepted:
            break  # damping exhausted at this stage
        u = u + s * p
        info.iterations += 1
        if h1_norm(ctx.ops, u) > policy.norm_cap:
            info.blown_up = True
            break

    info.norm_grew = h1_norm(ctx.ops, u) > h1_start * _STAGE_GROWTH
    info.end = u
    return info


def _initial_iterate(ctx: EnergyContext, policy: SolverPolicy) -> np.ndarray:
    d = boundary_distance(ctx.grid).values
    eps0 = policy.eps_schedule[0]
    forcing = ctx.ops.quad * ctx.a * (d + eps0) ** (-ctx.gamma.gamma)
    try:
        u0 = ctx.ops.solve(forcing)
    except RuntimeError:
        u0 = np.full(ctx.grid.m, -1.0)
    if np.all(np.isfinite(u0)) and np.all(u0 > 0.0):
        return u0
    # degenerate forcing (e.g. the a == 0 testing hook): start on the eigenray
    return 0.5 * principal_eigenpair(ctx.ops).phi1.values


def solve_at(
    ctx: EnergyContext,
    policy: SolverPolicy | None = None,
    warm: GridFunction | None = None,
) -> SolveOutcome:
    """Minimize the energy at the context's lambda.

    Returns a converged solution with diagnostics, a no-solution
    classification when the continuation diverges (norm cap exceeded, or the
    final stages stall with growing norm), or a failure for a budget
    exhaustion without that signature. The no-solution outcome is a
    heuristic classification, not a certificate.
    """
    policy = policy or SolverPolicy()
    if warm is not None:
        u = np.asarray(warm.values, dtype=float).copy()
        if u.shape != (ctx.grid.m,) or not np.all(u > 0.0):
            raise ValueError("warm start must be strictly positive on the context grid")
    else:
        u = _initial_iterate(ctx, policy)

    stages: list[_StageInfo] = []
    total_iters = 0
    for eps in policy.eps_schedule:
        info = _newton_stage(ctx, u, eps, policy)
        total_iters += info.iterations
        u = info.end
        if info.blown_up:
            return SolveOutcome(
                "no_solution",
                reason=f"norm cap {policy.norm_cap:g} exceeded at eps={eps:g}",
            )
        stages.append(info)
        if len(stages) >= 2 and all(
            (not s.converged) and s.norm_grew for s in stages[-2:]
        ):
            return SolveOutcome(
                "no_solution",
                reason=(
                    "two consecutive smoothing stages stalled with growing norm "
                    f"(eps={eps:g})"
                ),
            )

    last = stages[-1]
    if last.converged:
        if len(stages) >= 2:
            stage_diff = float(np.max(np.abs(last.end - stages[-2].end)))
            if stage_diff >= _STAGE_DIFF_TOL:
                return SolveOutcome(
                    "failed",
                    reason=f"smoothing continuation did not settle (stage diff {stage_diff:g})",
                )
        uf = GridFunction(ctx.grid, last.end)
        d = boundary_distance(ctx.grid).values
        diag = Diagnostics(
            energy=energy_value(ctx, uf),
            h1=h1_norm(ctx.ops, uf),
            nehari=nehari_residual(ctx, uf),
            iterations=total_iters,
            min_u_over_d=float(np.min(last.end / d)),
        )
        return SolveOutcome("converged", u=uf, diagnostics=diag)
    return SolveOutcome(
        "failed",
        reason=f"newton budget exhausted at eps={policy.final_eps:g} without divergence",
    )


@dataclass(frozen=True)
class SolutionReport:
    residual_norm: float  # unsmoothed optimality residual, euclidean norm
    residual_scaled: float
    nehari: float
    energy: float
    weak_identity_rel: float  # worst relative defect over the random test functions
    weak_identity_ok: bool


def check_solution(
    ctx: EnergyContext, u: GridFunction, seed: int = 0, n_tests: int = 10
) -> SolutionReport:
    """Independent a-posteriori checks of a candidate solution.

    Tests the unsmoothed residual, the scalar stationarity defect, and the
    weak form paired against random nonnegative test functions:
    |u'A phi - integral(a u^-gamma phi) - lambda integral(f(u) phi)| relative
    to |u'A phi| must be <= 1e-7 for each phi.
    """
    v = np.asarray(u.values, dtype=float)
    if v.shape != (ctx.grid.m,) or np.any(v <= 0.0):
        raise ValueError("check_solution expects nodally positive u on the context grid")
    gamma = ctx.gamma.gamma
    r0 = ctx.ops.stiffness @ v
    r0 -= ctx.ops.quad * ctx.a * v ** (-gamma)
    if ctx.lam != 0.0:
        r0 -= ctx.lam * ctx.ops.quad * model.f_eval(ctx.f, v)

    rng = np.random.default_rng(seed)
    au = ctx.ops.stiffness @ v
    worst = 0.0
    for _ in range(n_tests):
        phi = rng.random(ctx.grid.m)
        pairing = float(v @ (ctx.ops.stiffness @ phi))
        defect = float(r0 @ phi)
        worst = max(worst, abs(defect) / max(abs(pairing), np.finfo(float).tiny))
    return SolutionReport(
        residual_norm=float(np.linalg.norm(r0)),
        residual_scaled=float(np.linalg.norm(r0)) / max(float(np.linalg.norm(au)), np.finfo(float).tiny),
        nehari=nehari_residual(ctx, u),
        energy=energy_value(ctx, u),
        weak_identity_rel=worst,
        weak_identity_ok=worst <= 1e-7,
    )
