"""Continuation over a lambda grid: branch tracing, derivative check, CSV output."""

from __future__ import annotations

import concurrent.futures
from dataclasses import dataclass, field

import numpy as np

from . import model
from .energy import EnergyContext, energy_value
from .solver import SolveOutcome, SolverPolicy, solve_at

CSV_HEADER = "lambda,h1_norm,energy,intF,nehari_residual,iterations,status"


@dataclass(frozen=True)
class SweepPlan:
    lambda_grid: tuple[float, ...]
    policy: SolverPolicy = field(default_factory=SolverPolicy)
    dlambda_fd: float = 0.0  # finite-difference half-width for didlambda_check

    def __post_init__(self):
        grid = np.asarray(self.lambda_grid, dtype=float)
        if grid.size and (np.any(grid < 0.0) or np.any(np.diff(grid) <= 0.0)):
            raise ValueError("lambda grid must be nonnegative and strictly increasing")


def default_plan(
    lam_star: float,
    points: int = 40,
    top_fraction: float = 0.999,
    policy: SolverPolicy | None = None,
) -> SweepPlan:
    """Uniform grid on [0, top_fraction * lam_star]; must stay below lam_star."""
    if not 0.0 < top_fraction < 1.0:
        raise ValueError(f"top_fraction must lie in (0, 1), got {top_fraction}")
    if points < 1:
        raise ValueError(f"need at least one sweep point, got {points}")
    grid = tuple(np.linspace(0.0, top_fraction * lam_star, points))
    return SweepPlan(grid, policy or SolverPolicy(), dlambda_fd=1e-3 * lam_star)


@dataclass(frozen=True)
class SweepRecord:
    lam: float
    h1: float
    energy: float
    intF: float
    nehari: float
    iterations: int
    status: str


def _record(ctx: EnergyContext, lam: float, outcome: SolveOutcome) -> SweepRecord:
    if outcome.converged:
        d = outcome.diagnostics
        int_f = float(ctx.ops.quad @ model.big_f_eval(ctx.f, outcome.u.values))
        return SweepRecord(lam, d.h1, d.energy, int_f, d.nehari, d.iterations, "converged")
    return SweepRecord(lam, np.nan, np.nan, np.nan, np.nan, 0, outcome.status)


def run_sweep(
    base: EnergyContext,
    plan: SweepPlan,
    on_solution=None,
    parallel: bool = False,
) -> list[SweepRecord]:
    """Solve at every lambda of the plan grid, ascending.

    Sequential mode warm-starts each solve from the previous converged
    solution and retries a failure once from a cold start; a failed point does
    not abort the remaining grid. Parallel mode solves every point cold and
    merges the records in grid order. `on_solution(lam, outcome)` is invoked
    for every finished point (in grid order in both modes).
    """
    lams = list(plan.lambda_grid)
    if not lams:
        return []

    if parallel:
        with concurrent.futures.ThreadPoolExecutor() as pool:
            outcomes = list(
                pool.map(lambda lam: solve_at(base.with_lambda(lam), plan.policy), lams)
            )
    else:
        outcomes = []
        warm = None
        for lam in lams:
            ctx = base.with_lambda(lam)
            out = solve_at(ctx, plan.policy, warm)
            if out.status == "failed":
                out = solve_at(ctx, plan.policy, None)  # cold retry
            if out.converged:
                warm = out.u
            outcomes.append(out)

    records = []
    for lam, out in zip(lams, outcomes):
        if on_solution is not None:
            on_solution(lam, out)
        records.append(_record(base.with_lambda(lam), lam, out))
    return records


@dataclass(frozen=True)
class DerivativeCheck:
    lhs: float  # central difference of lambda -> E(u_lambda)
    rhs: float  # -integral(F(u_lambda))
    rel_err: float


def didlambda_check(
    base: EnergyContext,
    lam: float,
    dlam: float,
    policy: SolverPolicy | None = None,
    warm=None,
) -> DerivativeCheck:
    """Compare the central difference of the branch energy with -integral(F).

    Both neighbor solves are warm-started from the center solution; any
    non-converged solve raises.
    """
    if dlam <= 0.0 or lam - dlam <= 0.0:
        raise ValueError("need 0 < dlam < lam")
    center = solve_at(base.with_lambda(lam), policy, warm)
    if not center.converged:
        raise RuntimeError(f"center solve at lambda={lam} did not converge: {center.reason}")
    values = {}
    for side in (lam - dlam, lam + dlam):
        out = solve_at(base.with_lambda(side), policy, center.u)
        if not out.converged:
            raise RuntimeError(f"neighbor solve at lambda={side} did not converge: {out.reason}")
        values[side] = energy_value(base.with_lambda(side), out.u)
    lhs = (values[lam + dlam] - values[lam - dlam]) / (2.0 * dlam)
    rhs = -float(base.ops.quad @ model.big_f_eval(base.f, center.u.values))
    return DerivativeCheck(lhs, rhs, abs(lhs - rhs) / abs(rhs))


def emit_csv(records: list[SweepRecord], path: str) -> None:
    """Write the sweep records with deterministic 17-significant-digit formatting."""
    with open(path, "w", newline="") as fh:
        fh.write(CSV_HEADER + "\n")
        for r in records:
            fh.write(
                f"{r.lam:.17g},{r.h1:.17g},{r.energy:.17g},{r.intF:.17g},"
                f"{r.nehari:.17g},{r.iterations},{r.status}\n"
            )


def read_csv(path: str) -> list[SweepRecord]:
    """Parse a file written by emit_csv back into records."""
    with open(path, "r", newline="") as fh:
        lines = [line.rstrip("\n") for line in fh]
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError(f"unexpected CSV header in {path}")
    records = []
    for line in lines[1:]:
        if not line:
            continue
        lam, h1, energy, int_f, nehari, iters, status = line.split(",")
        records.append(
            SweepRecord(
                float(lam), float(h1), float(energy), float(int_f),
                float(nehari), int(iters), status,
            )
        )
    return records
