"""Principal Dirichlet eigenpair and the critical parameter of the branch."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import DiscreteOperators, GridFunction


class EigenConvergenceError(RuntimeError):
    """Inverse power iteration did not converge within the iteration cap."""


@dataclass(frozen=True, eq=False)
class Eigenpair:
    """Smallest generalized eigenvalue of (stiffness, diag(quad)) and its eigenvector.

    The eigenvector is strictly positive and sup-normalized (max nodal value 1).
    `delta1` is also written lambda_1 in the classical eigenvalue notation.
    """

    delta1: float
    phi1: GridFunction


def principal_eigenpair(
    ops: DiscreteOperators, tol: float = 1e-12, max_iters: int = 10_000
) -> Eigenpair:
    """Inverse power iteration on A v = delta M v with M = diag(quad).

    A single sparse factorization of A is reused across iterations; the
    eigenvalue estimate is the Rayleigh quotient of the current iterate, and
    iteration stops once it changes by less than tol (relative).
    """
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    a = ops.stiffness
    w = ops.quad
    m = ops.grid.m

    v = np.ones(m)
    v /= np.sqrt(w @ v**2)
    delta = float(v @ (a @ v))
    for _ in range(max_iters):
        y = ops.solve(w * v)
        y /= np.sqrt(w @ y**2)
        new = float(y @ (a @ y))
        done = abs(new - delta) < tol * max(1.0, abs(new))
        v, delta = y, new
        if done:
            break
    else:
        raise EigenConvergenceError(
            f"no eigenvalue convergence after {max_iters} iterations (last delta={delta})"
        )

    if v.sum() < 0.0:
        v = -v
    if not np.all(v > 0.0):
        raise EigenConvergenceError("principal eigenvector is not strictly positive")
    phi = v / v.max()
    delta = float(phi @ (a @ phi)) / float(w @ phi**2)
    return Eigenpair(delta, GridFunction(ops.grid, phi))


def lambda_star(delta1: float, theta: float) -> float:
    """Critical parameter delta1 / theta; theta is the asymptotic slope of f."""
    if delta1 <= 0.0:
        raise ValueError(f"delta1 must be positive, got {delta1}")
    if theta <= 0.0:
        raise ValueError(f"theta must be positive, got {theta}")
    return delta1 / theta
