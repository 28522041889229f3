"""Uniform Dirichlet grids on intervals/rectangles and the discrete H1_0 calculus.

The stiffness matrix is scaled by the quadrature weights so that the quadratic
form u'Au approximates the Dirichlet integral of the gradient, and the weight
vector w gives w'g ~ integral of g (trapezoid rule with zero boundary values).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla


class GridMismatchError(ValueError):
    """Raised when an operation mixes functions living on different grids."""


@dataclass(frozen=True)
class Interval:
    """1D domain (lo, hi)."""

    lo: float
    hi: float

    def __post_init__(self):
        if not self.hi > self.lo:
            raise ValueError(f"interval needs hi > lo, got ({self.lo}, {self.hi})")


@dataclass(frozen=True)
class Rectangle:
    """2D domain (0, lx) x (0, ly)."""

    lx: float
    ly: float

    def __post_init__(self):
        if not (self.lx > 0.0 and self.ly > 0.0):
            raise ValueError(f"rectangle needs positive sides, got {self.lx} x {self.ly}")


Domain = Interval | Rectangle


@dataclass(frozen=True, eq=False)
class Grid:
    """Interior nodes of a uniform grid, lexicographically ordered.

    In 2D the flat index is k = iy*n + ix (x fastest), matching the Kronecker
    structure of the assembled operators. Boundary nodes are not stored; every
    grid function is implicitly extended by zero on the boundary.
    """

    domain: Domain
    n: int  # interior nodes per axis
    h: tuple[float, ...]  # mesh spacing per axis
    points: np.ndarray  # (m, ndim) interior node coordinates

    @property
    def ndim(self) -> int:
        return self.points.shape[1]

    @property
    def m(self) -> int:
        return self.points.shape[0]

    def compatible(self, other: "Grid") -> bool:
        return self is other or (self.domain == other.domain and self.n == other.n)

    def function(self, values) -> "GridFunction":
        values = np.asarray(values, dtype=float)
        if values.shape != (self.m,):
            raise GridMismatchError(
                f"expected {self.m} nodal values, got array of shape {values.shape}"
            )
        return GridFunction(self, values)

    def constant(self, value: float) -> "GridFunction":
        return GridFunction(self, np.full(self.m, float(value)))

    def sample(self, fn) -> "GridFunction":
        """Evaluate fn at the interior nodes; fn takes one coordinate array per axis."""
        coords = [self.points[:, d] for d in range(self.ndim)]
        return self.function(np.asarray(fn(*coords), dtype=float))


@dataclass(eq=False)
class GridFunction:
    """Nodal values on the interior nodes of a grid (zero on the boundary)."""

    grid: Grid
    values: np.ndarray

    def _check(self, other: "GridFunction") -> None:
        if not self.grid.compatible(other.grid):
            raise GridMismatchError("grid functions live on different grids")

    def __add__(self, other: "GridFunction") -> "GridFunction":
        self._check(other)
        return GridFunction(self.grid, self.values + other.values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        self._check(other)
        return GridFunction(self.grid, self.values - other.values)

    def __mul__(self, scalar: float) -> "GridFunction":
        return GridFunction(self.grid, self.values * float(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> "GridFunction":
        return GridFunction(self.grid, -self.values)

    def abs(self) -> "GridFunction":
        return GridFunction(self.grid, np.abs(self.values))

    def pointwise_max(self, other: "GridFunction") -> "GridFunction":
        self._check(other)
        return GridFunction(self.grid, np.maximum(self.values, other.values))

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    def copy(self) -> "GridFunction":
        return GridFunction(self.grid, self.values.copy())


@dataclass(frozen=True, eq=False)
class DiscreteOperators:
    """Stiffness matrix and quadrature weights for one grid.

    stiffness is symmetric positive definite and already carries the
    quadrature scaling: u'Au -> ||grad u||_L2^2 as h -> 0. quad holds the
    positive trapezoid weights of the interior nodes.
    """

    grid: Grid
    stiffness: sp.csr_matrix
    quad: np.ndarray

    @cached_property
    def _factorized(self):
        return spla.splu(self.stiffness.tocsc())

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """Solve stiffness @ x = rhs via the cached sparse LU factorization."""
        return self._factorized.solve(np.asarray(rhs, dtype=float))


def build_grid(domain: Domain, n: int) -> Grid:
    """Uniform grid with n interior nodes per axis; requires n >= 3."""
    if int(n) != n or n < 3:
        raise ValueError(f"need at least 3 interior nodes per axis, got {n}")
    n = int(n)
    if isinstance(domain, Interval):
        h = (domain.hi - domain.lo) / (n + 1)
        xs = domain.lo + h * np.arange(1, n + 1)
        return Grid(domain, n, (h,), xs[:, None])
    if isinstance(domain, Rectangle):
        hx = domain.lx / (n + 1)
        hy = domain.ly / (n + 1)
        xs = hx * np.arange(1, n + 1)
        ys = hy * np.arange(1, n + 1)
        gx, gy = np.meshgrid(xs, ys)  # rows sweep y, columns sweep x
        return Grid(domain, n, (hx, hy), np.column_stack([gx.ravel(), gy.ravel()]))
    raise TypeError(f"unsupported domain type {type(domain).__name__}")


def _lap1d(n: int, h: float) -> sp.csr_matrix:
    main = np.full(n, 2.0 / h**2)
    off = np.full(n - 1, -1.0 / h**2)
    return sp.diags([off, main, off], [-1, 0, 1], format="csr")


def assemble_operators(grid: Grid) -> DiscreteOperators:
    """Dirichlet Laplacian (3-point / 5-point) with quadrature scaling, plus weights."""
    if grid.ndim == 1:
        (h,) = grid.h
        a = (h * _lap1d(grid.n, h)).tocsr()
        w = np.full(grid.m, h)
    else:
        hx, hy = grid.h
        eye = sp.identity(grid.n, format="csr")
        lap = sp.kron(eye, _lap1d(grid.n, hx)) + sp.kron(_lap1d(grid.n, hy), eye)
        a = (hx * hy * lap).tocsr()
        w = np.full(grid.m, hx * hy)
    return DiscreteOperators(grid, a, w)


def _values_on(ops: DiscreteOperators, u) -> np.ndarray:
    """Accept a GridFunction (validating its grid) or a bare nodal array."""
    if isinstance(u, GridFunction):
        if not ops.grid.compatible(u.grid):
            raise GridMismatchError("function does not live on the operators' grid")
        return u.values
    values = np.asarray(u, dtype=float)
    if values.shape != (ops.grid.m,):
        raise GridMismatchError(
            f"expected {ops.grid.m} nodal values, got shape {values.shape}"
        )
    return values


def h1_norm(ops: DiscreteOperators, u) -> float:
    """Discrete H1_0 norm sqrt(u'Au); zero iff u vanishes."""
    v = _values_on(ops, u)
    return float(np.sqrt(max(v @ (ops.stiffness @ v), 0.0)))


def integrate(ops: DiscreteOperators, g) -> float:
    """Quadrature w'g over the domain (boundary strip excluded)."""
    return float(ops.quad @ _values_on(ops, g))


def boundary_distance(grid: Grid) -> GridFunction:
    """Nodal distance to the boundary; strictly positive at interior nodes."""
    if grid.ndim == 1:
        dom = grid.domain
        x = grid.points[:, 0]
        d = np.minimum(x - dom.lo, dom.hi - x)
    else:
        dom = grid.domain
        x, y = grid.points[:, 0], grid.points[:, 1]
        d = np.minimum(np.minimum(x, dom.lx - x), np.minimum(y, dom.ly - y))
    return GridFunction(grid, d)
