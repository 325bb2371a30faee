"""1D P1 finite elements for constrained parabolic flows.

Uniform grids with homogeneous Dirichlet boundary, tridiagonal stiffness and
consistent mass over the interior nodes, row-sum mass lumping, discrete
energies, and the unilateral slope built from the lumped-mass residual
representative.

Conventions.  States (NodalField) hold interior nodal values only; forcing
data is sampled at every grid node (boundary included) so that load vectors
integrate f against the interior hat functions exactly for P1 data.  Loads
and power pairings use the consistent mass; norms of speeds and slopes use
the lumped mass.  All types are immutable after construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

CoefficientFn = Union[float, Callable[[np.ndarray], np.ndarray]]


@dataclass(frozen=True)
class Grid:
    """Uniform partition of (x_left, x_right) into n_cells cells.

    Boundary nodes carry no degrees of freedom; the interior node count is
    n_cells - 1.
    """

    x_left: float
    x_right: float
    n_cells: int

    def __post_init__(self):
        if not (math.isfinite(self.x_left) and math.isfinite(self.x_right)):
            raise ValueError("invalid domain: endpoints must be finite")
        if not self.x_left < self.x_right:
            raise ValueError("invalid domain: x_left must be < x_right")
        if self.n_cells < 2:
            raise ValueError("no interior degrees of freedom")

    @property
    def h(self) -> float:
        return (self.x_right - self.x_left) / self.n_cells

    @property
    def n_interior(self) -> int:
        return self.n_cells - 1

    def nodes(self) -> np.ndarray:
        """All node coordinates, boundary included."""
        return self.x_left + self.h * np.arange(self.n_cells + 1)

    def interior_nodes(self) -> np.ndarray:
        return self.nodes()[1:-1]


def build_grid(x_left: float, x_right: float, n_cells: int) -> Grid:
    return Grid(float(x_left), float(x_right), int(n_cells))


@dataclass(frozen=True)
class CoefficientSpec:
    """Diffusion B(x) > 0 and reaction b(x) >= 0 of the bilinear form."""

    diffusion: CoefficientFn = 1.0
    reaction: CoefficientFn = 0.0

    def diffusion_at(self, x: np.ndarray) -> np.ndarray:
        return _evaluate(self.diffusion, x)

    def reaction_at(self, x: np.ndarray) -> np.ndarray:
        return _evaluate(self.reaction, x)


def _evaluate(coeff: CoefficientFn, x: np.ndarray) -> np.ndarray:
    if callable(coeff):
        return np.asarray(coeff(x), dtype=float) * np.ones_like(x)
    return float(coeff) * np.ones_like(x)


def coefficient_preset(kind: str, *params: float) -> CoefficientFn:
    """Named coefficient presets: constant, affine, or a sampled table."""
    if kind == "constant":
        (value,) = params
        return float(value)
    if kind == "affine":
        c0, c1 = params
        return lambda x: c0 + c1 * x
    if kind == "table":
        xs = np.asarray(params[0], dtype=float)
        vals = np.asarray(params[1], dtype=float)
        return lambda x: np.interp(x, xs, vals)
    raise ValueError(f"unknown coefficient preset {kind!r}")


@dataclass(frozen=True)
class NodalField:
    """Interior nodal values of a P1 function in H^1_0 on a given grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.ascontiguousarray(self.values, dtype=float)
        if vals.shape != (self.grid.n_interior,):
            raise ValueError(
                f"field length {vals.shape} does not match grid with "
                f"{self.grid.n_interior} interior nodes")
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)


def field(grid: Grid, values) -> NodalField:
    return NodalField(grid, np.asarray(values, dtype=float))


def zeros_field(grid: Grid) -> NodalField:
    return NodalField(grid, np.zeros(grid.n_interior))


def interpolate(grid: Grid, fn: Callable[[np.ndarray], np.ndarray]) -> NodalField:
    """Interior nodal interpolant of a function of x."""
    return NodalField(grid, np.asarray(fn(grid.interior_nodes()), dtype=float))


def require_same_grid(a, b) -> None:
    ga = a.grid if isinstance(a, NodalField) else a
    gb = b.grid if isinstance(b, NodalField) else b
    if ga != gb:
        raise ValueError("fields from different grids are never combined")


@dataclass(frozen=True)
class DiscreteOperator:
    """Assembled interior matrices of the bilinear form and the L2 product.

    k_diag/k_off: symmetric tridiagonal stiffness + reaction (B- and
    b-weighted, midpoint rule per cell).  m_diag/m_off: consistent mass.
    ml: lumped mass diagonal (element row sums; equals h on uniform grids).
    """

    grid: Grid
    coeff: CoefficientSpec
    k_diag: np.ndarray
    k_off: np.ndarray
    m_diag: np.ndarray
    m_off: np.ndarray
    ml: np.ndarray

    def __post_init__(self):
        for name in ("k_diag", "k_off", "m_diag", "m_off", "ml"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.grid.n_interior


def assemble(grid: Grid, coeff: CoefficientSpec) -> DiscreteOperator:
    """Assemble K, M, M_L by standard P1 elements.

    Cell coefficients are evaluated at midpoints (second order, matching P1
    accuracy).  A nonpositive diffusion sample aborts the assembly.
    """
    h = grid.h
    mids = grid.x_left + h * (np.arange(grid.n_cells) + 0.5)
    bdiff = coeff.diffusion_at(mids)
    breac = coeff.reaction_at(mids)
    if np.any(bdiff <= 0.0) or not np.all(np.isfinite(bdiff)):
        raise ValueError("loss of coercivity: diffusion sample not positive")
    if np.any(breac < 0.0) or not np.all(np.isfinite(breac)):
        raise ValueError("loss of coercivity: reaction sample negative")

    m = grid.n_interior
    k_diag = np.zeros(m)
    k_off = np.zeros(max(m - 1, 0))
    # interior node i sits between cells i and i+1 (0-based cells)
    for c in range(grid.n_cells):
        ks = bdiff[c] / h
        kr = breac[c] * h / 6.0
        left = c - 1  # interior index of the cell's left node
        right = c  # interior index of the cell's right node
        if left >= 0:
            k_diag[left] += ks + 2.0 * kr
        if right < m:
            k_diag[right] += ks + 2.0 * kr
        if left >= 0 and right < m:
            k_off[left] += -ks + kr
    m_diag = np.full(m, 2.0 * h / 3.0)
    m_off = np.full(max(m - 1, 0), h / 6.0)
    ml = np.full(m, h)
    return DiscreteOperator(grid, coeff, k_diag, k_off, m_diag, m_off, ml)


def _tri_matvec(diag: np.ndarray, off: np.ndarray, v: np.ndarray) -> np.ndarray:
    out = diag * v
    if len(off):
        out[:-1] += off * v[1:]
        out[1:] += off * v[:-1]
    return out


def k_matvec(op: DiscreteOperator, v: np.ndarray) -> np.ndarray:
    return _tri_matvec(op.k_diag, op.k_off, np.asarray(v, dtype=float))


def m_matvec(op: DiscreteOperator, v: np.ndarray) -> np.ndarray:
    return _tri_matvec(op.m_diag, op.m_off, np.asarray(v, dtype=float))


def k_dense(op: DiscreteOperator) -> np.ndarray:
    """Dense copy of K, for small oracle solves in tests."""
    a = np.diag(op.k_diag)
    if op.n > 1:
        a += np.diag(op.k_off, 1) + np.diag(op.k_off, -1)
    return a


def load_vector(op: DiscreteOperator, f_nodes: np.ndarray) -> np.ndarray:
    """Interior load (M f): exact integration of the P1 interpolant of f
    against the interior hats, boundary halves folded in."""
    f = np.asarray(f_nodes, dtype=float)
    if f.shape != (op.grid.n_cells + 1,):
        raise ValueError("forcing must be sampled at every grid node")
    h = op.grid.h
    return (h / 6.0) * (f[:-2] + 4.0 * f[1:-1] + f[2:])


def stored_energy(op: DiscreteOperator, u: NodalField) -> float:
    """E(u) = 1/2 u'Ku."""
    require_same_grid(u, op.grid)
    return 0.5 * float(u.values @ k_matvec(op, u.values))


def free_energy(op: DiscreteOperator, u: NodalField, f_nodes: np.ndarray) -> float:
    """E(u) minus the consistent-mass pairing of the forcing with u."""
    require_same_grid(u, op.grid)
    return stored_energy(op, u) - float(load_vector(op, f_nodes) @ u.values)


def residual_representative(op: DiscreteOperator, u: NodalField,
                            f_nodes: np.ndarray) -> NodalField:
    """Lumped-mass nodal representative g of the residual distribution:
    g = M_L^{-1} (M f - K u)."""
    require_same_grid(u, op.grid)
    g = (load_vector(op, f_nodes) - k_matvec(op, u.values)) / op.ml
    return NodalField(op.grid, g)


def unilateral_slope(op: DiscreteOperator, u: NodalField,
                     f_nodes: np.ndarray) -> float:
    """Lumped L2 norm of the nonnegative part of the residual representative.

    Equals the norm of the minimal selection of the one-sided
    subdifferential, with opposite sign.
    """
    g = residual_representative(op, u, f_nodes).values
    gp = np.maximum(g, 0.0)
    return math.sqrt(float(op.ml @ (gp * gp)))


def penalty_slope(op: DiscreteOperator, u: NodalField, f_nodes: np.ndarray,
                  alpha: float) -> float:
    """Slope in the alpha-weighted norm: negative residual directions are
    admissible but damped by 1/alpha.  Tends to unilateral_slope as
    alpha -> infinity."""
    if alpha < 1.0:
        raise ValueError("alpha must be >= 1")
    g = residual_representative(op, u, f_nodes).values
    w = np.where(g >= 0.0, 1.0, 1.0 / alpha)
    return math.sqrt(float(op.ml @ (w * g * g)))


def lumped_norm(v, op: DiscreteOperator) -> float:
    vals = v.values if isinstance(v, NodalField) else np.asarray(v, dtype=float)
    return math.sqrt(float(op.ml @ (vals * vals)))


def mass_norm(v, op: DiscreteOperator) -> float:
    """Consistent-mass norm of an interior field: exact L2 norm of its P1
    interpolant (zero at the boundary)."""
    vals = v.values if isinstance(v, NodalField) else np.asarray(v, dtype=float)
    return math.sqrt(float(vals @ m_matvec(op, vals)))


def full_mass_norm(op: DiscreteOperator, f_nodes: np.ndarray) -> float:
    """Exact L2 norm of the P1 interpolant of boundary-inclusive samples."""
    f = np.asarray(f_nodes, dtype=float)
    if f.shape != (op.grid.n_cells + 1,):
        raise ValueError("forcing must be sampled at every grid node")
    h = op.grid.h
    # per-cell exact integral of the linear interpolant squared
    quad = (f[:-1] ** 2 + f[:-1] * f[1:] + f[1:] ** 2) * (h / 3.0)
    return math.sqrt(float(np.sum(quad)))


def plus_norm(v, op: DiscreteOperator, tol_neg: float = 0.0) -> float:
    """Lumped norm if v >= -tol_neg nodewise, +inf otherwise."""
    vals = v.values if isinstance(v, NodalField) else np.asarray(v, dtype=float)
    if np.any(vals < -tol_neg):
        return math.inf
    return lumped_norm(vals, op)


def penalty_norm(v, op: DiscreteOperator, alpha: float) -> float:
    """Lumped norm with weight alpha on negative entries; the quadratic
    relaxation of the nonnegativity constraint."""
    if alpha < 1.0:
        raise ValueError("alpha must be >= 1")
    vals = v.values if isinstance(v, NodalField) else np.asarray(v, dtype=float)
    w = np.where(vals >= 0.0, 1.0, alpha)
    return math.sqrt(float(op.ml @ (w * vals * vals)))
