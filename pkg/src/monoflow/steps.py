"""Single-step incremental minimizations for the time-discrete schemes.

Each time step minimizes the quadratic free energy plus a proximal term
(1/2 tau) |u - u_prev|^2 in the lumped metric, with the monotonicity
constraint handled three ways: as a hard lower bound (active set or
projected SOR), a posteriori by truncation of the unconstrained solve, or
by a quadratic penalty on negative increments solved by semismooth Newton
on the sign pattern.  The lumped prox metric makes the complementarity
u_dot = [g]_+ hold nodewise exactly at the converged step.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .fem import (DiscreteOperator, NodalField, k_matvec, load_vector,
                  lumped_norm, m_matvec, penalty_slope, require_same_grid,
                  stored_energy, unilateral_slope)

ALPHA_CAP = 1e12


@dataclass(frozen=True)
class SolverConfig:
    """Inner-solver knobs; defaults match the verification tolerances."""

    kkt_tol: float = 1e-10
    max_iter: int = 200
    method: str = "active_set"  # or "projected_sor"
    sor_omega: float = 1.5
    prox: str = "lumped"  # "consistent" for sensitivity studies only

    def __post_init__(self):
        if not self.kkt_tol > 0:
            raise ValueError("kkt_tol must be positive")
        if not 0 < self.sor_omega < 2:
            raise ValueError("sor_omega must lie in (0, 2)")
        if self.method not in ("active_set", "projected_sor"):
            raise ValueError(f"unknown solver method {self.method!r}")
        if self.prox not in ("lumped", "consistent"):
            raise ValueError(f"unknown prox metric {self.prox!r}")


@dataclass(frozen=True)
class StepSystem:
    """A_sys = K + (1/tau) M_L (SPD tridiagonal), its right-hand side, and
    the nodewise lower bound (None for unconstrained solves)."""

    a_diag: np.ndarray
    a_off: np.ndarray
    rhs: np.ndarray
    lower: Optional[np.ndarray]


@dataclass
class StepReport:
    """Per-step diagnostics recorded along a trajectory."""

    k: int = -1
    speed_norm: float = 0.0
    slope_at: float = 0.0
    energy_after: float = 0.0
    power_term: float = 0.0
    active_count: int = 0
    inner_iterations: int = 0
    kkt_residual: float = 0.0
    min_increment: float = 0.0
    utilde: Optional[np.ndarray] = None


class SolverError(RuntimeError):
    """Inner solver did not converge; carries the best iterate."""

    def __init__(self, message, best=None, residual=float("nan"),
                 iterations=0, step_index=-1):
        super().__init__(message)
        self.best = best
        self.residual = residual
        self.iterations = iterations
        self.step_index = step_index


def build_step_system(op: DiscreteOperator, u_prev: np.ndarray,
                      f_nodes: np.ndarray, tau: float,
                      lower: Optional[np.ndarray],
                      cfg: SolverConfig) -> StepSystem:
    if not tau > 0:
        raise ValueError("time step must be positive")
    load = load_vector(op, f_nodes)
    if cfg.prox == "lumped":
        a_diag = op.k_diag + op.ml / tau
        a_off = op.k_off.copy()
        rhs = load + (op.ml / tau) * u_prev
    else:
        a_diag = op.k_diag + op.m_diag / tau
        a_off = op.k_off + op.m_off / tau
        rhs = load + m_matvec(op, u_prev) / tau
    return StepSystem(a_diag, a_off, rhs, lower)


def solve_spd(a_diag: np.ndarray, a_off: np.ndarray, rhs: np.ndarray,
              kkt_tol: float = 1e-10) -> np.ndarray:
    """Direct solve of a symmetric tridiagonal SPD system."""
    x = _kernels.thomas_solve(a_off, a_diag, a_off, rhs)
    scale = 1.0 + float(np.max(np.abs(rhs))) if len(rhs) else 1.0
    resid = _tri_residual(a_diag, a_off, a_off, x, rhs)
    if resid > kkt_tol * scale:
        raise SolverError("direct solve residual above tolerance",
                          best=x, residual=resid)
    return x


def _tri_residual(diag, lower, upper, x, rhs) -> float:
    ax = diag * x
    if len(x) > 1:
        ax[:-1] += upper * x[1:]
        ax[1:] += lower * x[:-1]
    return float(np.max(np.abs(ax - rhs))) if len(x) else 0.0


def _solve_bounded(sys: StepSystem, cfg: SolverConfig):
    """Lower-bounded QP solve; returns (x, lam, sweeps, active_mask).

    Active nodes end up pinned to the bound exactly; inactive nodes satisfy
    x >= lower exactly (the active-set update uses strict comparisons, so a
    fixed point cannot violate the bound).
    """
    lb = sys.lower
    m = len(sys.rhs)
    if cfg.method == "projected_sor":
        x, sweeps, resid = _kernels.projected_sor(
            sys.a_off, sys.a_diag, sys.a_off, sys.rhs, lb, lb.copy(),
            cfg.sor_omega, cfg.kkt_tol * (1.0 + float(np.max(np.abs(sys.rhs)))),
            cfg.max_iter)
        res = _full_residual(sys, x)
        lam = np.where(x <= lb, np.maximum(res, 0.0), 0.0)
        if resid > cfg.kkt_tol * (1.0 + float(np.max(np.abs(sys.rhs)))):
            raise SolverError("projected SOR exceeded the iteration cap",
                              best=x, residual=resid, iterations=sweeps)
        return x, lam, sweeps, x <= lb

    active = np.zeros(m, dtype=bool)
    x = None
    for it in range(1, cfg.max_iter + 1):
        dl = sys.a_off.copy()
        du = sys.a_off.copy()
        dd = sys.a_diag.copy()
        rr = sys.rhs.copy()
        idx = np.flatnonzero(active)
        dd[idx] = 1.0
        rr[idx] = lb[idx]
        du[idx[idx < m - 1]] = 0.0
        dl[idx[idx > 0] - 1] = 0.0
        x = _kernels.thomas_solve(dl, dd, du, rr)
        res = _full_residual(sys, x)
        lam = np.where(active, res, 0.0)
        new_active = (lam + sys.a_diag * (lb - x)) > 0.0
        if np.array_equal(new_active, active):
            return x, lam, it, active
        active = new_active
    res = _full_residual(sys, x)
    raise SolverError("active-set iteration cap exceeded", best=x,
                      residual=float(np.max(np.abs(res))), iterations=cfg.max_iter)


def _full_residual(sys: StepSystem, x: np.ndarray) -> np.ndarray:
    ax = sys.a_diag * x
    if len(x) > 1:
        ax[:-1] += sys.a_off * x[1:]
        ax[1:] += sys.a_off * x[:-1]
    return ax - sys.rhs


def kkt_residual(op: DiscreteOperator, u_prev: NodalField, u_next: NodalField,
                 f_nodes: np.ndarray, tau: float, lower: np.ndarray,
                 cfg: SolverConfig = SolverConfig()) -> float:
    """Scalar certificate that u_next solves the step variational inequality.

    Max of scaled stationarity residual (inactive nodes), multiplier
    negativity (active nodes), feasibility violation, and complementarity
    defect.
    """
    require_same_grid(u_prev, u_next)
    sys = build_step_system(op, u_prev.values, f_nodes, tau, lower, cfg)
    res = _full_residual(sys, u_next.values)
    gap = u_next.values - lower
    active = gap <= 0.0
    scale = 1.0 + float(np.max(np.abs(sys.rhs)))
    stat = float(np.max(np.abs(res[~active]))) if np.any(~active) else 0.0
    dual = float(np.max(np.maximum(-res[active], 0.0))) if np.any(active) else 0.0
    feas = float(np.max(np.maximum(-gap, 0.0)))
    comp = float(np.max(np.abs(res * gap)))
    u_scale = 1.0 + float(np.max(np.abs(gap)))
    return max(stat / scale, dual / scale, feas / u_scale,
               comp / (scale * u_scale))


def _base_report(op: DiscreteOperator, u_prev: NodalField, u_next: NodalField,
                 f_nodes: np.ndarray, tau: float) -> StepReport:
    du = u_next.values - u_prev.values
    return StepReport(
        speed_norm=lumped_norm(du, op) / tau,
        energy_after=stored_energy(op, u_next),
        power_term=float(load_vector(op, f_nodes) @ du),
        min_increment=float(np.min(du)) if len(du) else 0.0,
    )


def step_constrained(op: DiscreteOperator, u_prev: NodalField,
                     f_nodes: np.ndarray, tau: float,
                     cfg: SolverConfig = SolverConfig()):
    """One step of the constrained scheme: prox minimization over u >= u_prev."""
    require_same_grid(u_prev, op.grid)
    sys = build_step_system(op, u_prev.values, f_nodes, tau, u_prev.values, cfg)
    x, lam, iters, active = _solve_bounded(sys, cfg)
    u_next = NodalField(op.grid, x)
    rep = _base_report(op, u_prev, u_next, f_nodes, tau)
    rep.slope_at = unilateral_slope(op, u_next, f_nodes)
    rep.active_count = int(np.count_nonzero(active))
    rep.inner_iterations = iters
    rep.kkt_residual = kkt_residual(op, u_prev, u_next, f_nodes, tau,
                                    u_prev.values, cfg)
    return u_next, rep


def step_truncation(op: DiscreteOperator, u_prev: NodalField,
                    f_nodes: np.ndarray, tau: float,
                    cfg: SolverConfig = SolverConfig()):
    """Unconstrained prox step, then nodewise truncation from below.

    The report keeps the unconstrained iterate: the per-step identity
    evaluates the slope there, where it equals |u_next - u_prev| / tau
    exactly.
    """
    require_same_grid(u_prev, op.grid)
    sys = build_step_system(op, u_prev.values, f_nodes, tau, None, cfg)
    utilde = solve_spd(sys.a_diag, sys.a_off, sys.rhs, cfg.kkt_tol)
    x = np.maximum(utilde, u_prev.values)
    u_next = NodalField(op.grid, x)
    rep = _base_report(op, u_prev, u_next, f_nodes, tau)
    rep.slope_at = unilateral_slope(op, NodalField(op.grid, utilde), f_nodes)
    rep.active_count = int(np.count_nonzero(utilde < u_prev.values))
    rep.inner_iterations = 1
    rep.kkt_residual = _tri_residual(sys.a_diag, sys.a_off, sys.a_off, utilde,
                                     sys.rhs) / (1.0 + float(np.max(np.abs(sys.rhs))))
    rep.utilde = utilde
    return u_next, rep


def step_unconstrained(op: DiscreteOperator, u_prev: NodalField,
                       f_nodes: np.ndarray, tau: float,
                       cfg: SolverConfig = SolverConfig()):
    """Plain implicit prox step with no monotonicity handling."""
    require_same_grid(u_prev, op.grid)
    sys = build_step_system(op, u_prev.values, f_nodes, tau, None, cfg)
    x = solve_spd(sys.a_diag, sys.a_off, sys.rhs, cfg.kkt_tol)
    u_next = NodalField(op.grid, x)
    rep = _base_report(op, u_prev, u_next, f_nodes, tau)
    rep.slope_at = unilateral_slope(op, u_next, f_nodes)
    rep.inner_iterations = 1
    rep.kkt_residual = _tri_residual(sys.a_diag, sys.a_off, sys.a_off, x,
                                     sys.rhs) / (1.0 + float(np.max(np.abs(sys.rhs))))
    return u_next, rep


def step_penalty(op: DiscreteOperator, u_prev: NodalField, f_nodes: np.ndarray,
                 tau: float, alpha: float,
                 cfg: SolverConfig = SolverConfig()):
    """Penalty step: negative increments weighted by alpha in the prox term.

    Piecewise-quadratic strictly convex; semismooth Newton on the sign
    pattern of (u - u_prev) terminates in finitely many pattern switches.
    """
    require_same_grid(u_prev, op.grid)
    if alpha < 1.0:
        raise ValueError("alpha must be >= 1")
    if alpha > ALPHA_CAP:
        raise ValueError(f"alpha above overflow guard {ALPHA_CAP:g}")
    if not tau > 0:
        raise ValueError("time step must be positive")
    load = load_vector(op, f_nodes)
    weights = np.ones(op.n)
    x = u_prev.values
    iters = 0
    converged = False
    for iters in range(1, cfg.max_iter + 1):
        d = op.ml * weights / tau
        x = _kernels.thomas_solve(op.k_off, op.k_diag + d, op.k_off,
                                  load + d * u_prev.values)
        new_weights = np.where(x - u_prev.values >= 0.0, 1.0, alpha)
        if np.array_equal(new_weights, weights):
            converged = True
            break
        weights = new_weights
    v = x - u_prev.values
    res = k_matvec(op, x) - load + (op.ml * weights * v) / tau
    scale = 1.0 + float(np.max(np.abs(load)))
    resid = float(np.max(np.abs(res))) / scale
    if not converged or resid > cfg.kkt_tol:
        raise SolverError("penalty sign-pattern iteration did not settle",
                          best=x, residual=resid, iterations=iters)
    u_next = NodalField(op.grid, x)
    rep = _base_report(op, u_prev, u_next, f_nodes, tau)
    rep.slope_at = penalty_slope(op, u_next, f_nodes, alpha)
    rep.active_count = int(np.count_nonzero(v < 0.0))
    rep.inner_iterations = iters
    rep.kkt_residual = resid
    return u_next, rep


def step_fixed_obstacle(op: DiscreteOperator, u_prev: NodalField,
                        f_nodes: np.ndarray, tau: float, u0_floor: NodalField,
                        cfg: SolverConfig = SolverConfig()):
    """Prox step constrained by the fixed obstacle u >= u0_floor."""
    require_same_grid(u_prev, u0_floor)
    if np.any(u_prev.values < u0_floor.values):
        raise ValueError("infeasible u_prev: below the obstacle")
    sys = build_step_system(op, u_prev.values, f_nodes, tau,
                            u0_floor.values, cfg)
    x, lam, iters, active = _solve_bounded(sys, cfg)
    u_next = NodalField(op.grid, x)
    rep = _base_report(op, u_prev, u_next, f_nodes, tau)
    rep.slope_at = unilateral_slope(op, u_next, f_nodes)
    rep.active_count = int(np.count_nonzero(active))
    rep.inner_iterations = iters
    rep.kkt_residual = kkt_residual(op, u_prev, u_next, f_nodes, tau,
                                    u0_floor.values, cfg)
    return u_next, rep
