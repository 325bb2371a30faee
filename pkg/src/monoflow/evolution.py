"""Time stepping: drive a scheme over a uniform time grid and record the
discrete trajectory with its per-step diagnostics.

Only uniform grids are accepted (every estimate the harness checks is stated
for uniform steps).  Trajectories store the full state at every node plus
the two interpolants used downstream: piecewise affine and backward
piecewise constant (left continuous).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from .fem import DiscreteOperator, Grid, NodalField, require_same_grid
from .forcing import Forcing, TimeGrid, backward_interpolant
from .steps import (SolverConfig, SolverError, StepReport, step_constrained,
                    step_fixed_obstacle, step_penalty, step_truncation,
                    step_unconstrained)

KINDS = ("constrained", "truncation", "penalty", "fixed_obstacle",
         "unconstrained")
MONOTONE_KINDS = ("constrained", "truncation", "fixed_obstacle")


def default_alpha_schedule(tau: float) -> float:
    """Penalty weight growing as the step shrinks."""
    return max(1.0 / tau, 1.0)


@dataclass(frozen=True)
class SchemeConfig:
    kind: str = "constrained"
    solver: SolverConfig = field(default_factory=SolverConfig)
    alpha_schedule: Callable[[float], float] = default_alpha_schedule

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown scheme kind {self.kind!r}")


@dataclass
class Trajectory:
    """Time grid, states u_0..u_n (rows), per-step reports, and metadata."""

    grid: Grid
    times: np.ndarray
    states: np.ndarray
    reports: Optional[List[StepReport]] = None
    metadata: dict = field(default_factory=dict)

    @property
    def n_steps(self) -> int:
        return len(self.times) - 1

    @property
    def tau(self) -> float:
        return float(self.times[1] - self.times[0])

    def time_grid(self) -> TimeGrid:
        return TimeGrid(float(self.times[-1]), self.n_steps)

    def state(self, k: int) -> NodalField:
        return NodalField(self.grid, self.states[k])

    def speeds(self) -> np.ndarray:
        """Difference quotients over each step, shape (n_steps, m)."""
        return np.diff(self.states, axis=0) / self.tau


def make_trajectory(grid: Grid, times, states, reports=None,
                    metadata=None) -> Trajectory:
    """Wrap externally produced states (injected or loaded trajectories)."""
    times = np.asarray(times, dtype=float)
    states = np.asarray(states, dtype=float)
    if states.shape != (len(times), grid.n_interior):
        raise ValueError("states must have one row per time node")
    taus = np.diff(times)
    if len(taus) == 0 or not np.allclose(taus, taus[0], rtol=1e-12, atol=0):
        raise ValueError("only uniform time grids are supported")
    return Trajectory(grid, times, states, reports, metadata or {})


def run(op: DiscreteOperator, forcing: Forcing, u0: NodalField, tg: TimeGrid,
        scheme: SchemeConfig = SchemeConfig()) -> Trajectory:
    """Iterate the configured step over the time grid.

    Solver failures propagate as SolverError carrying the failing step
    index.  For monotone kinds the returned states satisfy
    u_{k+1} >= u_k nodewise exactly.
    """
    require_same_grid(u0, op.grid)
    fbars = backward_interpolant(forcing, op.grid, tg)
    tau = tg.tau
    cfg = scheme.solver
    alpha = None
    if scheme.kind == "penalty":
        alpha = float(scheme.alpha_schedule(tau))
        if alpha < 1.0:
            raise ValueError("alpha schedule must return values >= 1")

    states = np.zeros((tg.n_steps + 1, op.n))
    states[0] = u0.values
    reports: List[StepReport] = []
    u = u0
    for k in range(tg.n_steps):
        f_nodes = fbars[k]
        try:
            if scheme.kind == "constrained":
                u, rep = step_constrained(op, u, f_nodes, tau, cfg)
            elif scheme.kind == "truncation":
                u, rep = step_truncation(op, u, f_nodes, tau, cfg)
            elif scheme.kind == "penalty":
                u, rep = step_penalty(op, u, f_nodes, tau, alpha, cfg)
            elif scheme.kind == "fixed_obstacle":
                u, rep = step_fixed_obstacle(op, u, f_nodes, tau, u0, cfg)
            else:
                u, rep = step_unconstrained(op, u, f_nodes, tau, cfg)
        except SolverError as err:
            err.step_index = k + 1
            raise
        rep.k = k + 1
        reports.append(rep)
        states[k + 1] = u.values

    if scheme.kind in MONOTONE_KINDS:
        floor = states[0] if scheme.kind == "fixed_obstacle" else None
        for k in range(tg.n_steps):
            lower = floor if floor is not None else states[k]
            if np.any(states[k + 1] < lower):
                raise AssertionError("monotonicity invariant violated")

    metadata = {
        "kind": scheme.kind,
        "tau": tau,
        "n_steps": tg.n_steps,
        "prox": cfg.prox,
        "method": cfg.method,
        "kkt_tol": cfg.kkt_tol,
        "mass_pairing": "consistent loads, lumped speed and slope norms",
        "slope_evaluation": ("unconstrained_iterate" if scheme.kind == "truncation"
                             else "right_endpoint"),
        "monotone": scheme.kind in MONOTONE_KINDS,
    }
    if alpha is not None:
        metadata["alpha"] = alpha
        metadata["violation_bound"] = max(
            0.0, -min(r.min_increment for r in reports))
    return Trajectory(op.grid, tg.times(), states, reports, metadata)


def eval_affine(traj: Trajectory, t: float) -> NodalField:
    """Piecewise affine interpolant; exact at the time nodes."""
    times = traj.times
    if t < times[0] or t > times[-1]:
        raise ValueError("time outside [0, T]")
    k = int(np.searchsorted(times, t, side="right")) - 1
    if k >= traj.n_steps:
        return traj.state(traj.n_steps)
    t0, t1 = times[k], times[k + 1]
    if t == t0:
        return traj.state(k)
    w = (t - t0) / (t1 - t0)
    vals = (1.0 - w) * traj.states[k] + w * traj.states[k + 1]
    return NodalField(traj.grid, vals)


def eval_backward(traj: Trajectory, t: float) -> NodalField:
    """Left-continuous piecewise constant interpolant: u_k on (t_{k-1}, t_k]."""
    times = traj.times
    if t < times[0] or t > times[-1]:
        raise ValueError("time outside [0, T]")
    if t <= times[0]:
        return traj.state(0)
    k = int(np.searchsorted(times, t, side="left"))
    return traj.state(k)
