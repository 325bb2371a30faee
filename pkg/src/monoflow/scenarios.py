"""Built-in scenarios: reproducible problem setups with closed-form
reference quantities, including the non-uniqueness counter-example data and
the time-dependent forcing for which the fixed-obstacle characterization
fails.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional

import numpy as np

from .evolution import make_trajectory
from .fem import (CoefficientSpec, Grid, NodalField, assemble, build_grid,
                  interpolate)
from .forcing import Forcing, TimeGrid, analytic_forcing, autonomous_forcing, separable_forcing


def hat_profile(x: np.ndarray) -> np.ndarray:
    return 1.0 - np.abs(x)


def parabola_profile(x: np.ndarray) -> np.ndarray:
    return x * (x - 1.0)


def steady_half_profile(x: np.ndarray) -> np.ndarray:
    """Stationary profile of the half problem with unit value at x=0:
    the cubic with slope -2/3 at the matched endpoint."""
    return x ** 3 / 6.0 - x ** 2 / 2.0 - 2.0 * x / 3.0 + 1.0


@dataclass(frozen=True)
class Scenario:
    """Self-contained problem setup, reproducible from its name alone."""

    name: str
    x_left: float
    x_right: float
    default_n_cells: int
    default_T: float
    coeff: CoefficientSpec
    forcing: Forcing
    u0_fn: Callable[[np.ndarray], np.ndarray]
    references: Dict[str, float] = field(default_factory=dict)
    notes: str = ""
    exact_fn: Optional[Callable[[float, np.ndarray], np.ndarray]] = None

    def build(self, n_cells: Optional[int] = None):
        """Assemble the scenario: returns (grid, operator, u0)."""
        grid = build_grid(self.x_left, self.x_right,
                          n_cells or self.default_n_cells)
        op = assemble(grid, self.coeff)
        u0 = interpolate(grid, self.u0_fn)
        return grid, op, u0

    def exact_trajectory(self, grid: Grid, tg: TimeGrid):
        """Sample the attached closed-form trajectory on the grids."""
        if self.exact_fn is None:
            raise ValueError(f"scenario {self.name!r} has no exact trajectory")
        xs = grid.interior_nodes()
        states = np.array([self.exact_fn(float(t), xs) for t in tg.times()])
        return make_trajectory(grid, tg.times(), states,
                               metadata={"kind": "injected", "tau": tg.tau,
                                         "scenario": self.name})


def _remark_auto_forcing() -> Forcing:
    """Closed-form piecewise forcing that drives u = (1-t)_+ * x(x-1):
    f = du/dt - u'' while the state moves, then freezes at the parabola."""

    def fn(t, xs):
        u0 = parabola_profile(xs)
        if t <= 1.0:
            return -u0 - 2.0 * (1.0 - t)
        return u0

    def antiderivative(t, xs):
        u0 = parabola_profile(xs)
        if t <= 1.0:
            return (-u0 - 2.0) * t + t * t
        return (-u0 - 2.0) + 1.0 + u0 * (t - 1.0)

    return analytic_forcing(fn, smoothness="L2", antiderivative=antiderivative)


def _remark_auto_exact(t: float, xs: np.ndarray) -> np.ndarray:
    return max(1.0 - t, 0.0) * parabola_profile(xs)


def _hat_spurious(t: float, xs: np.ndarray) -> np.ndarray:
    return (1.0 + t) * hat_profile(xs)


def scenario_catalog() -> Dict[str, Scenario]:
    """All named scenarios, keyed by name."""
    unit = CoefficientSpec(1.0, 0.0)
    cat = {}
    cat["hat"] = Scenario(
        name="hat",
        x_left=-1.0, x_right=1.0, default_n_cells=128, default_T=1.0,
        coeff=unit,
        forcing=autonomous_forcing(hat_profile),
        u0_fn=hat_profile,
        references={
            "stored_energy_u0": 1.0,
            "u0_l2_norm_sq": 2.0 / 3.0,
            "steady_right_derivative_at_center": -2.0 / 3.0,
        },
        notes=("Autonomous tent datum with matching load; use an even cell "
               "count so the kink sits on a node and the datum is exactly "
               "representable.  The long-time state matches the cubic "
               "steady profile on each half interval."))
    cat["hat-spurious"] = Scenario(
        name="hat-spurious",
        x_left=-1.0, x_right=1.0, default_n_cells=128, default_T=1.0,
        coeff=unit,
        forcing=autonomous_forcing(hat_profile),
        u0_fn=hat_profile,
        references={"stored_energy_u0": 1.0, "u0_l2_norm_sq": 2.0 / 3.0},
        notes=("Same data as 'hat' with the dilating trajectory (1+t)*u0 "
               "attached: it satisfies the pointwise evolution equation but "
               "breaks the energy balance, so the verifier must reject it."),
        exact_fn=_hat_spurious)
    cat["remark-auto"] = Scenario(
        name="remark-auto",
        x_left=0.0, x_right=1.0, default_n_cells=256, default_T=2.0,
        coeff=unit,
        forcing=_remark_auto_forcing(),
        u0_fn=parabola_profile,
        references={"complementarity_after_stop": 1.0 / 30.0},
        notes=("Time-dependent forcing built so the exact flow rises from "
               "the downward parabola to zero at t=1 and then rests; past "
               "t=1 the obstacle-complementarity pairing stays at the "
               "squared L2 norm of the datum, 1/30."),
        exact_fn=_remark_auto_exact)
    cat["stationary"] = Scenario(
        name="stationary",
        x_left=0.0, x_right=1.0, default_n_cells=64, default_T=1.0,
        coeff=unit,
        forcing=autonomous_forcing(lambda xs: -np.ones_like(xs)),
        u0_fn=lambda xs: np.zeros_like(xs),
        notes="Nonpositive residual everywhere: the flow never moves.")
    cat["ac-smooth"] = Scenario(
        name="ac-smooth",
        x_left=0.0, x_right=1.0, default_n_cells=128, default_T=1.0,
        coeff=CoefficientSpec(1.0, 0.5),
        forcing=separable_forcing(
            lambda t: 1.0 + t,
            lambda t: t + 0.5 * t * t,
            lambda xs: np.sin(math.pi * xs),
            smoothness="AC"),
        u0_fn=lambda xs: np.zeros_like(xs),
        notes=("Smoothly growing sine load with a reaction term; time-"
               "regular data for the power-balance ledger."))
    return cat


def get_scenario(name: str) -> Scenario:
    cat = scenario_catalog()
    if name not in cat:
        raise ValueError(f"unknown scenario {name!r}; "
                         f"known: {', '.join(sorted(cat))}")
    return cat[name]


def rescaled_trajectory(traj, lam: int):
    """Time rescaling u_lam(t) = u(lam * t) of a discrete trajectory,
    sampled on the same step size (keeps every lam-th state)."""
    if int(lam) != lam or lam < 1:
        raise ValueError("lambda must be a positive integer")
    lam = int(lam)
    n_new = traj.n_steps // lam
    if n_new < 1:
        raise ValueError("trajectory too short to rescale")
    idx = lam * np.arange(n_new + 1)
    times = traj.tau * np.arange(n_new + 1)
    meta = dict(traj.metadata)
    meta.update({"kind": "rescaled", "lambda": lam})
    return make_trajectory(traj.grid, times, traj.states[idx], metadata=meta)
