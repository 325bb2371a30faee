"""Global verification: energy and power ledgers, evolution-equation and
variational-inequality residuals, comparison and fixed-obstacle checks,
perturbation and time-refinement studies.

The energy ledger carries two residual columns.  R balances the stored
energy against the half-sum of the speed and slope dissipation integrals
(lumped norms) and the consistent-mass power; it vanishes at first order in
tau on scheme output and is the certification quantity.  R_speed replaces
the half-sum by the consistent-mass speed integral alone; it is the form in
which injected analytic trajectories expose an energy-balance violation
exactly, with no spatial-discretization residue.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .evolution import SchemeConfig, Trajectory, run
from .fem import (DiscreteOperator, NodalField, assemble, interpolate,
                  k_matvec, load_vector, lumped_norm, mass_norm,
                  residual_representative, stored_energy, unilateral_slope)
from .forcing import Forcing, TimeGrid, backward_interpolant
from .scenarios import Scenario
from .steps import SolverConfig


@dataclass(frozen=True)
class Thresholds:
    """Certification thresholds, scaled by 1 + |E(u_0)| at verification."""

    pde_rel: float = 1e-6
    pvi_rel: float = 1e-8
    energy_abs_floor: float = 1e-8
    energy_tau_factor: float = 5.0

    def resolve(self, scale: float, tau: float) -> Dict[str, float]:
        return {
            "pde": self.pde_rel * scale,
            "pvi": self.pvi_rel * scale,
            "energy": max(self.energy_abs_floor,
                          self.energy_tau_factor * tau) * scale,
        }


@dataclass
class EnergyLedger:
    """Cumulative balance terms at every time node.

    E: stored energy; D: integral of the squared lumped speed norm;
    S: integral of the squared slope (scheme-appropriate evaluation point
    when step reports are attached, right endpoint otherwise);
    P: cumulative consistent-mass power; R = E - E_0 + (D + S)/2 - P;
    R_speed = E - E_0 + D_mass - P with the consistent-mass speed integral.
    """

    times: np.ndarray
    energy: np.ndarray
    dissipation: np.ndarray
    slope_integral: np.ndarray
    power: np.ndarray
    residual: np.ndarray
    residual_speed: np.ndarray

    def final_residual(self) -> float:
        return float(self.residual[-1])


def energy_ledger(op: DiscreteOperator, traj: Trajectory,
                  forcing: Forcing) -> EnergyLedger:
    tg = traj.time_grid()
    tau = tg.tau
    fbars = backward_interpolant(forcing, op.grid, tg)
    n = tg.n_steps
    energy = np.array([stored_energy(op, traj.state(k)) for k in range(n + 1)])
    d_steps = np.zeros(n)
    dm_steps = np.zeros(n)
    s_steps = np.zeros(n)
    p_steps = np.zeros(n)
    speeds = traj.speeds()
    for j in range(n):
        v = speeds[j]
        d_steps[j] = tau * lumped_norm(v, op) ** 2
        dm_steps[j] = tau * mass_norm(v, op) ** 2
        if traj.reports is not None:
            s = traj.reports[j].slope_at
        else:
            s = unilateral_slope(op, traj.state(j + 1), fbars[j])
        s_steps[j] = tau * s * s
        p_steps[j] = float(load_vector(op, fbars[j]) @ (traj.states[j + 1]
                                                        - traj.states[j]))
    zero = np.zeros(1)
    d_cum = np.concatenate([zero, np.cumsum(d_steps)])
    dm_cum = np.concatenate([zero, np.cumsum(dm_steps)])
    s_cum = np.concatenate([zero, np.cumsum(s_steps)])
    p_cum = np.concatenate([zero, np.cumsum(p_steps)])
    residual = energy - energy[0] + 0.5 * (d_cum + s_cum) - p_cum
    residual_speed = energy - energy[0] + dm_cum - p_cum
    return EnergyLedger(traj.times.copy(), energy, d_cum, s_cum, p_cum,
                        residual, residual_speed)


def power_balance_residual(op: DiscreteOperator, traj: Trajectory,
                           forcing: Forcing) -> np.ndarray:
    """Residual of the free-energy power balance for time-regular data.

    Uses the telescoped forcing increments as the surrogate for the
    time-derivative pairing; algebraically identical to the energy-ledger
    residual column.
    """
    if forcing.smoothness not in ("AC", "autonomous"):
        raise ValueError("power balance needs AC-tagged (or autonomous) forcing")
    tg = traj.time_grid()
    fbars = backward_interpolant(forcing, op.grid, tg)
    loads = np.array([load_vector(op, fb) for fb in fbars])
    ledger = energy_ledger(op, traj, forcing)
    n = tg.n_steps
    free = np.zeros(n + 1)
    free[0] = ledger.energy[0] - float(loads[0] @ traj.states[0])
    for k in range(1, n + 1):
        free[k] = ledger.energy[k] - float(loads[k - 1] @ traj.states[k])
    surrogate = np.zeros(n + 1)
    for k in range(1, n + 1):
        acc = 0.0
        for j in range(1, k):
            acc += float((loads[j] - loads[j - 1]) @ traj.states[j])
        surrogate[k] = acc
    return (free - free[0]
            + 0.5 * (ledger.dissipation + ledger.slope_integral) + surrogate)


@dataclass
class VerificationReport:
    """Residual certificate for one trajectory against one forcing."""

    pde_residual_sup: float
    pvi_violation: float
    energy_residual_final: float
    energy_residual_speed_form: float
    thresholds: Dict[str, float]
    verdict: str
    reasons: Tuple[str, ...]

    @property
    def certified(self) -> bool:
        return self.verdict == "certified"

    def as_dict(self) -> dict:
        return {
            "pde_residual_sup": self.pde_residual_sup,
            "pvi_violation": self.pvi_violation,
            "energy_residual_final": self.energy_residual_final,
            "energy_residual_speed_form": self.energy_residual_speed_form,
            "thresholds": dict(self.thresholds),
            "verdict": self.verdict,
            "reasons": list(self.reasons),
        }


def pde_residual_sup(op: DiscreteOperator, traj: Trajectory,
                     forcing: Forcing) -> float:
    """Sup over steps of the lumped norm of u_dot - [g]_+ at the right
    endpoint: the discrete evolution-equation defect."""
    tg = traj.time_grid()
    fbars = backward_interpolant(forcing, op.grid, tg)
    speeds = traj.speeds()
    worst = 0.0
    for j in range(tg.n_steps):
        g = residual_representative(op, traj.state(j + 1), fbars[j]).values
        defect = speeds[j] - np.maximum(g, 0.0)
        worst = max(worst, lumped_norm(defect, op))
    return worst


def pvi_violation(op: DiscreteOperator, traj: Trajectory,
                  forcing: Forcing) -> float:
    """Worst defect of the step variational inequality over nonnegative
    probes: every interior hat and the speed itself."""
    tg = traj.time_grid()
    fbars = backward_interpolant(forcing, op.grid, tg)
    speeds = traj.speeds()
    worst = 0.0
    sqrt_ml = np.sqrt(op.ml)
    for j in range(tg.n_steps):
        v = speeds[j]
        r = load_vector(op, fbars[j]) - k_matvec(op, traj.states[j + 1])
        hat_defects = np.maximum(r - op.ml * v, 0.0) / sqrt_ml
        worst = max(worst, float(np.max(hat_defects)) if len(hat_defects) else 0.0)
        vnorm = lumped_norm(v, op)
        if vnorm > 0.0:
            num = float(r @ v) - float(v @ (op.ml * v))
            worst = max(worst, max(num, 0.0) / vnorm)
    return worst


def verify_trajectory(op: DiscreteOperator, traj: Trajectory, forcing: Forcing,
                      thresholds: Thresholds = Thresholds()) -> VerificationReport:
    """Certify or reject a trajectory by its evolution-equation residual,
    variational-inequality defect, and final energy-balance residual."""
    ledger = energy_ledger(op, traj, forcing)
    scale = 1.0 + abs(float(ledger.energy[0]))
    resolved = thresholds.resolve(scale, traj.tau)
    pde = pde_residual_sup(op, traj, forcing)
    pvi = pvi_violation(op, traj, forcing)
    energy_final = ledger.final_residual()
    reasons = []
    if pde > resolved["pde"]:
        reasons.append("pde")
    if pvi > resolved["pvi"]:
        reasons.append("pvi")
    if abs(energy_final) > resolved["energy"]:
        reasons.append("energy")
    verdict = "certified" if not reasons else "rejected"
    return VerificationReport(pde, pvi, energy_final,
                              float(ledger.residual_speed[-1]),
                              resolved, verdict, tuple(reasons))


def check_comparison(traj_u: Trajectory, traj_v: Trajectory) -> float:
    """Max nodewise positive part of u - v over all time nodes; zero when
    the comparison principle holds for ordered initial data."""
    if traj_u.grid != traj_v.grid or traj_u.states.shape != traj_v.states.shape \
            or not np.array_equal(traj_u.times, traj_v.times):
        raise ValueError("mismatched discretizations")
    diff = traj_u.states - traj_v.states
    return float(np.max(np.maximum(diff, 0.0)))


def obstacle_complementarity(op: DiscreteOperator, traj: Trajectory,
                             u0: NodalField, forcing: Forcing) -> np.ndarray:
    """Per-step pairing (u_{k+1} - u_0, M_L u_dot + K u_{k+1} - M f): the
    quantity that vanishes exactly when the fixed-obstacle problem
    characterizes the flow."""
    tg = traj.time_grid()
    fbars = backward_interpolant(forcing, op.grid, tg)
    speeds = traj.speeds()
    vals = np.zeros(tg.n_steps)
    for j in range(tg.n_steps):
        w = traj.states[j + 1]
        resid = op.ml * speeds[j] + k_matvec(op, w) - load_vector(op, fbars[j])
        vals[j] = float((w - u0.values) @ resid)
    return vals


@dataclass
class FixedObstacleReport:
    sup_distance: float
    max_complementarity: float
    complementarity: np.ndarray


def check_fixed_obstacle_equivalence(scenario: Scenario, tg: TimeGrid,
                                     n_cells: Optional[int] = None,
                                     solver: SolverConfig = SolverConfig()
                                     ) -> FixedObstacleReport:
    """Run the monotone scheme and the fixed-obstacle scheme on identical
    autonomous data and report their sup distance plus the per-step
    obstacle complementarity of the monotone run."""
    if scenario.forcing.smoothness != "autonomous":
        raise ValueError("fixed-obstacle equivalence needs autonomous forcing")
    grid, op, u0 = scenario.build(n_cells)
    traj_c = run(op, scenario.forcing, u0, tg,
                 SchemeConfig("constrained", solver))
    traj_o = run(op, scenario.forcing, u0, tg,
                 SchemeConfig("fixed_obstacle", solver))
    dist = max(lumped_norm(traj_c.states[k] - traj_o.states[k], op)
               for k in range(tg.n_steps + 1))
    comp = obstacle_complementarity(op, traj_c, u0, scenario.forcing)
    return FixedObstacleReport(dist, float(np.max(np.abs(comp))), comp)


def _perturbed_forcing(base: Forcing, eps: float, bump) -> Forcing:
    if eps == 0.0:
        return base
    fn = lambda t, xs: base.sample(t, xs) + eps * bump(xs)
    anti = None
    if base.antiderivative is not None or base.smoothness == "autonomous":
        def anti(t, xs):
            if base.smoothness == "autonomous" and base.antiderivative is None:
                base_a = t * base.sample(0.0, xs)
            else:
                base_a = np.asarray(base.antiderivative(t, xs), dtype=float)
            return base_a + eps * t * bump(xs)
    smooth = base.smoothness if base.smoothness != "autonomous" else "AC"
    return Forcing(fn, smooth, anti, kind="perturbed")


def continuous_dependence_study(scenario: Scenario, tg: TimeGrid,
                                eps_list: Sequence[float] = (0.1, 0.05, 0.025),
                                n_cells: Optional[int] = None,
                                solver: SolverConfig = SolverConfig()
                                ) -> List[dict]:
    """Perturb the initial datum (energy-norm size eps) and the forcing
    (L2 size eps) together; report sup distances and final energy gaps.

    The continuous-dependence property is qualitative, so only monotone
    vanishing is asserted downstream, not a rate.
    """
    grid, op, u0 = scenario.build(n_cells)
    xs = grid.interior_nodes()
    span = grid.x_right - grid.x_left
    bump = lambda x: np.sin(np.pi * (x - grid.x_left) / span)
    p = interpolate(grid, bump)
    p_scale = math.sqrt(2.0 * stored_energy(op, p))
    base = run(op, scenario.forcing, u0, tg, SchemeConfig("constrained", solver))
    base_energy = stored_energy(op, base.state(tg.n_steps))
    rows = []
    for eps in eps_list:
        u0_eps = NodalField(grid, u0.values + (eps / p_scale) * p.values)
        f_eps = _perturbed_forcing(scenario.forcing, eps, bump)
        traj = run(op, f_eps, u0_eps, tg, SchemeConfig("constrained", solver))
        dist = max(lumped_norm(traj.states[k] - base.states[k], op)
                   for k in range(tg.n_steps + 1))
        gap = abs(stored_energy(op, traj.state(tg.n_steps)) - base_energy)
        rows.append({"eps": float(eps), "sup_distance": dist,
                     "final_energy_gap": gap})
    return rows


@dataclass
class StudyResult:
    """Tau-refinement study: per-run ledgers, Cauchy distances between
    consecutive refinements, their ratios, and cross-scheme distances at
    the finest step."""

    scenario: str
    n_cells: int
    T: float
    kinds: Tuple[str, ...]
    n_steps_list: Tuple[int, ...]
    rows: List[dict]
    cauchy: Dict[str, List[dict]]
    ratios: Dict[str, List[float]]
    cross_distance: Dict[str, float]

    def ratios_ok(self, bound: float = 0.7) -> Dict[str, bool]:
        return {kind: all(r <= bound for r in rs) if rs else True
                for kind, rs in self.ratios.items()}


def convergence_study(scenario: Scenario, n_steps_list: Sequence[int],
                      kinds: Sequence[str] = ("constrained", "truncation",
                                              "penalty"),
                      T: Optional[float] = None,
                      n_cells: Optional[int] = None,
                      solver: SolverConfig = SolverConfig()) -> StudyResult:
    """Run every scheme kind at every time refinement and tabulate energy
    residuals and Cauchy distances at shared time nodes."""
    steps = [int(n) for n in n_steps_list]
    if len(steps) != len(set(steps)) or steps != sorted(steps):
        raise ValueError("n_steps list must be strictly increasing")
    for a, b in zip(steps[:-1], steps[1:]):
        if b % a != 0:
            raise ValueError("each refinement must divide the next "
                             "(shared time nodes are required)")
    grid, op, u0 = scenario.build(n_cells)
    horizon = T if T is not None else scenario.default_T
    runs: Dict[Tuple[str, int], Trajectory] = {}
    rows: List[dict] = []
    for kind in kinds:
        for n in steps:
            tg = TimeGrid(horizon, n)
            traj = run(op, scenario.forcing, u0, tg, SchemeConfig(kind, solver))
            runs[(kind, n)] = traj
            led = energy_ledger(op, traj, scenario.forcing)
            rows.append({
                "kind": kind, "n_steps": n, "tau": tg.tau,
                "energy_final": float(led.energy[-1]),
                "dissipation_total": float(led.dissipation[-1]),
                "slope_integral_total": float(led.slope_integral[-1]),
                "power_total": float(led.power[-1]),
                "residual_final": led.final_residual(),
            })
    cauchy: Dict[str, List[dict]] = {k: [] for k in kinds}
    ratios: Dict[str, List[float]] = {k: [] for k in kinds}
    for kind in kinds:
        dists = []
        for a, b in zip(steps[:-1], steps[1:]):
            stride = b // a
            coarse, fine = runs[(kind, a)], runs[(kind, b)]
            d = max(lumped_norm(coarse.states[k] - fine.states[stride * k], op)
                    for k in range(a + 1))
            dists.append(d)
            cauchy[kind].append({"n_coarse": a, "n_fine": b, "distance": d})
        ratios[kind] = [dists[i + 1] / dists[i] if dists[i] > 0 else 0.0
                        for i in range(len(dists) - 1)]
    finest = steps[-1]
    cross = {}
    for kind in kinds:
        if kind == "constrained" or ("constrained", finest) not in runs:
            continue
        a, b = runs[("constrained", finest)], runs[(kind, finest)]
        cross[kind] = max(lumped_norm(a.states[k] - b.states[k], op)
                          for k in range(finest + 1))
    return StudyResult(scenario.name, grid.n_cells, horizon, tuple(kinds),
                       tuple(steps), rows, cauchy, ratios, cross)
