"""Command-line interface: simulate / study / verify / scenarios.

Configuration comes from an INI-style key=value file (sections [run],
[solver], [output]) with command-line flags taking precedence.  Exit codes:
0 success or certified, 2 rejected by verification, 3 solver failure,
4 configuration or input-schema error.
"""

from __future__ import annotations

import argparse
import configparser
import sys
from dataclasses import dataclass, field, fields as dc_fields
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from . import __version__
from .diagnostics import energy_ledger, verify_trajectory
from .evolution import KINDS, SchemeConfig, run
from .fem import (CoefficientSpec, assemble, build_grid, coefficient_preset,
                  interpolate)
from .forcing import TimeGrid, analytic_forcing, autonomous_forcing, table_forcing
from .io import (SchemaError, read_forcing_table_csv, read_trajectory_csv,
                 write_json, write_ledger_csv, write_steps_csv,
                 write_study_csv, write_trajectory_csv)
from .scenarios import (Scenario, get_scenario, hat_profile, parabola_profile,
                        scenario_catalog)
from .steps import SolverConfig, SolverError


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    scenario: str = "hat"
    scheme: str = "constrained"
    T: Optional[float] = None
    n_steps: int = 64
    n_cells: Optional[int] = None
    alpha: Optional[float] = None
    n_steps_list: Optional[Tuple[int, ...]] = None
    kinds: Tuple[str, ...] = ("constrained", "truncation", "penalty")
    trajectory_path: Optional[str] = None
    # inline scenario pieces (used when scenario = "inline")
    x_left: float = 0.0
    x_right: float = 1.0
    u0: str = "zero"
    forcing: str = "constant:0"
    diffusion: str = "1"
    reaction: str = "0"
    # solver
    kkt_tol: float = 1e-10
    max_iter: int = 200
    method: str = "active_set"
    sor_omega: float = 1.5
    prox: str = "lumped"
    # output
    outdir: str = "."
    emit_trajectory: bool = True
    emit_steps: bool = True
    emit_ledger: bool = True
    emit_report: bool = True

    def solver(self) -> SolverConfig:
        try:
            return SolverConfig(self.kkt_tol, self.max_iter, self.method,
                                self.sor_omega, self.prox)
        except ValueError as exc:
            raise ConfigError(str(exc))

    def echo(self) -> dict:
        out = {}
        for f in dc_fields(self):
            val = getattr(self, f.name)
            if isinstance(val, tuple):
                val = list(val)
            out[f.name] = val
        return out


_SECTION_KEYS = {
    "run": {"scenario", "scheme", "T", "n_steps", "tau", "n_cells", "alpha",
            "n_steps_list", "kinds", "trajectory_path", "x_left", "x_right",
            "u0", "forcing", "diffusion", "reaction"},
    "solver": {"kkt_tol", "max_iter", "method", "sor_omega", "prox"},
    "output": {"outdir", "trajectory", "steps", "ledger", "report"},
}

_BOOL = {"true": True, "yes": True, "1": True,
         "false": False, "no": False, "0": False}


def _parse_bool(raw: str, key: str) -> bool:
    try:
        return _BOOL[raw.strip().lower()]
    except KeyError:
        raise ConfigError(f"key {key!r} expects a boolean, got {raw!r}")


def parse_config(path: Optional[str], overrides: dict) -> RunConfig:
    """Read the config file (if any), then apply flag overrides on top."""
    cfg = RunConfig()
    tau_from_file = None
    if path is not None:
        parser = configparser.ConfigParser()
        read = parser.read(path)
        if not read:
            raise ConfigError(f"config file not found: {path}")
        for section in parser.sections():
            if section not in _SECTION_KEYS:
                raise ConfigError(f"unknown config section [{section}]")
            for key, raw in parser.items(section):
                tau_from_file = _apply_key(cfg, section, key, raw,
                                           tau_from_file)
    for key, val in overrides.items():
        if val is not None:
            setattr(cfg, key, val)
    _validate(cfg, tau_from_file)
    return cfg


def _apply_key(cfg: RunConfig, section: str, key: str, raw: str,
               tau_from_file):
    known = _SECTION_KEYS[section]
    # configparser lowercases keys; T arrives as "t"
    name = "T" if (section, key) == ("run", "t") else key
    if name not in known:
        raise ConfigError(f"unknown config key {key!r} in section [{section}]")
    raw = raw.strip()
    if section == "output":
        if name == "outdir":
            cfg.outdir = raw
        else:
            setattr(cfg, f"emit_{name}", _parse_bool(raw, name))
        return tau_from_file
    try:
        if name in ("scenario", "scheme", "u0", "forcing", "diffusion",
                    "reaction", "method", "prox", "trajectory_path"):
            setattr(cfg, name, raw)
        elif name in ("T", "alpha", "kkt_tol", "sor_omega", "x_left", "x_right"):
            setattr(cfg, name, float(raw))
        elif name in ("n_steps", "n_cells", "max_iter"):
            setattr(cfg, name, int(raw))
        elif name == "tau":
            tau_from_file = float(raw)
        elif name == "n_steps_list":
            cfg.n_steps_list = tuple(int(tok) for tok in raw.split(","))
        elif name == "kinds":
            cfg.kinds = tuple(tok.strip() for tok in raw.split(","))
    except ValueError:
        raise ConfigError(f"invalid value for key {name!r}: {raw!r}")
    return tau_from_file


def _validate(cfg: RunConfig, tau_from_file) -> None:
    if cfg.scheme not in KINDS:
        raise ConfigError(f"unknown scheme {cfg.scheme!r}")
    if cfg.n_steps < 1:
        raise ConfigError("n_steps must be a positive integer")
    if cfg.T is not None and not cfg.T > 0:
        raise ConfigError("T must be positive")
    if cfg.n_cells is not None and cfg.n_cells < 2:
        raise ConfigError("n_cells must be at least 2")
    if cfg.alpha is not None and not 1.0 <= cfg.alpha <= 1e12:
        raise ConfigError("alpha must lie in [1, 1e12]")
    for kind in cfg.kinds:
        if kind not in KINDS:
            raise ConfigError(f"unknown scheme kind {kind!r} in kinds")
    if tau_from_file is not None:
        horizon = cfg.T if cfg.T is not None else \
            get_scenario(cfg.scenario).default_T if cfg.scenario != "inline" else 1.0
        steps = horizon / tau_from_file
        if abs(steps - round(steps)) > 1e-9 or steps < 1:
            raise ConfigError("tau does not divide T into whole steps")
        cfg.n_steps = int(round(steps))
    cfg.solver()  # validates solver fields


def _parse_coefficient(raw: str):
    raw = raw.strip()
    if raw.startswith("affine:"):
        c0, c1 = (float(t) for t in raw[len("affine:"):].split(","))
        return coefficient_preset("affine", c0, c1)
    return coefficient_preset("constant", float(raw))


_U0_PRESETS = {
    "zero": lambda xs: np.zeros_like(xs),
    "hat": hat_profile,
    "parabola": parabola_profile,
    "sin": lambda xs: np.sin(np.pi * xs),
}


def _inline_forcing(spec: str):
    spec = spec.strip()
    if spec.startswith("constant:"):
        value = float(spec[len("constant:"):])
        return autonomous_forcing(lambda xs: value * np.ones_like(xs))
    if spec == "profile-hat":
        return autonomous_forcing(hat_profile)
    if spec == "sin-ac":
        return analytic_forcing(
            lambda t, xs: (1.0 + t) * np.sin(np.pi * xs), "AC",
            antiderivative=lambda t, xs: (t + 0.5 * t * t) * np.sin(np.pi * xs))
    if spec.startswith("table:"):
        times, rows = read_forcing_table_csv(spec[len("table:"):])
        return table_forcing(times, rows)
    raise ConfigError(f"unknown forcing preset {spec!r}")


@dataclass
class ProblemSetup:
    name: str
    grid: object
    op: object
    u0: object
    forcing: object
    scenario: Optional[Scenario]
    default_T: float


def build_problem(cfg: RunConfig) -> ProblemSetup:
    if cfg.scenario != "inline":
        try:
            scenario = get_scenario(cfg.scenario)
        except ValueError as exc:
            raise ConfigError(str(exc))
        grid, op, u0 = scenario.build(cfg.n_cells)
        return ProblemSetup(scenario.name, grid, op, u0, scenario.forcing,
                            scenario, scenario.default_T)
    if cfg.n_cells is None:
        raise ConfigError("inline scenario requires n_cells")
    if cfg.u0 not in _U0_PRESETS:
        raise ConfigError(f"unknown u0 preset {cfg.u0!r}")
    try:
        grid = build_grid(cfg.x_left, cfg.x_right, cfg.n_cells)
        coeff = CoefficientSpec(_parse_coefficient(cfg.diffusion),
                                _parse_coefficient(cfg.reaction))
        op = assemble(grid, coeff)
    except ValueError as exc:
        raise ConfigError(str(exc))
    u0 = interpolate(grid, _U0_PRESETS[cfg.u0])
    forcing = _inline_forcing(cfg.forcing)
    return ProblemSetup("inline", grid, op, u0, forcing, None, 1.0)


def _scheme(cfg: RunConfig) -> SchemeConfig:
    solver = cfg.solver()
    if cfg.alpha is not None:
        fixed = float(cfg.alpha)
        return SchemeConfig(cfg.scheme, solver, lambda tau: fixed)
    return SchemeConfig(cfg.scheme, solver)


def _base_summary(cfg: RunConfig, setup: ProblemSetup, tg: TimeGrid) -> dict:
    return {
        "version": __version__,
        "config": cfg.echo(),
        "problem": {
            "scenario": setup.name,
            "n_cells": setup.grid.n_cells,
            "h": setup.grid.h,
            "T": tg.T,
            "n_steps": tg.n_steps,
            "tau": tg.tau,
        },
    }


def cmd_simulate(cfg: RunConfig) -> int:
    setup = build_problem(cfg)
    tg = TimeGrid(cfg.T if cfg.T is not None else setup.default_T, cfg.n_steps)
    outdir = Path(cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    summary = _base_summary(cfg, setup, tg)
    try:
        traj = run(setup.op, setup.forcing, setup.u0, tg, _scheme(cfg))
    except SolverError as err:
        summary["status"] = "solver_failure"
        summary["failing_step"] = err.step_index
        summary["solver_residual"] = err.residual
        write_json(outdir / "summary.json", summary)
        print(f"solver failure at step {err.step_index}: {err}",
              file=sys.stderr)
        return 3
    ledger = energy_ledger(setup.op, traj, setup.forcing)
    if cfg.emit_trajectory:
        write_trajectory_csv(outdir / "trajectory.csv", traj)
    if cfg.emit_steps:
        write_steps_csv(outdir / "steps.csv", traj)
    if cfg.emit_ledger:
        write_ledger_csv(outdir / "ledger.csv", ledger)
    summary["status"] = "ok"
    summary["metadata"] = traj.metadata
    summary["final"] = {
        "energy": float(ledger.energy[-1]),
        "residual": ledger.final_residual(),
        "residual_speed_form": float(ledger.residual_speed[-1]),
    }
    write_json(outdir / "summary.json", summary)
    return 0


def cmd_study(cfg: RunConfig) -> int:
    # imported here to keep the module import light for plain simulate runs
    from .diagnostics import convergence_study

    if cfg.scenario == "inline":
        raise ConfigError("studies need a named scenario")
    setup = build_problem(cfg)
    n_list = cfg.n_steps_list or (64, 128, 256, 512)
    study = convergence_study(setup.scenario, n_list, cfg.kinds,
                              T=cfg.T, n_cells=cfg.n_cells,
                              solver=cfg.solver())
    outdir = Path(cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    write_study_csv(outdir / "study.csv", study)
    single = len(n_list) < 2
    summary = {
        "version": __version__,
        "config": cfg.echo(),
        "scenario": study.scenario,
        "n_steps_list": list(study.n_steps_list),
        "cauchy": study.cauchy,
        "ratios": {k: list(v) for k, v in study.ratios.items()},
        "ratio_criterion": "not-applicable" if single or
        all(not v for v in study.ratios.values())
        else {k: bool(ok) for k, ok in study.ratios_ok().items()},
        "cross_distance_to_constrained": study.cross_distance,
    }
    write_json(outdir / "study_summary.json", summary)
    return 0


def cmd_verify(cfg: RunConfig) -> int:
    if cfg.trajectory_path is None:
        raise ConfigError("verify needs a trajectory path "
                          "(--trajectory or trajectory_path in [run])")
    setup = build_problem(cfg)
    try:
        traj = read_trajectory_csv(cfg.trajectory_path, setup.grid)
    except SchemaError as exc:
        print(str(exc), file=sys.stderr)
        return 4
    report = verify_trajectory(setup.op, traj, setup.forcing)
    outdir = Path(cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    payload = {
        "version": __version__,
        "config": cfg.echo(),
        "report": report.as_dict(),
    }
    write_json(outdir / "report.json", payload)
    print(f"verdict: {report.verdict}"
          + (f" ({', '.join(report.reasons)})" if report.reasons else ""))
    return 0 if report.certified else 2


def cmd_scenarios(_cfg: RunConfig) -> int:
    for name, scn in sorted(scenario_catalog().items()):
        print(f"{name}: domain ({scn.x_left}, {scn.x_right}), "
              f"default n_cells {scn.default_n_cells}, "
              f"default T {scn.default_T}")
        print(f"    {scn.notes}")
    return 0


def _build_argparser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="monoflow",
        description="finite-element solver and verifier for monotone "
                    "gradient flows")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_text in (
            ("simulate", "run one scheme and emit trajectory/ledger files"),
            ("study", "tau-refinement and cross-scheme agreement study"),
            ("verify", "certify or reject a trajectory CSV"),
            ("scenarios", "list built-in scenarios")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", default=None, help="INI config file")
        p.add_argument("--scenario", default=None)
        p.add_argument("--scheme", default=None, choices=list(KINDS))
        p.add_argument("--T", dest="T", type=float, default=None)
        p.add_argument("--n-steps", dest="n_steps", type=int, default=None)
        p.add_argument("--n-cells", dest="n_cells", type=int, default=None)
        p.add_argument("--alpha", type=float, default=None)
        p.add_argument("--n-steps-list", dest="n_steps_list", default=None,
                       help="comma-separated step counts for studies")
        p.add_argument("--kinds", default=None,
                       help="comma-separated scheme kinds for studies")
        p.add_argument("--trajectory", dest="trajectory_path", default=None,
                       help="trajectory CSV to verify")
        p.add_argument("--outdir", default=None)
        p.add_argument("--kkt-tol", dest="kkt_tol", type=float, default=None)
        p.add_argument("--max-iter", dest="max_iter", type=int, default=None)
        p.add_argument("--method", default=None,
                       choices=["active_set", "projected_sor"])
        p.add_argument("--sor-omega", dest="sor_omega", type=float,
                       default=None)
    return ap


_COMMANDS = {"simulate": cmd_simulate, "study": cmd_study,
             "verify": cmd_verify, "scenarios": cmd_scenarios}


def main(argv=None) -> int:
    args = _build_argparser().parse_args(argv)
    overrides = {key: getattr(args, key, None) for key in (
        "scenario", "scheme", "T", "n_steps", "n_cells", "alpha", "outdir",
        "trajectory_path", "kkt_tol", "max_iter", "method", "sor_omega")}
    if getattr(args, "n_steps_list", None):
        overrides["n_steps_list"] = tuple(
            int(t) for t in args.n_steps_list.split(","))
    if getattr(args, "kinds", None):
        overrides["kinds"] = tuple(t.strip() for t in args.kinds.split(","))
    try:
        cfg = parse_config(args.config, overrides)
        return _COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
