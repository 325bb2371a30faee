"""File emission and ingestion: deterministic CSV/JSON writers and the
trajectory/table readers.

Numbers are serialized as the shortest round-trip decimal so reruns with an
identical configuration produce byte-identical files.  Every CSV starts
with a header row; trajectory.csv is "k,t,x_1,...,x_m", ledger.csv is
"k,t,E,D,S,P,R".
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import List, Tuple

import numpy as np

from .diagnostics import EnergyLedger, StudyResult
from .evolution import Trajectory, make_trajectory
from .fem import Grid


class SchemaError(ValueError):
    """Malformed input file; message carries the offending line number."""


def fmt(x) -> str:
    """Shortest round-trip decimal representation."""
    return repr(float(x))


def write_text(path, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8")


def write_json(path, payload: dict) -> None:
    write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def trajectory_csv_text(traj: Trajectory) -> str:
    m = traj.grid.n_interior
    lines = ["k,t," + ",".join(f"x_{i}" for i in range(1, m + 1))]
    for k in range(traj.n_steps + 1):
        row = [str(k), fmt(traj.times[k])]
        row.extend(fmt(v) for v in traj.states[k])
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def write_trajectory_csv(path, traj: Trajectory) -> None:
    write_text(path, trajectory_csv_text(traj))


STEP_COLUMNS = ("k", "speed_norm", "slope_at", "energy_after", "power_term",
                "active_count", "inner_iterations", "kkt_residual")


def write_steps_csv(path, traj: Trajectory) -> None:
    if traj.reports is None:
        raise ValueError("trajectory carries no step reports")
    lines = [",".join(STEP_COLUMNS)]
    for rep in traj.reports:
        lines.append(",".join([
            str(rep.k), fmt(rep.speed_norm), fmt(rep.slope_at),
            fmt(rep.energy_after), fmt(rep.power_term),
            str(rep.active_count), str(rep.inner_iterations),
            fmt(rep.kkt_residual)]))
    write_text(path, "\n".join(lines) + "\n")


def write_ledger_csv(path, ledger: EnergyLedger) -> None:
    lines = ["k,t,E,D,S,P,R"]
    for k in range(len(ledger.times)):
        lines.append(",".join([
            str(k), fmt(ledger.times[k]), fmt(ledger.energy[k]),
            fmt(ledger.dissipation[k]), fmt(ledger.slope_integral[k]),
            fmt(ledger.power[k]), fmt(ledger.residual[k])]))
    write_text(path, "\n".join(lines) + "\n")


def write_study_csv(path, study: StudyResult) -> None:
    """One row per (kind, n_steps) run; Cauchy distance pairs a run with its
    next refinement (empty on the finest), cross distance is against the
    constrained run at the finest step."""
    header = ("kind,n_steps,tau,energy_final,dissipation_total,"
              "slope_integral_total,power_total,residual_final,"
              "cauchy_distance,cross_distance_to_constrained")
    lines = [header]
    for row in study.rows:
        kind, n = row["kind"], row["n_steps"]
        cauchy = ""
        for entry in study.cauchy.get(kind, []):
            if entry["n_coarse"] == n:
                cauchy = fmt(entry["distance"])
        cross = ""
        if n == study.n_steps_list[-1] and kind in study.cross_distance:
            cross = fmt(study.cross_distance[kind])
        lines.append(",".join([
            kind, str(n), fmt(row["tau"]), fmt(row["energy_final"]),
            fmt(row["dissipation_total"]), fmt(row["slope_integral_total"]),
            fmt(row["power_total"]), fmt(row["residual_final"]),
            cauchy, cross]))
    write_text(path, "\n".join(lines) + "\n")


def _parse_float(token: str, lineno: int, path) -> float:
    try:
        return float(token)
    except ValueError:
        raise SchemaError(f"{path}: line {lineno}: not a number: {token!r}")


def read_trajectory_csv(path, grid: Grid) -> Trajectory:
    """Read a trajectory and resample it onto ``grid`` if the node counts
    differ (linear interpolation in space, never zero-padding)."""
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise SchemaError(f"{path}: line 1: empty trajectory file")
    header = lines[0].split(",")
    if header[:2] != ["k", "t"] or len(header) < 3:
        raise SchemaError(f"{path}: line 1: expected header k,t,x_1,...")
    m_file = len(header) - 2
    times: List[float] = []
    rows: List[List[float]] = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != m_file + 2:
            raise SchemaError(f"{path}: line {lineno}: expected "
                              f"{m_file + 2} columns, got {len(parts)}")
        times.append(_parse_float(parts[1], lineno, path))
        rows.append([_parse_float(p, lineno, path) for p in parts[2:]])
    if len(rows) < 2:
        raise SchemaError(f"{path}: line {len(lines)}: need at least two rows")
    states = np.asarray(rows)
    if m_file != grid.n_interior:
        src = np.linspace(grid.x_left, grid.x_right, m_file + 2)
        dst = grid.interior_nodes()
        padded = np.zeros((len(rows), m_file + 2))
        padded[:, 1:-1] = states
        states = np.array([np.interp(dst, src, row) for row in padded])
    try:
        return make_trajectory(grid, np.asarray(times), states,
                               metadata={"kind": "external", "source": str(path)})
    except ValueError as exc:
        raise SchemaError(f"{path}: {exc}")


def read_forcing_table_csv(path) -> Tuple[np.ndarray, np.ndarray]:
    """Table forcing: header t,node_0,...,node_m then one row per sample."""
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("t,"):
        raise SchemaError(f"{path}: line 1: expected header t,node_0,...")
    width = len(lines[0].split(","))
    times, rows = [], []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != width:
            raise SchemaError(f"{path}: line {lineno}: expected {width} "
                              f"columns, got {len(parts)}")
        times.append(_parse_float(parts[0], lineno, path))
        rows.append([_parse_float(p, lineno, path) for p in parts[1:]])
    return np.asarray(times), np.asarray(rows)
