"""Time-dependent forcing data: sampling, interval averages, and the
backward-constant interpolant driving the time-discrete schemes.

Forcing values are sampled at every grid node (boundary included) so the FEM
load integrates the data exactly at P1 accuracy.  Interval averages are exact
whenever a closed-form time antiderivative is attached (all built-in presets
carry one); otherwise a composite midpoint rule with ``QUAD_POINTS``
sub-points per interval is used.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .fem import Grid

QUAD_POINTS = 8

SMOOTHNESS_TAGS = ("L2", "AC", "autonomous")


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time grid t_k = k*tau on [0, T]."""

    T: float
    n_steps: int

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError("final time must be positive")
        if self.n_steps < 1:
            raise ValueError("n_steps must be a positive integer")

    @property
    def tau(self) -> float:
        return self.T / self.n_steps

    def times(self) -> np.ndarray:
        return self.tau * np.arange(self.n_steps + 1)


@dataclass(frozen=True)
class Forcing:
    """Forcing f(t, x) with an optional exact time antiderivative.

    ``fn(t, xs)`` returns nodal samples; ``antiderivative(t, xs)`` is A with
    dA/dt = f, used for exact interval means.  ``smoothness`` is one of
    "L2", "AC", "autonomous".
    """

    fn: Callable[[float, np.ndarray], np.ndarray]
    smoothness: str = "L2"
    antiderivative: Optional[Callable[[float, np.ndarray], np.ndarray]] = None
    kind: str = "analytic"

    def __post_init__(self):
        if self.smoothness not in SMOOTHNESS_TAGS:
            raise ValueError(f"unknown smoothness tag {self.smoothness!r}")

    def sample(self, t: float, xs: np.ndarray) -> np.ndarray:
        return np.asarray(self.fn(t, xs), dtype=float) * np.ones_like(xs)

    def interval_mean(self, t0: float, t1: float, xs: np.ndarray) -> np.ndarray:
        if not t1 > t0:
            raise ValueError("interval must satisfy t1 > t0")
        if self.smoothness == "autonomous":
            return self.sample(t0, xs)
        if self.antiderivative is not None:
            a1 = np.asarray(self.antiderivative(t1, xs), dtype=float)
            a0 = np.asarray(self.antiderivative(t0, xs), dtype=float)
            return (a1 - a0) * np.ones_like(xs) / (t1 - t0)
        # composite midpoint quadrature
        pts = t0 + (t1 - t0) * (np.arange(QUAD_POINTS) + 0.5) / QUAD_POINTS
        acc = np.zeros_like(xs, dtype=float)
        for t in pts:
            acc += self.sample(float(t), xs)
        return acc / QUAD_POINTS


def analytic_forcing(fn, smoothness: str = "L2", antiderivative=None) -> Forcing:
    return Forcing(fn, smoothness, antiderivative, kind="analytic")


def autonomous_forcing(spatial_fn: Callable[[np.ndarray], np.ndarray]) -> Forcing:
    """Time-independent forcing built from a spatial profile."""
    return Forcing(lambda t, xs: spatial_fn(xs), "autonomous",
                   antiderivative=lambda t, xs: t * np.asarray(spatial_fn(xs), dtype=float),
                   kind="autonomous")


def separable_forcing(profile: Callable[[float], float],
                      profile_antiderivative: Callable[[float], float],
                      spatial_fn: Callable[[np.ndarray], np.ndarray],
                      smoothness: str = "AC") -> Forcing:
    """profile(t) * spatial(x) with an exact profile antiderivative."""
    return Forcing(
        lambda t, xs: profile(t) * np.asarray(spatial_fn(xs), dtype=float),
        smoothness,
        antiderivative=lambda t, xs: profile_antiderivative(t)
        * np.asarray(spatial_fn(xs), dtype=float),
        kind="separable")


@dataclass(frozen=True)
class TableForcing(Forcing):
    """Piecewise forcing from sampled rows at increasing times.

    ``mode`` "hold" keeps each row constant on (t_i, t_{i+1}] (left limit at
    the first time); "linear" interpolates between rows.  Rows are sampled at
    every node of the grid they were tabulated for.
    """

    times: np.ndarray = field(default=None)  # type: ignore[assignment]
    rows: np.ndarray = field(default=None)  # type: ignore[assignment]
    mode: str = "hold"

    def sample(self, t: float, xs: np.ndarray) -> np.ndarray:
        ts, rows = self.times, self.rows
        if t <= ts[0]:
            return rows[0]
        if t >= ts[-1]:
            return rows[-1]
        j = int(np.searchsorted(ts, t, side="left"))
        if self.mode == "hold":
            return rows[j]
        w = (t - ts[j - 1]) / (ts[j] - ts[j - 1])
        return (1.0 - w) * rows[j - 1] + w * rows[j]

    def interval_mean(self, t0: float, t1: float, xs: np.ndarray) -> np.ndarray:
        if not t1 > t0:
            raise ValueError("interval must satisfy t1 > t0")
        # exact piecewise integration against the table breakpoints
        cuts = [t0] + [float(t) for t in self.times if t0 < t < t1] + [t1]
        acc = np.zeros_like(self.rows[0])
        for a, b in zip(cuts[:-1], cuts[1:]):
            # hold: constant = left-continuous value at b; linear: midpoint
            t_eval = b if self.mode == "hold" else 0.5 * (a + b)
            acc += (b - a) * self.sample(float(t_eval), xs)
        return acc / (t1 - t0)


def table_forcing(times: Sequence[float], rows: np.ndarray,
                  mode: str = "hold", smoothness: str = "L2") -> TableForcing:
    ts = np.asarray(times, dtype=float)
    rs = np.asarray(rows, dtype=float)
    if ts.ndim != 1 or rs.shape[0] != ts.shape[0]:
        raise ValueError("table needs one row per sample time")
    if np.any(np.diff(ts) <= 0):
        raise ValueError("table times must be strictly increasing")
    if mode not in ("hold", "linear"):
        raise ValueError(f"unknown table mode {mode!r}")
    return TableForcing(fn=None, smoothness=smoothness, antiderivative=None,
                        kind="table", times=ts, rows=rs, mode=mode)


def interval_average(f: Forcing, grid: Grid, t0: float, t1: float) -> np.ndarray:
    """Nodal samples of the time average of f over (t0, t1)."""
    return f.interval_mean(float(t0), float(t1), grid.nodes())


def backward_interpolant(f: Forcing, grid: Grid, tg: TimeGrid) -> np.ndarray:
    """Interval means fbar_k over (t_{k-1}, t_k], k = 1..n_steps.

    Returns an array of shape (n_steps, n_nodes); row k-1 is fbar_k, the
    value the left-continuous piecewise-constant interpolant takes on
    (t_{k-1}, t_k].
    """
    ts = tg.times()
    xs = grid.nodes()
    return np.array([f.interval_mean(float(ts[k]), float(ts[k + 1]), xs)
                     for k in range(tg.n_steps)])


def eval_backward_forcing(fbars: np.ndarray, tg: TimeGrid, t: float) -> np.ndarray:
    """Left-continuous evaluation: fbar_k on (t_{k-1}, t_k]; fbar_1 at t=0."""
    if t < 0 or t > tg.T:
        raise ValueError("time outside [0, T]")
    if t <= 0:
        return fbars[0]
    k = int(np.ceil(t / tg.tau - 1e-12))
    return fbars[min(k, tg.n_steps) - 1]


def discrete_time_difference(fbars: np.ndarray) -> np.ndarray:
    """Differences fbar_{k+1} - fbar_k, k = 1..n_steps-1."""
    if len(fbars) < 2:
        raise ValueError("need at least two interval averages")
    return np.diff(np.asarray(fbars, dtype=float), axis=0)
