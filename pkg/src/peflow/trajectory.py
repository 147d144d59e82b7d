"""The trajectory map X(y, t) assembled from a simulation's snapshots.

A :class:`TrajectoryMap` stores cluster states at every output time and on
both sides of every merge (``pre`` and ``post`` nodes share a time stamp).
Clusters are always contiguous runs of atoms, so a partition is encoded by
the index of each cluster's leftmost atom (``starts``), which also serves as
the cluster id. Between nodes, positions are cubic Hermite interpolants of
the stored positions and velocities.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import ArgumentError
from .initial_data import DiscreteMeasure, InitialVelocity
from .potential import sigma


class RangeError(ArgumentError):
    """Time query outside the simulated interval."""


@dataclass(frozen=True)
class Snapshot:
    time: float
    kind: str  # "grid", "pre" (left limit at a merge) or "post"
    starts: np.ndarray
    mass: np.ndarray
    pos: np.ndarray
    vel: np.ndarray
    acc: np.ndarray
    free_vel: np.ndarray | None = None  # v_i - int_0^t (W' * rho)(X_i) per atom

    @property
    def n_clusters(self) -> int:
        return self.starts.size

    def counts(self, n_atoms: int) -> np.ndarray:
        return np.diff(np.append(self.starts, n_atoms))

    def atom_cluster(self, n_atoms: int) -> np.ndarray:
        return np.repeat(np.arange(self.starts.size), self.counts(n_atoms))


@dataclass(frozen=True)
class MergeEvent:
    time: float
    participants: tuple  # ids of the merging clusters, left to right
    result_id: int
    masses: tuple
    v_pre: tuple
    v_post: float
    position: float
    gap_residual: float  # largest |gap| among participants when merged


@dataclass(frozen=True)
class VelocityField:
    positions: np.ndarray
    velocities: np.ndarray
    masses: np.ndarray
    at_event: bool  # True when ``t`` is a merge time; values are right limits


@dataclass(frozen=True)
class MonotoneMap:
    """Nondecreasing piecewise-linear map through ``(xs, ys)``.

    Outside the data range the nearest interior slope is continued, capped
    at ``cap``.
    """

    xs: np.ndarray
    ys: np.ndarray
    cap: float

    def _end_slopes(self):
        if self.xs.size < 2:
            return 0.0, 0.0
        sl = np.diff(self.ys) / np.diff(self.xs)
        return min(sl[0], self.cap), min(sl[-1], self.cap)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.interp(x, self.xs, self.ys)
        left, right = self._end_slopes()
        out = np.where(x < self.xs[0], self.ys[0] + left * (x - self.xs[0]), out)
        out = np.where(x > self.xs[-1], self.ys[-1] + right * (x - self.xs[-1]), out)
        return out if out.ndim else float(out)

    @property
    def lipschitz(self) -> float:
        if self.xs.size < 2:
            return 0.0
        return float(np.max(np.diff(self.ys) / np.diff(self.xs)))


@dataclass
class TrajectoryMap:
    """Full history of a sticky-particle run.

    ``interaction`` is the potential used (anything exposing ``w``,
    ``w_prime`` and ``c``); ``v0`` is the piecewise-linear initial velocity.
    """

    x0: np.ndarray
    m: np.ndarray
    v_atoms: np.ndarray
    v0: InitialVelocity
    interaction: Any
    horizon: float
    snapshots: list
    events: list
    opts: dict = field(default_factory=dict)
    config_hash: str | None = None

    def __post_init__(self):
        self.times = np.array([s.time for s in self.snapshots])

    @property
    def n_atoms(self) -> int:
        return self.x0.size

    @property
    def c(self) -> float:
        return float(getattr(self.interaction, "c", 0.0))

    @property
    def rho0(self) -> DiscreteMeasure:
        return DiscreteMeasure(self.x0, self.m)

    # -- locating nodes -----------------------------------------------------

    def _check_time(self, t):
        slack = 1e-12 * max(1.0, self.horizon)
        if not (-slack <= t <= self.horizon + slack):
            raise RangeError(f"t={t} outside [0, {self.horizon}]")
        return min(max(t, 0.0), self.horizon)

    def node_index(self, t: float) -> int:
        """Index of the last node with time <= t (right-limit convention)."""
        return int(np.searchsorted(self.times, t, side="right")) - 1

    def state_at(self, t: float):
        """Cluster ``(starts, mass, pos, vel)`` at time ``t`` (right limits)."""
        t = self._check_time(t)
        i = self.node_index(t)
        a = self.snapshots[i]
        if a.time == t or i + 1 >= len(self.snapshots):
            return a.starts, a.mass, a.pos, a.vel
        b = self.snapshots[i + 1]
        h = b.time - a.time
        s = (t - a.time) / h
        h00 = 2 * s**3 - 3 * s**2 + 1
        h10 = s**3 - 2 * s**2 + s
        h01 = -2 * s**3 + 3 * s**2
        h11 = s**3 - s**2
        pos = h00 * a.pos + h10 * h * a.vel + h01 * b.pos + h11 * h * b.vel
        d00 = (6 * s**2 - 6 * s) / h
        d10 = 3 * s**2 - 4 * s + 1
        d01 = (-6 * s**2 + 6 * s) / h
        d11 = 3 * s**2 - 2 * s
        vel = d00 * a.pos + d10 * a.vel + d01 * b.pos + d11 * b.vel
        return a.starts, a.mass, pos, vel

    # -- queries --------------------------------------------------------------

    def positions(self, t: float) -> np.ndarray:
        """X(x_i, t) for every atom."""
        starts, _, pos, _ = self.state_at(t)
        counts = np.diff(np.append(starts, self.n_atoms))
        return np.repeat(pos, counts)

    def eval_x(self, i: int, t: float) -> float:
        if not 0 <= i < self.n_atoms:
            raise ArgumentError(f"atom index {i} out of range")
        starts, _, pos, _ = self.state_at(t)
        k = int(np.searchsorted(starts, i, side="right")) - 1
        return float(pos[k])

    def flow_between(self, s: float, t: float) -> MonotoneMap:
        """The map f_{t,s} sending X(y, s) to X(y, t) on atoms."""
        if not (0 < s <= t):
            raise ArgumentError("flow maps are defined for 0 < s <= t")
        starts_s, _, pos_s, _ = self.state_at(s)
        x_t = self.positions(t)
        cap = float(sigma(t, self.c) / sigma(s, self.c))
        return MonotoneMap(np.asarray(pos_s, dtype=float), x_t[starts_s], cap)

    def push_forward(self, t: float) -> DiscreteMeasure:
        _, mass, pos, _ = self.state_at(t)
        return DiscreteMeasure(pos, mass)

    def conditional_expectation(self, t: float, g) -> np.ndarray:
        """Mass-weighted average of per-atom values over each cluster at t."""
        g = np.asarray(g, dtype=float)
        if g.shape != (self.n_atoms,):
            raise ArgumentError("g must have one value per atom")
        starts, mass, _, _ = self.state_at(t)
        avg = np.add.reduceat(self.m * g, starts) / np.add.reduceat(self.m, starts)
        counts = np.diff(np.append(starts, self.n_atoms))
        return np.repeat(avg, counts)

    def velocity_field(self, t: float) -> VelocityField:
        starts, mass, pos, vel = self.state_at(t)
        at_event = any(e.time == t for e in self.events)
        return VelocityField(pos, vel, mass, at_event)

    def cluster_count(self, t: float) -> int:
        return int(self.state_at(t)[0].size)

    def partition(self, t: float) -> list:
        """Clusters at t as lists of atom indices."""
        starts = self.state_at(t)[0]
        bounds = np.append(starts, self.n_atoms)
        return [list(range(bounds[k], bounds[k + 1])) for k in range(starts.size)]


def eval_x(tm: TrajectoryMap, i: int, t: float) -> float:
    return tm.eval_x(i, t)


def flow_between(tm: TrajectoryMap, s: float, t: float) -> MonotoneMap:
    return tm.flow_between(s, t)


def push_forward(tm: TrajectoryMap, t: float) -> DiscreteMeasure:
    return tm.push_forward(t)


def conditional_expectation(tm: TrajectoryMap, t: float, g) -> np.ndarray:
    return tm.conditional_expectation(t, g)


def velocity_field(tm: TrajectoryMap, t: float) -> VelocityField:
    return tm.velocity_field(t)
