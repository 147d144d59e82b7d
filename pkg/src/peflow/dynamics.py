"""Event-driven integration of sticky particles with a smooth potential.

Between collisions every cluster obeys Newton's equations
``x_k'' = -sum_j M_j W'(x_k - x_j)`` and is advanced by classical RK4.
Contacts are detected with a cubic Hermite bound on each adjacent gap over
the step, located by bisection on re-integrated sub-steps, and resolved by a
perfectly inelastic merge (mass-weighted mean velocity).
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, replace

import numpy as np

from . import kernels
from .errors import IntegrationError, PeflowError, TruncationError
from .initial_data import DiscreteMeasure, InitialVelocity
from .potential import Potential
from .trajectory import MergeEvent, Snapshot, TrajectoryMap

log = logging.getLogger(__name__)

DEFAULT_OUTPUT_POINTS = 101


class MergeLogicError(PeflowError, RuntimeError):
    """Merge requested for clusters that are not adjacent."""


@dataclass(frozen=True)
class SolverOptions:
    """Integrator settings. ``None`` fields are resolved per run.

    gap_tol defaults to ``1e-9 * diameter`` of the initial support and t_tol
    to ``1e-10 * max(1, T)``; the default output grid has 101 uniform times.
    """

    dt_init: float = 1e-3
    gap_tol: float | None = None
    t_tol: float | None = None
    output_times: tuple | None = None
    max_steps: int = 10_000_000

    @classmethod
    def from_config(cls, cfg) -> "SolverOptions":
        cfg = dict(cfg or {})
        if cfg.get("output_times") is not None:
            cfg["output_times"] = tuple(float(t) for t in cfg["output_times"])
        if "max_steps" in cfg:
            cfg["max_steps"] = int(cfg["max_steps"])
        return cls(**cfg)

    def resolve(self, horizon: float, diameter: float) -> "SolverOptions":
        gap_tol = self.gap_tol if self.gap_tol is not None else 1e-9 * (diameter if diameter > 0 else 1.0)
        t_tol = self.t_tol if self.t_tol is not None else 1e-10 * max(1.0, horizon)
        if self.output_times is None:
            grid = np.linspace(0.0, horizon, DEFAULT_OUTPUT_POINTS)
        else:
            grid = np.asarray(self.output_times, dtype=float)
            grid = grid[(grid >= 0) & (grid <= horizon)]
            grid = np.union1d(grid, [0.0, horizon])
        return replace(self, gap_tol=float(gap_tol), t_tol=float(t_tol),
                       output_times=tuple(float(t) for t in grid))

    def to_config(self) -> dict:
        out = asdict(self)
        if out["output_times"] is not None:
            out["output_times"] = list(out["output_times"])
        return out


@dataclass(frozen=True)
class Cluster:
    members: tuple
    mass: float
    position: float
    velocity: float


@dataclass(frozen=True)
class SimState:
    """Ordered clusters at one instant; ``starts`` holds each cluster's first atom."""

    time: float
    starts: np.ndarray
    mass: np.ndarray
    pos: np.ndarray
    vel: np.ndarray
    n_atoms: int

    @classmethod
    def initial(cls, rho0: DiscreteMeasure, v) -> "SimState":
        n = rho0.n
        return cls(0.0, np.arange(n), rho0.m.copy(), rho0.x.copy(), np.asarray(v, dtype=float).copy(), n)

    @property
    def clusters(self) -> list:
        bounds = np.append(self.starts, self.n_atoms)
        return [
            Cluster(tuple(range(bounds[k], bounds[k + 1])), float(self.mass[k]),
                    float(self.pos[k]), float(self.vel[k]))
            for k in range(self.starts.size)
        ]

    @property
    def gaps(self) -> np.ndarray:
        return np.diff(self.pos)

    def momentum(self) -> float:
        return float(np.dot(self.mass, self.vel))


def accelerations(state: SimState, p: Potential) -> np.ndarray:
    return kernels.accelerations(p, state.pos, state.mass)


def advance_segment(state: SimState, p: Potential, dt: float) -> SimState:
    """One RK4 step of size ``dt``; the caller guarantees no contact inside."""
    if dt == 0:
        return state
    pos, vel = kernels.rk4_step(p, state.pos, state.vel, state.mass, dt)
    if not (np.all(np.isfinite(pos)) and np.all(np.isfinite(vel))):
        raise IntegrationError(f"non-finite state after step dt={dt} at t={state.time}", state)
    return replace(state, time=state.time + dt, pos=pos, vel=vel)


# -- contact detection -------------------------------------------------------


HALVE = "halve"


def _locate(state, p, new_pos, new_vel, h, gap_tol, t_tol):
    """Earliest contact inside a step of size ``h``.

    Returns ``None`` (no contact), ``HALVE`` (contact suspected but not
    bracketed) or ``(tau, pos, vel)`` with the state at the contact time.
    """
    if state.pos.size < 2:
        return None
    gmin, k, smin, g1min = kernels.hermite_gap_min(state.pos, state.vel, new_pos, new_vel, h)
    if gmin > gap_tol:
        return None

    def contact(tau):
        pos, vel = kernels.rk4_step(p, state.pos, state.vel, state.mass, tau)
        return np.min(np.diff(pos)) <= gap_tol, pos, vel

    if g1min <= gap_tol:
        hi, hi_pos, hi_vel = h, new_pos, new_vel
    else:
        hi = max(smin * h, t_tol)
        hit, hi_pos, hi_vel = contact(hi)
        if not hit:
            return HALVE
    lo = 0.0
    while hi - lo > t_tol:
        mid = 0.5 * (lo + hi)
        hit, pos, vel = contact(mid)
        if hit:
            hi, hi_pos, hi_vel = mid, pos, vel
        else:
            lo = mid
    return hi, hi_pos, hi_vel


def locate_collision(state_before: SimState, state_after: SimState, p: Potential,
                     gap_tol: float = 1e-9, t_tol: float = 1e-10):
    """Time of the earliest contact between two endpoints of one step, or None."""
    h = state_after.time - state_before.time
    res = _locate(state_before, p, state_after.pos, state_after.vel, h, gap_tol, t_tol)
    if res is None or res is HALVE:
        return None
    return state_before.time + res[0]


# -- merging -----------------------------------------------------------------


def merge(state: SimState, participants) -> tuple:
    """Merge adjacent clusters (indices into the current ordering).

    Returns the new state and the :class:`MergeEvent`.
    """
    idx = sorted(int(k) for k in participants)
    if len(idx) < 2 or idx != list(range(idx[0], idx[-1] + 1)) or idx[-1] >= state.starts.size:
        raise MergeLogicError(f"clusters {participants} are not adjacent")
    lo, hi = idx[0], idx[-1] + 1
    ms = state.mass[lo:hi]
    vs = state.vel[lo:hi]
    xs = state.pos[lo:hi]
    mtot = ms.sum()
    v_post = float(np.dot(ms, vs) / mtot)
    x_post = float(np.dot(ms, xs) / mtot)
    ev = MergeEvent(
        time=state.time,
        participants=tuple(int(s) for s in state.starts[lo:hi]),
        result_id=int(state.starts[lo]),
        masses=tuple(float(m) for m in ms),
        v_pre=tuple(float(v) for v in vs),
        v_post=v_post,
        position=x_post,
        gap_residual=float(np.max(np.abs(np.diff(xs)))),
    )
    keep = np.r_[0:lo + 1, hi:state.starts.size]
    mass = state.mass[keep].copy()
    pos = state.pos[keep].copy()
    vel = state.vel[keep].copy()
    mass[lo] = mtot
    pos[lo] = x_post
    vel[lo] = v_post
    return replace(state, starts=state.starts[keep], mass=mass, pos=pos, vel=vel), ev


def merge_contacts(state: SimState, gap_tol: float):
    """Merge every maximal run of clusters joined by gaps <= gap_tol, repeatedly."""
    events = []
    while state.starts.size > 1:
        close = np.diff(state.pos) <= gap_tol
        if not close.any():
            break
        runs = []
        k = 0
        while k < close.size:
            if close[k]:
                j = k
                while j < close.size and close[j]:
                    j += 1
                runs.append((k, j))
                k = j
            else:
                k += 1
        # right to left keeps earlier indices valid
        for a, b in reversed(runs):
            state, ev = merge(state, range(a, b + 1))
            events.append(ev)
    return state, events


# -- driver ------------------------------------------------------------------


def simulate(rho0: DiscreteMeasure, v0, p: Potential, T: float,
             opts: SolverOptions | None = None) -> TrajectoryMap:
    """Sticky-particle trajectories on ``[0, T]``.

    ``v0`` is an :class:`InitialVelocity` or an array of per-atom velocities
    (interpolated piecewise linearly).
    """
    if not T > 0:
        raise ValueError("horizon T must be positive")
    if not isinstance(v0, InitialVelocity):
        v0 = InitialVelocity.from_atoms(rho0.x, v0) if rho0.n > 1 else InitialVelocity.constant(np.asarray(v0).ravel()[0])
    opts = (opts or SolverOptions()).resolve(T, rho0.diameter)
    v_atoms = np.asarray(v0(rho0.x), dtype=float).reshape(rho0.n)
    integ = _Integrator(rho0, v_atoms, p, T, opts)
    integ.run()
    return integ.trajectory(v0)


class _Integrator:
    def __init__(self, rho0, v_atoms, p, T, opts):
        self.rho0 = rho0
        self.v_atoms = v_atoms
        self.p = p
        self.T = float(T)
        self.opts = opts
        self.state = SimState.initial(rho0, v_atoms)
        self.free = v_atoms.copy()
        self.snapshots = []
        self.events = []

    def _record(self, kind):
        st = self.state
        self.snapshots.append(Snapshot(
            st.time, kind, st.starts.copy(), st.mass.copy(), st.pos.copy(), st.vel.copy(),
            accelerations(st, self.p), self.free.copy(),
        ))

    def _resolve_contacts(self):
        merged, evs = merge_contacts(self.state, self.opts.gap_tol)
        if evs:
            self._record("pre")
            self.state = merged
            self.events.extend(evs)
            self._record("post")
            log.debug("t=%.12g: %d merge(s), %d clusters left", merged.time, len(evs), merged.starts.size)

    def _accept(self, pos, vel, h, t_new):
        st = self.state
        counts = np.diff(np.append(st.starts, st.n_atoms))
        self.free += np.repeat(vel - st.vel, counts)
        self.state = replace(st, time=t_new, pos=pos, vel=vel)

    def run(self):
        opts = self.opts
        grid = opts.output_times
        self._resolve_contacts()
        self._record("grid")
        j = 1
        dt = opts.dt_init
        steps = 0
        while j < len(grid):
            st = self.state
            target = grid[j]
            if st.starts.size == 1 or self.p.kind == "zero":
                # no interaction force acts: jump to the target in one exact step
                h = target - st.time
            else:
                h = min(dt, target - st.time)
            pos, vel = kernels.rk4_step(self.p, st.pos, st.vel, st.mass, h)
            if not (np.all(np.isfinite(pos)) and np.all(np.isfinite(vel))):
                raise IntegrationError(f"non-finite state after step dt={h} at t={st.time}", st)
            res = _locate(st, self.p, pos, vel, h, opts.gap_tol, opts.t_tol)
            if res is HALVE:
                if h > opts.t_tol:
                    dt = 0.5 * h
                    continue
                res = None
            if res is None:
                g0 = np.diff(st.pos)
                if (self.p.kind != "zero" and g0.size and np.any(np.diff(pos) < 0.5 * g0)
                        and h > 64 * opts.t_tol):
                    dt = 0.5 * h
                    continue
                lands = h == target - st.time
                self._accept(pos, vel, h, target if lands else st.time + h)
                if lands:
                    self._record("grid")
                    j += 1
                dt = min(2.0 * dt, opts.dt_init)
            else:
                tau, pos, vel = res
                lands = tau == target - st.time
                self._accept(pos, vel, tau, target if lands else st.time + tau)
                self._resolve_contacts()
                if lands:
                    self._record("grid")
                    j += 1
            steps += 1
            if steps >= opts.max_steps:
                raise TruncationError(f"max_steps={opts.max_steps} reached at t={self.state.time}",
                                      partial=self.trajectory(None, horizon=self.state.time))

    def trajectory(self, v0, horizon=None):
        rho0 = self.rho0
        if v0 is None:
            v0 = InitialVelocity.from_atoms(rho0.x, self.v_atoms) if rho0.n > 1 else InitialVelocity.constant(self.v_atoms[0])
        return TrajectoryMap(
            x0=rho0.x.copy(), m=rho0.m.copy(), v_atoms=self.v_atoms.copy(), v0=v0,
            interaction=self.p, horizon=self.T if horizon is None else horizon,
            snapshots=list(self.snapshots), events=list(self.events),
            opts=self.opts.to_config(),
        )
