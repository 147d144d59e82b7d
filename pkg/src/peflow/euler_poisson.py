"""Exact sticky-particle solver for the 1D Euler-Poisson system.

With W(x) = |x| the force on a cluster is the mass to its right minus the
mass to its left, constant between merges. Trajectories are therefore exact
parabolas and the next contact is the earliest positive root of a quadratic.
The module also runs the W_eps smoothing continuation and the subgradient
inequality for ``|.|``.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .dynamics import SimState, SolverOptions, merge, merge_contacts, simulate
from .errors import ArgumentError, PeflowError
from .initial_data import DiscreteMeasure, InitialVelocity
from .potential import Potential
from .trajectory import Snapshot, TrajectoryMap


@dataclass(frozen=True)
class AbsInteraction:
    """W(x) = |x| with W'(x) = sgn(x), sgn(0) = 0. Convex, so c = 0."""

    kind: str = "abs"
    c: float = 0.0

    def w(self, x):
        out = np.abs(np.asarray(x, dtype=float))
        return out if out.ndim else float(out)

    def w_prime(self, x):
        out = np.sign(np.asarray(x, dtype=float))
        return out if out.ndim else float(out)

    def to_config(self) -> dict:
        return {"kind": "abs"}


ABS = AbsInteraction()


def sgn_convolve(mu: DiscreteMeasure, x):
    """(sgn * mu)(x) = sum_i m_i sgn(x - x_i)."""
    x = np.asarray(x, dtype=float)
    out = np.sign(x[..., None] - mu.x) @ mu.m
    return out if out.ndim else float(out)


def ep_accelerations(mass: np.ndarray) -> np.ndarray:
    """-(sgn * rho)(x_k) for ordered clusters: mass right minus mass left."""
    left = np.cumsum(mass) - mass
    right = mass.sum() - left - mass
    return right - left


def _first_contact(pos, vel, acc):
    """Earliest positive root of each adjacent gap's quadratic, and its index."""
    if pos.size < 2:
        return math.inf, -1
    c0 = np.diff(pos)
    b = np.diff(vel)
    a = 0.5 * np.diff(acc)
    roots = np.full(c0.size, np.inf)
    for k in range(c0.size):
        roots[k] = _smallest_positive_root(a[k], b[k], c0[k])
    k = int(np.argmin(roots))
    return float(roots[k]), k


def _smallest_positive_root(a, b, c):
    """Smallest tau > 0 with a tau^2 + b tau + c = 0 (c > 0), else inf."""
    if a == 0.0:
        return -c / b if b < 0 else math.inf
    disc = b * b - 4.0 * a * c
    if disc < 0:
        return math.inf
    q = -0.5 * (b + math.copysign(math.sqrt(disc), b))
    cands = [q / a]
    if q != 0.0:
        cands.append(c / q)
    pos = [r for r in cands if r > 0]
    return min(pos) if pos else math.inf


def simulate_ep(rho0: DiscreteMeasure, v0, T: float, opts: SolverOptions | None = None) -> TrajectoryMap:
    """Exact event-driven Euler-Poisson trajectories on ``[0, T]``."""
    if not T > 0:
        raise ArgumentError("horizon T must be positive")
    if not isinstance(v0, InitialVelocity):
        v0 = InitialVelocity.from_atoms(rho0.x, v0) if rho0.n > 1 else InitialVelocity.constant(np.asarray(v0).ravel()[0])
    opts = opts or SolverOptions()
    if opts.gap_tol is None:
        # exact events need only a round-off allowance for cascades
        opts = replace(opts, gap_tol=1e-12 * max(1.0, rho0.diameter))
    opts = opts.resolve(T, rho0.diameter)
    v_atoms = np.asarray(v0(rho0.x), dtype=float).reshape(rho0.n)

    state = SimState.initial(rho0, v_atoms)
    free = v_atoms.copy()
    snaps, events = [], []

    def record(st, kind):
        snaps.append(Snapshot(st.time, kind, st.starts.copy(), st.mass.copy(), st.pos.copy(),
                              st.vel.copy(), ep_accelerations(st.mass), free.copy()))

    def advance(st, t_new):
        tau = t_new - st.time
        acc = ep_accelerations(st.mass)
        counts = np.diff(np.append(st.starts, st.n_atoms))
        free[:] += np.repeat(acc * tau, counts)
        return replace(st, time=t_new, pos=st.pos + st.vel * tau + 0.5 * acc * tau * tau,
                       vel=st.vel + acc * tau)

    def resolve(st, forced=None):
        pre = st
        new_events = []
        if forced is not None:
            st, ev = merge(st, (forced, forced + 1))
            new_events.append(ev)
        st, more = merge_contacts(st, opts.gap_tol)
        new_events.extend(more)
        if new_events:
            record(pre, "pre")
            events.extend(new_events)
            record(st, "post")
        return st

    state = resolve(state)
    record(state, "grid")
    grid = opts.output_times
    j = 1
    while True:
        tau, k = _first_contact(state.pos, state.vel, ep_accelerations(state.mass))
        t_ev = state.time + tau
        while j < len(grid) and grid[j] < t_ev:
            state = advance(state, grid[j])
            record(state, "grid")
            j += 1
        if j >= len(grid):
            break
        state = resolve(advance(state, t_ev), forced=k)
        if grid[j] == t_ev:
            record(state, "grid")
            j += 1
            if j >= len(grid):
                break

    return TrajectoryMap(
        x0=rho0.x.copy(), m=rho0.m.copy(), v_atoms=v_atoms, v0=v0, interaction=ABS,
        horizon=float(T), snapshots=snaps, events=events, opts=opts.to_config(),
    )


# -- smoothing continuation --------------------------------------------------


class ContinuationError(PeflowError, RuntimeError):
    def __init__(self, index, eps, cause):
        super().__init__(f"continuation member {index} (eps={eps}) failed: {cause}")
        self.index = index
        self.eps = eps


@dataclass(frozen=True)
class ContinuationReport:
    eps: tuple
    times: tuple
    distances: np.ndarray  # shape (len(eps), len(times))
    tol: float
    slack: float

    @property
    def final(self) -> np.ndarray:
        return self.distances[:, -1]

    @property
    def sup(self) -> np.ndarray:
        """Largest distance over the output grid, per smoothing length."""
        return self.distances.max(axis=1)

    @property
    def monotone(self) -> bool:
        d = self.final
        return bool(np.all(d[1:] <= d[:-1] + self.slack))

    @property
    def sup_monotone(self) -> bool:
        d = self.sup
        return bool(np.all(d[1:] <= d[:-1] + self.slack))

    @property
    def converged(self) -> bool:
        return bool(self.final[-1] <= self.tol)

    @property
    def passed(self) -> bool:
        return self.monotone and self.converged

    def to_dict(self) -> dict:
        return {
            "eps": list(self.eps),
            "times": list(self.times),
            "distances": self.distances.tolist(),
            "final": self.final.tolist(),
            "sup": self.sup.tolist(),
            "sup_monotone": self.sup_monotone,
            "tol": self.tol,
            "slack": self.slack,
            "monotone": self.monotone,
            "converged": self.converged,
            "pass": self.passed,
        }


def _lagrangian_distance(tm_a, tm_b, times, m):
    out = []
    for t in times:
        d = tm_a.positions(t) - tm_b.positions(t)
        out.append(math.sqrt(float(np.dot(m, d * d))))
    return out


def _member(args):
    rho0, v0, T, eps, opts = args
    return simulate(rho0, v0, Potential.smooth_abs(eps), T, opts)


def epsilon_continuation(rho0: DiscreteMeasure, v0, T: float, eps=None, K: int = 10,
                         opts: SolverOptions | None = None, tol: float = 1e-3,
                         slack: float = 1e-6, jobs: int = 1) -> ContinuationReport:
    """Compare W_eps runs against the exact Euler-Poisson run.

    ``eps`` defaults to ``2**-k`` for ``k = 0..K``. Distances are the
    mass-weighted L2 norm of ``X^eps(x_i, t) - X(x_i, t)`` over atoms, taken
    at the output grid.
    """
    eps = tuple(float(e) for e in (eps if eps is not None else [2.0**-k for k in range(K + 1)]))
    for e in eps:
        if not e > 0:
            raise ArgumentError(f"smoothing lengths must be positive, got {e}")
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise ArgumentError("smoothing lengths must decrease")
    opts = opts or SolverOptions()
    exact = simulate_ep(rho0, v0, T, opts)
    times = exact.opts["output_times"]
    run_opts = replace(opts, output_times=tuple(times))
    args = [(rho0, v0, T, e, run_opts) for e in eps]
    runs = []
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_member, a) for a in args]
            for i, fut in enumerate(futures):
                try:
                    runs.append(fut.result())
                except Exception as exc:
                    raise ContinuationError(i, eps[i], exc) from exc
    else:
        for i, a in enumerate(args):
            try:
                runs.append(_member(a))
            except Exception as exc:
                raise ContinuationError(i, eps[i], exc) from exc
    dist = np.array([_lagrangian_distance(tm, exact, times, rho0.m) for tm in runs])
    return ContinuationReport(eps, tuple(times), dist, tol, slack)


# -- subgradient inequality ----------------------------------------------------


def check_subdiff(mu: DiscreteMeasure, g) -> float:
    """Slack of the subgradient inequality for |.| against ``mu``.

    Returns ``LHS - RHS`` of
    ``1/2 iint |x - y + g(x) - g(y)| >= 1/2 iint |x - y| + int (sgn * mu) g``,
    nonnegative up to round-off. The last integral is evaluated in its
    symmetrised form ``1/2 iint sgn(x - y) (g(x) - g(y))``.
    """
    g = np.asarray(g, dtype=float)
    if g.shape != mu.x.shape:
        raise ArgumentError("g must have one value per atom")
    d = mu.x[:, None] - mu.x[None, :]
    dg = g[:, None] - g[None, :]
    mm = mu.m[:, None] * mu.m[None, :]
    return float(0.5 * np.sum(mm * (np.abs(d + dg) - np.abs(d) - np.sign(d) * dg)))
