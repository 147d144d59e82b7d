"""Checks of the inequalities and identities satisfied by sticky trajectories.

Each ``check_*`` returns a :class:`CheckRecord` whose ``worst_slack`` is the
most negative margin found (``bound - observed``). A check passes iff
``worst_slack >= -tol``.

Tolerance budget
----------------
Every default tolerance is ``TOL_INTEGRATOR * scale`` where ``scale`` carries
the units of the checked quantity (energy, length/time, ...), plus a
quadrature term ``TOL_QUADRATURE * dt_max**2 * scale`` for checks that
integrate in time over the snapshot grid. ``TOL_INTEGRATOR`` covers RK4 and
merge round-off (merges shift positions by at most ``gap_tol``).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
from scipy.special import erf

from .errors import ArgumentError
from .initial_data import DiscreteMeasure, InitialVelocity
from .potential import cosh_c, oleinik_rate, sigma
from .trajectory import TrajectoryMap

TOL_INTEGRATOR = 1e-7
TOL_QUADRATURE = 1.0
OLEINIK_TMIN_FACTOR = 10.0


@dataclass
class CheckRecord:
    name: str
    worst_slack: float
    tol: float
    examined: int
    detail: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.worst_slack >= -self.tol)

    def to_dict(self) -> dict:
        out = {"name": self.name, "pass": self.passed, "worst_slack": self.worst_slack,
               "tol": self.tol, "examined": self.examined}
        if self.detail:
            out["detail"] = self.detail
        return out


@dataclass
class DiagnosticsReport:
    checks: list = field(default_factory=list)
    c: float = 0.0
    config_hash: str | None = None

    @property
    def passed(self) -> bool:
        return all(ch.passed for ch in self.checks)

    def add(self, rec: CheckRecord) -> CheckRecord:
        self.checks.append(rec)
        return rec

    def to_dict(self) -> dict:
        return {"checks": [c.to_dict() for c in self.checks], "c": self.c,
                "config_hash": self.config_hash, "pass": self.passed}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


# -- helpers -----------------------------------------------------------------


def _length_scale(tm: TrajectoryMap) -> float:
    L = float(tm.x0[-1] - tm.x0[0]) + tm.horizon * float(np.max(np.abs(tm.v_atoms)))
    return L if L > 0 else 1.0


def _speed_scale(tm: TrajectoryMap) -> float:
    return max(1.0, float(np.max(np.abs(tm.v_atoms))), _length_scale(tm) / max(tm.horizon, 1e-300))


def _node_times(tm: TrajectoryMap, positive=False):
    """Distinct snapshot times (right-limit states)."""
    t = np.unique(tm.times)
    return t[t > 0] if positive else t


def _atom_positions(tm: TrajectoryMap, times) -> np.ndarray:
    return np.array([tm.positions(t) for t in times])


def _trapezoid_weights(times: np.ndarray) -> np.ndarray:
    w = np.zeros_like(times)
    d = np.diff(times)
    w[:-1] += 0.5 * d
    w[1:] += 0.5 * d
    return w


def _max_dt(tm: TrajectoryMap) -> float:
    d = np.diff(tm.times)
    return float(d.max()) if d.size else 0.0


# -- energy ------------------------------------------------------------------


def _energy_of(w, mass, pos, vel):
    kin = 0.5 * float(np.dot(mass, vel * vel))
    d = pos[:, None] - pos[None, :]
    pot = 0.5 * float(mass @ np.asarray(w(d)) @ mass)
    return kin, pot, kin + pot


def energy(tm: TrajectoryMap, t: float, p=None):
    """(kinetic, potential, total) at ``t`` using right-limit velocities."""
    p = p or tm.interaction
    _, mass, pos, vel = tm.state_at(t)
    return _energy_of(p.w, mass, pos, vel)


def energy_series(tm: TrajectoryMap, p=None):
    """Total energy at every snapshot node, in node order (pre and post)."""
    p = p or tm.interaction
    return np.array([_energy_of(p.w, s.mass, s.pos, s.vel)[2] for s in tm.snapshots])


def _worst_increase(seq: np.ndarray) -> float:
    """max over i <= j of seq[j] - seq[i], via a running minimum."""
    if seq.size == 0:
        return 0.0
    return float(np.max(seq - np.minimum.accumulate(seq)))


def check_energy_monotone(tm: TrajectoryMap, p=None, tol: float | None = None) -> CheckRecord:
    e = energy_series(tm, p)
    if tol is None:
        tol = TOL_INTEGRATOR * max(1.0, float(np.max(np.abs(e))))
    worst = -_worst_increase(e)
    return CheckRecord("energy", worst, tol, int(e.size),
                       {"E0": float(e[0]), "Efinal": float(e[-1])})


def theta(t, c: float):
    """e^{(c+1) t^2} int_0^t e^{-(c+1) s^2} ds, in closed form via erf."""
    a = c + 1.0
    t = np.asarray(t, dtype=float)
    ra = math.sqrt(a)
    out = np.exp(a * t * t) * (math.sqrt(math.pi) / (2 * ra)) * erf(ra * t)
    return out if out.ndim else float(out)


def check_kinetic_bound(tm: TrajectoryMap, p=None, tol: float | None = None) -> CheckRecord:
    """Time-integrated kinetic energy against its theta-growth bound."""
    p = p or tm.interaction
    x, m, v = tm.x0, tm.m, tm.v_atoms
    wp = np.asarray(p.w_prime(x[:, None] - x[None, :]))
    const = float(np.dot(m, v * v) + 0.5 * (m @ (wp * wp) @ m))
    times = tm.times
    ke2 = np.array([float(np.dot(s.mass, s.vel * s.vel)) for s in tm.snapshots])
    lhs = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(times) * (ke2[1:] + ke2[:-1]))])
    rhs = const * theta(times, tm.c)
    if tol is None:
        tol = TOL_INTEGRATOR * max(1.0, const) + TOL_QUADRATURE * _max_dt(tm) ** 2 * max(1.0, float(ke2.max()))
    slack = rhs - lhs
    return CheckRecord("kinetic_bound", float(slack.min()), tol, int(times.size), {"constant": const})


# -- stickiness, stability, entropy ----------------------------------------


def _pairs(n):
    iu, ju = np.triu_indices(n, k=1)
    return iu, ju


def check_qspp(tm: TrajectoryMap, c: float | None = None, times=None, tol: float | None = None) -> CheckRecord:
    """|X(y,t) - X(z,t)| / sigma(t) nonincreasing over 0 < s <= t, all atom pairs."""
    c = tm.c if c is None else c
    times = _node_times(tm, positive=True) if times is None else np.asarray(times, dtype=float)
    times = times[times > 0]
    if tm.n_atoms < 2 or times.size == 0:
        return CheckRecord("qspp", 0.0, tol or 0.0, 0)
    X = _atom_positions(tm, times)
    i, j = _pairs(tm.n_atoms)
    ratio = np.abs(X[:, j] - X[:, i]) / sigma(times, c)[:, None]
    worst = -_worst_increase_columns(ratio)
    if tol is None:
        tol = TOL_INTEGRATOR * _length_scale(tm) / float(sigma(times[0], c))
    return CheckRecord("qspp", worst, tol, int(ratio.size))


def _worst_increase_columns(a: np.ndarray) -> float:
    return float(np.max(a - np.minimum.accumulate(a, axis=0)))


def check_stability(tm: TrajectoryMap, v0: InitialVelocity | None = None, c: float | None = None,
                    times=None, tol: float | None = None) -> CheckRecord:
    """0 <= X(y,t) - X(z,t) <= cosh(.)(y - z) + sigma(t) TV(v0; [z, y]) for z <= y."""
    c = tm.c if c is None else c
    v0 = v0 or tm.v0
    times = _node_times(tm) if times is None else np.asarray(times, dtype=float)
    if tm.n_atoms < 2:
        return CheckRecord("stability", 0.0, tol or 0.0, 0)
    X = _atom_positions(tm, times)
    i, j = _pairs(tm.n_atoms)  # x0[i] < x0[j]
    cv = v0.cumulative_variation(tm.x0)
    tv = cv[j] - cv[i]
    dy = tm.x0[j] - tm.x0[i]
    spread = X[:, j] - X[:, i]
    bound = cosh_c(times, c)[:, None] * dy + sigma(times, c)[:, None] * tv
    lower = float(spread.min())
    upper = float((bound - spread).min())
    if tol is None:
        tol = TOL_INTEGRATOR * _length_scale(tm)
    return CheckRecord("stability", min(lower, upper), tol, int(spread.size),
                       {"lower_slack": lower, "upper_slack": upper})


def check_oleinik(tm: TrajectoryMap, c: float | None = None, times=None, tol: float | None = None) -> CheckRecord:
    """(v(x) - v(y))(x - y) <= kappa(t) (x - y)^2 for cluster pairs, t >= t_min."""
    c = tm.c if c is None else c
    t_tol = float(tm.opts.get("t_tol") or 1e-10 * max(1.0, tm.horizon))
    t_min = OLEINIK_TMIN_FACTOR * t_tol
    times = _node_times(tm) if times is None else np.asarray(times, dtype=float)
    times = times[times >= t_min]
    L = _length_scale(tm)
    worst, n = 0.0, 0
    for t in times:
        _, _, pos, vel = tm.state_at(t)
        if pos.size < 2:
            continue
        dx = pos[:, None] - pos[None, :]
        dv = vel[:, None] - vel[None, :]
        slack = oleinik_rate(t, c) * dx * dx - dv * dx
        worst = min(worst, float(slack.min()))
        n += slack.size
    if tol is None:
        k_min = float(oleinik_rate(times[0], c)) if times.size else 0.0
        tol = TOL_INTEGRATOR * (L * L * k_min + L * _speed_scale(tm))
    return CheckRecord("oleinik", worst, tol, n, {"t_min": t_min})


# -- flow equation and weak form -------------------------------------------


def _force_integral_trapezoid(tm: TrajectoryMap, upto: int) -> np.ndarray:
    """Per-atom int_0^t a(X_i) dtau by trapezoid over nodes 0..upto."""
    n = tm.n_atoms
    acc_atoms = np.array([np.repeat(s.acc, s.counts(n)) for s in tm.snapshots[: upto + 1]])
    t = tm.times[: upto + 1]
    if t.size < 2:
        return np.zeros(n)
    return np.sum(0.5 * np.diff(t)[:, None] * (acc_atoms[1:] + acc_atoms[:-1]), axis=0)


def flow_equation_residual(tm: TrajectoryMap, t: float | None = None, test_fns=None,
                           node: int | None = None, quadrature: str = "auto") -> float:
    """Largest residual of the discrete flow equation at one snapshot node.

    Compares ``sum m g(X) V`` with ``sum m g(X) [v0 - int_0^t (W' * rho)(X)]``.
    The force integral comes from the integrator's own per-step quadrature
    when available (``quadrature="integrator"``) or from the trapezoid rule
    on the snapshot grid (``"trapezoid"``). ``test_fns`` are callables of
    position; the default basis is ``1``, ``id`` and the indicator of each
    cluster.
    """
    if node is None:
        if t is None:
            raise ArgumentError("give a time or a node index")
        node = tm.node_index(t)
        if tm.times[node] != t:
            raise ArgumentError(f"t={t} is not a snapshot time")
    snap = tm.snapshots[node]
    n = tm.n_atoms
    if quadrature == "auto":
        quadrature = "integrator" if snap.free_vel is not None else "trapezoid"
    if quadrature == "integrator":
        free = snap.free_vel
    elif quadrature == "trapezoid":
        free = tm.v_atoms + _force_integral_trapezoid(tm, node)
    else:
        raise ArgumentError(f"unknown quadrature {quadrature!r}")
    # per-cluster momentum mismatch
    mism = snap.mass * snap.vel - np.add.reduceat(tm.m * free, snap.starts)
    if test_fns is None:
        vals = [np.abs(mism.sum()), abs(float(np.dot(snap.pos, mism)))]
        vals.extend(np.abs(mism))
        return float(max(vals))
    return float(max(abs(float(np.dot(np.asarray(g(snap.pos), dtype=float), mism))) for g in test_fns))


def check_flow_equation(tm: TrajectoryMap, tol: float = 1e-8, quadrature: str = "auto") -> CheckRecord:
    res = np.array([flow_equation_residual(tm, node=k, quadrature=quadrature)
                    for k in range(len(tm.snapshots))])
    return CheckRecord("flow", float(-res.max()), tol, int(res.size), {"max_residual": float(res.max())})


@dataclass(frozen=True)
class BumpTestFunction:
    """phi(x, t) = b((x - x0)/rx) b((t - t0)/rt) with b(s) = exp(-1/(1 - s^2)).

    Smooth with compact support ``[x0 +- rx] x [t0 +- rt]``; the part at
    negative times is ignored, so ``phi(., 0)`` may be nonzero.
    """

    x0: float
    rx: float
    t0: float
    rt: float

    @staticmethod
    def _b(s):
        s = np.asarray(s, dtype=float)
        inside = np.abs(s) < 1
        q = np.where(inside, 1.0 - s * s, 1.0)
        val = np.where(inside, np.exp(-1.0 / q), 0.0)
        dval = np.where(inside, val * (-2.0 * s) / (q * q), 0.0)
        return val, dval

    @property
    def t_max(self) -> float:
        return self.t0 + self.rt

    def parts(self, x, t):
        """(phi, phi_t, phi_x) at arrays ``x`` and scalar ``t``."""
        bx, dbx = self._b((np.asarray(x) - self.x0) / self.rx)
        bt, dbt = self._b((t - self.t0) / self.rt)
        return bx * bt, bx * dbt / self.rt, dbx * bt / self.rx


def weak_form_residual(tm: TrajectoryMap, phi, p=None):
    """(mass residual, momentum residual) of the weak formulation.

    Time integrals use the trapezoid rule over snapshot nodes, with both
    one-sided states at merge times.
    """
    if phi.t_max > tm.horizon:
        raise ArgumentError(f"test function support ends at {phi.t_max} > horizon {tm.horizon}")
    p = p or tm.interaction
    times = tm.times
    mass_int = np.zeros(times.size)
    mom_int = np.zeros(times.size)
    for k, s in enumerate(tm.snapshots):
        f, ft, fx = phi.parts(s.pos, s.time)
        mass_int[k] = np.dot(s.mass, ft + s.vel * fx)
        force = -s.acc  # (W' * rho)(X)
        mom_int[k] = np.dot(s.mass, s.vel * ft + s.vel * s.vel * fx - f * force)
    w = _trapezoid_weights(times)
    f0, _, _ = phi.parts(tm.x0, 0.0)
    r_mass = float(np.dot(w, mass_int) + np.dot(tm.m, f0))
    r_mom = float(np.dot(w, mom_int) + np.dot(tm.m, f0 * tm.v_atoms))
    return abs(r_mass), abs(r_mom)


# -- Wasserstein ---------------------------------------------------------------


def wasserstein2(mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
    """Quadratic Wasserstein distance between discrete measures on the line.

    Integrates ``|F_mu^{-1} - F_nu^{-1}|^2`` exactly over the common
    refinement of both cumulative-mass partitions.
    """
    cu = np.cumsum(mu.m)
    cv = np.cumsum(nu.m)
    cu[-1] = cv[-1] = 1.0
    levels = np.union1d(cu, cv)
    widths = np.diff(np.concatenate([[0.0], levels]))
    mids = levels - 0.5 * widths
    qu = mu.x[np.minimum(np.searchsorted(cu, mids, side="left"), mu.n - 1)]
    qv = nu.x[np.minimum(np.searchsorted(cv, mids, side="left"), nu.n - 1)]
    return math.sqrt(max(0.0, float(np.dot(widths, (qu - qv) ** 2))))


# -- suite -------------------------------------------------------------------

ALL_CHECKS = ("energy", "kinetic", "qspp", "stability", "oleinik", "flow", "weak")


def default_bump(tm: TrajectoryMap) -> BumpTestFunction:
    """A bump centred on the initial support, vanishing before the horizon."""
    x = tm.x0
    centre = 0.5 * (x[0] + x[-1])
    half = max(0.5 * (x[-1] - x[0]), 1e-3) * 1.5
    return BumpTestFunction(centre, half, 0.0, 0.9 * tm.horizon)


def run_checks(tm: TrajectoryMap, checks: Iterable[str] = ALL_CHECKS, weak_tol: float | None = None) -> DiagnosticsReport:
    report = DiagnosticsReport(c=tm.c, config_hash=tm.config_hash)
    for name in checks:
        if name == "energy":
            report.add(check_energy_monotone(tm))
        elif name == "kinetic":
            report.add(check_kinetic_bound(tm))
        elif name == "qspp":
            report.add(check_qspp(tm))
        elif name == "stability":
            report.add(check_stability(tm))
        elif name == "oleinik":
            report.add(check_oleinik(tm))
        elif name == "flow":
            report.add(check_flow_equation(tm))
        elif name == "weak":
            phi = default_bump(tm)
            r_mass, r_mom = weak_form_residual(tm, phi)
            scale = max(1.0, _speed_scale(tm) ** 2)
            tol = weak_tol if weak_tol is not None else (
                TOL_INTEGRATOR + TOL_QUADRATURE * (_max_dt(tm) / phi.rt) ** 2) * scale
            report.add(CheckRecord("weak", -max(r_mass, r_mom), tol, 2,
                                   {"mass_residual": r_mass, "momentum_residual": r_mom}))
        else:
            raise ArgumentError(f"unknown check {name!r}; choose from {', '.join(ALL_CHECKS)}")
    return report
