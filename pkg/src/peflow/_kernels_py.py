"""NumPy fallback for the compiled kernels in ``_kernels.pyx``.

Same signatures and kind codes. Used when the extension is not built or
``PEFLOW_PURE_PYTHON=1`` is set.
"""

import numpy as np


def accelerations(kind, param, pos, mass):
    if kind == 0:
        return np.zeros_like(pos)
    if kind == 1:
        return -param * (pos * mass.sum() - np.dot(mass, pos))
    d = pos[:, None] - pos[None, :]
    return -np.sum(mass[None, :] * (d / np.hypot(d, param)), axis=1)


def rk4_step(kind, param, pos, vel, mass, dt, accel=None):
    acc = accel if accel is not None else (lambda x: accelerations(kind, param, x, mass))
    h = 0.5 * dt
    a1 = acc(pos)
    a2 = acc(pos + h * vel)
    a3 = acc(pos + h * vel + h * h * a1)
    a4 = acc(pos + dt * vel + dt * h * a2)
    x = pos + dt * vel + dt * dt / 6.0 * (a1 + a2 + a3)
    v = vel + dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
    return x, v


def hermite_gap_min(pos0, vel0, pos1, vel1, h):
    g0 = np.diff(pos0)
    g1 = np.diff(pos1)
    d0 = np.diff(vel0)
    d1 = np.diff(vel1)
    A = 2 * g0 + h * d0 - 2 * g1 + h * d1
    B = -3 * g0 - 2 * h * d0 + 3 * g1 - h * d1
    C = h * d0
    cand = [np.zeros_like(g0), np.ones_like(g0)]
    # stationary points of A s^3 + B s^2 + C s + g0
    qa, qb = 3 * A, 2 * B
    disc = qb * qb - 4 * qa * C
    ok = disc >= 0
    sq = np.sqrt(np.where(ok, disc, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        safe_qa = np.where(qa != 0, qa, 1.0)
        lin = np.where(qb != 0, -C / np.where(qb != 0, qb, 1.0), 0.0)
        r1 = np.where(qa != 0, (-qb - sq) / (2 * safe_qa), lin)
        r2 = np.where(qa != 0, (-qb + sq) / (2 * safe_qa), lin)
    for r in (r1, r2):
        cand.append(np.where((ok | (qa == 0)) & (r > 0) & (r < 1), r, 0.0))
    s = np.stack(cand)
    vals = ((A * s + B) * s + C) * s + g0
    flat = int(np.argmin(vals))
    j, k = divmod(flat, g0.size)
    return float(vals[j, k]), k, float(s[j, k]), float(g1.min())
