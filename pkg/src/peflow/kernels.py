"""Kernel selection: compiled Cython core if importable, NumPy otherwise.

Set ``PEFLOW_PURE_PYTHON=1`` to force the fallback. ``BACKEND`` names the
implementation in use.
"""

import os

import numpy as np

from . import _kernels_py

_FORCE_PY = os.environ.get("PEFLOW_PURE_PYTHON", "").lower() in {"1", "true", "yes", "on"}

try:
    if _FORCE_PY:
        raise ImportError("pure-python backend requested")
    from . import _kernels as _compiled
except ImportError:
    _compiled = None

BACKEND = "cython" if _compiled is not None else "python"


def _impl(potential):
    if potential.kind == "custom" or _compiled is None:
        return _kernels_py
    return _compiled


def accelerations(potential, pos, mass):
    """``a_k = -sum_j M_j W'(x_k - x_j)`` over all clusters."""
    pos = np.ascontiguousarray(pos, dtype=float)
    mass = np.ascontiguousarray(mass, dtype=float)
    if potential.kind == "custom":
        d = pos[:, None] - pos[None, :]
        return -np.sum(mass[None, :] * potential.w_prime(d), axis=1)
    return _impl(potential).accelerations(potential.code, potential.param, pos, mass)


def rk4_step(potential, pos, vel, mass, dt):
    pos = np.ascontiguousarray(pos, dtype=float)
    vel = np.ascontiguousarray(vel, dtype=float)
    mass = np.ascontiguousarray(mass, dtype=float)
    if potential.kind == "custom":
        return _kernels_py.rk4_step(
            3, 0.0, pos, vel, mass, dt, accel=lambda x: accelerations(potential, x, mass)
        )
    return _impl(potential).rk4_step(potential.code, potential.param, pos, vel, mass, float(dt))


def hermite_gap_min(pos0, vel0, pos1, vel1, h):
    """Lowest point of the cubic Hermite gap interpolants over a step.

    Returns ``(value, gap index, location in [0, 1], smallest end gap)``;
    needs at least two clusters.
    """
    impl = _compiled if _compiled is not None else _kernels_py
    return impl.hermite_gap_min(
        np.ascontiguousarray(pos0, dtype=float), np.ascontiguousarray(vel0, dtype=float),
        np.ascontiguousarray(pos1, dtype=float), np.ascontiguousarray(vel1, dtype=float), float(h),
    )
