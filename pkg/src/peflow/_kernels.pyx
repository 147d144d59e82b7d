# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled force and RK4 kernels for built-in potential kinds.

Kind codes: 0 zero, 1 quadratic (param = a), 2 smooth_abs (param = eps).
Tabulated potentials are not handled here.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


cdef void _accel(int kind, double param, const double[::1] pos,
                 const double[::1] mass, double[::1] out) noexcept nogil:
    cdef Py_ssize_t n = pos.shape[0]
    cdef Py_ssize_t k, j
    cdef double s, d, mtot, mx, e2
    if kind == 0:
        for k in range(n):
            out[k] = 0.0
    elif kind == 1:
        mtot = 0.0
        mx = 0.0
        for j in range(n):
            mtot += mass[j]
            mx += mass[j] * pos[j]
        for k in range(n):
            out[k] = -param * (pos[k] * mtot - mx)
    else:
        e2 = param * param
        for k in range(n):
            out[k] = 0.0
        # pairwise antisymmetric accumulation
        for k in range(n):
            for j in range(k + 1, n):
                d = pos[k] - pos[j]
                s = d / sqrt(d * d + e2)
                out[k] -= mass[j] * s
                out[j] += mass[k] * s


def accelerations(int kind, double param, double[::1] pos, double[::1] mass):
    out = np.empty(pos.shape[0])
    cdef double[::1] o = out
    _accel(kind, param, pos, mass, o)
    return out


def rk4_step(int kind, double param, double[::1] pos, double[::1] vel,
             double[::1] mass, double dt):
    """One classical RK4 step of x'' = a(x); returns ``(pos, vel)``."""
    cdef Py_ssize_t n = pos.shape[0]
    cdef Py_ssize_t k
    xout = np.empty(n)
    vout = np.empty(n)
    cdef double[::1] xo = xout
    cdef double[::1] vo = vout
    cdef double[::1] a1 = np.empty(n)
    cdef double[::1] a2 = np.empty(n)
    cdef double[::1] a3 = np.empty(n)
    cdef double[::1] a4 = np.empty(n)
    cdef double[::1] xt = np.empty(n)
    cdef double h = 0.5 * dt
    with nogil:
        _accel(kind, param, pos, mass, a1)
        for k in range(n):
            xt[k] = pos[k] + h * vel[k]
        _accel(kind, param, xt, mass, a2)
        for k in range(n):
            xt[k] = pos[k] + h * vel[k] + h * h * a1[k]
        _accel(kind, param, xt, mass, a3)
        for k in range(n):
            xt[k] = pos[k] + dt * vel[k] + dt * h * a2[k]
        _accel(kind, param, xt, mass, a4)
        for k in range(n):
            xo[k] = pos[k] + dt * vel[k] + dt * dt / 6.0 * (a1[k] + a2[k] + a3[k])
            vo[k] = vel[k] + dt / 6.0 * (a1[k] + 2.0 * a2[k] + 2.0 * a3[k] + a4[k])
    return xout, vout


cdef inline double _cubic(double A, double B, double C, double D, double s) noexcept nogil:
    return ((A * s + B) * s + C) * s + D


def hermite_gap_min(double[::1] pos0, double[::1] vel0, double[::1] pos1,
                    double[::1] vel1, double h):
    """Smallest value of the cubic Hermite gap interpolants over one step.

    Returns ``(value, gap index, location in [0, 1], smallest end gap)``.
    """
    cdef Py_ssize_t n = pos0.shape[0]
    cdef Py_ssize_t k, best_k = -1
    cdef double g0, g1, d0, d1, A, B, C, qa, qb, disc, sq, r, val
    cdef double best = 1e308, best_s = 0.0, end_min = 1e308
    with nogil:
        for k in range(n - 1):
            g0 = pos0[k + 1] - pos0[k]
            g1 = pos1[k + 1] - pos1[k]
            d0 = vel0[k + 1] - vel0[k]
            d1 = vel1[k + 1] - vel1[k]
            if g1 < end_min:
                end_min = g1
            if g0 < best:
                best = g0
                best_k = k
                best_s = 0.0
            if g1 < best:
                best = g1
                best_k = k
                best_s = 1.0
            A = 2 * g0 + h * d0 - 2 * g1 + h * d1
            B = -3 * g0 - 2 * h * d0 + 3 * g1 - h * d1
            C = h * d0
            qa = 3 * A
            qb = 2 * B
            if qa != 0.0:
                disc = qb * qb - 4 * qa * C
                if disc >= 0.0:
                    sq = sqrt(disc)
                    r = (-qb - sq) / (2 * qa)
                    if 0.0 < r < 1.0:
                        val = _cubic(A, B, C, g0, r)
                        if val < best:
                            best = val
                            best_k = k
                            best_s = r
                    r = (-qb + sq) / (2 * qa)
                    if 0.0 < r < 1.0:
                        val = _cubic(A, B, C, g0, r)
                        if val < best:
                            best = val
                            best_k = k
                            best_s = r
            elif qb != 0.0:
                r = -C / qb
                if 0.0 < r < 1.0:
                    val = _cubic(A, B, C, g0, r)
                    if val < best:
                        best = val
                        best_k = k
                        best_s = r
    return best, best_k, best_s, end_min
