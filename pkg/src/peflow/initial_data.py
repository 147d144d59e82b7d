"""Initial data: discrete probability measures, quantization, and v0.

Continuous initial measures are replaced by equal-mass Dirac combinations
placed at quantile midpoints, ``x_k = F^{-1}((k - 1/2) / N)``. This sequence
converges narrowly together with second moments as ``N`` grows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Mapping

import numpy as np
from scipy import stats

from .errors import ArgumentError, ValidationError

MASS_TOL = 1e-12


@dataclass(frozen=True)
class DiscreteMeasure:
    """Finitely supported probability measure ``sum_i m_i delta_{x_i}``.

    Atoms are sorted and distinct; build through :meth:`from_atoms` to merge
    coincident positions.
    """

    x: np.ndarray
    m: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        m = np.asarray(self.m, dtype=float)
        if x.ndim != 1 or x.shape != m.shape or x.size == 0:
            raise ValidationError("measure needs matching nonempty 1-d position and mass arrays")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(m))):
            raise ValidationError("measure contains non-finite values")
        if np.any(m <= 0):
            raise ValidationError("atom masses must be positive")
        if np.any(np.diff(x) <= 0):
            raise ValidationError("atom positions must be strictly increasing")
        total = math.fsum(m)
        if abs(total - 1.0) > MASS_TOL:
            raise ValidationError(f"masses sum to {total!r}, not 1")
        x.setflags(write=False)
        m.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "m", m)

    @classmethod
    def from_atoms(cls, x, m=None, v=None):
        """Sort atoms and merge coincident ones.

        Returns the measure, or ``(measure, velocities)`` when per-atom
        velocities ``v`` are given; merged atoms receive the mass-weighted
        mean velocity.
        """
        x = np.asarray(x, dtype=float)
        m = np.full(x.shape, 1.0 / x.size) if m is None else np.asarray(m, dtype=float)
        if x.shape != m.shape:
            raise ValidationError("positions and masses differ in length")
        if not np.all(np.isfinite(x)):
            raise ValidationError("atom positions must be finite")
        ux, inv = np.unique(x, return_inverse=True)
        um = np.zeros(ux.size)
        np.add.at(um, inv, m)
        mu = cls(ux, um)
        if v is None:
            return mu
        v = np.asarray(v, dtype=float)
        if v.shape != x.shape:
            raise ValidationError("velocities and positions differ in length")
        mom = np.zeros(ux.size)
        np.add.at(mom, inv, m * v)
        return mu, mom / um

    @property
    def n(self) -> int:
        return self.x.size

    @property
    def second_moment(self) -> float:
        return float(np.dot(self.m, self.x**2))

    @property
    def diameter(self) -> float:
        return float(self.x[-1] - self.x[0])

    def cdf_steps(self):
        """Cumulative masses at each atom (right-continuous CDF values)."""
        return np.cumsum(self.m)

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        idx = np.searchsorted(self.cdf_steps(), u, side="left")
        return self.x[np.clip(idx, 0, self.n - 1)]

    def to_config(self) -> dict:
        return {"kind": "atoms", "x": self.x.tolist(), "m": self.m.tolist()}


# -- continuous measure descriptions -----------------------------------------


@dataclass(frozen=True)
class Uniform:
    a: float
    b: float

    def __post_init__(self):
        if not (self.a < self.b):
            raise ValidationError("uniform(a, b) needs a < b")

    def quantile(self, u):
        return self.a + (self.b - self.a) * np.asarray(u, dtype=float)


@dataclass(frozen=True)
class Gaussian:
    mu: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValidationError("gaussian sigma must be positive")

    def quantile(self, u):
        return stats.norm.ppf(u, loc=self.mu, scale=self.sigma)


@dataclass(frozen=True)
class TabulatedCDF:
    """Piecewise-linear CDF through ``(x_k, F_k)`` with ``F`` from 0 to 1."""

    x: tuple
    f: tuple

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        f = np.asarray(self.f, dtype=float)
        if x.ndim != 1 or x.shape != f.shape or x.size < 2:
            raise ValidationError("tabulated CDF needs matching tables of length >= 2")
        if np.any(np.diff(x) <= 0):
            raise ValidationError("CDF abscissae must be strictly increasing")
        if np.any(np.diff(f) < 0):
            raise ValidationError("CDF values must be nondecreasing")
        if abs(f[0]) > MASS_TOL or abs(f[-1] - 1.0) > MASS_TOL:
            raise ValidationError("CDF must run from 0 to 1")

    def quantile(self, u):
        x = np.asarray(self.x, dtype=float)
        f = np.asarray(self.f, dtype=float)
        # generalized inverse: leftmost x with F(x) >= u
        u = np.asarray(u, dtype=float)
        k = np.clip(np.searchsorted(f, u, side="left"), 1, f.size - 1)
        f0, f1 = f[k - 1], f[k]
        frac = np.where(f1 > f0, (u - f0) / np.where(f1 > f0, f1 - f0, 1.0), 0.0)
        return x[k - 1] + frac * (x[k] - x[k - 1])


def quantize(spec, n: int) -> DiscreteMeasure:
    """Equal-mass quantile-midpoint quantization with ``n`` atoms.

    Discrete measures are returned unchanged.
    """
    if isinstance(spec, DiscreteMeasure):
        return spec
    if n < 1:
        raise ArgumentError("quantization needs n >= 1")
    u = (np.arange(1, n + 1) - 0.5) / n
    x = np.asarray(spec.quantile(u), dtype=float)
    return DiscreteMeasure.from_atoms(x, np.full(n, 1.0 / n))


def measure_spec_from_config(cfg: Mapping[str, Any]):
    """Parse the ``rho0`` config block into ``(spec, n, per-atom v or None)``."""
    kind = cfg.get("kind")
    if kind == "atoms":
        v = cfg.get("v")
        out = DiscreteMeasure.from_atoms(cfg["x"], cfg.get("m"), v)
        if v is None:
            return out, out.n, None
        return out[0], out[0].n, out[1]
    n = int(cfg.get("n", 64))
    if kind == "uniform":
        return Uniform(float(cfg["a"]), float(cfg["b"])), n, None
    if kind == "gaussian":
        return Gaussian(float(cfg["mu"]), float(cfg["sigma"])), n, None
    if kind == "cdf":
        return TabulatedCDF(tuple(cfg["x"]), tuple(cfg["f"])), n, None
    raise ValidationError(f"unknown rho0 kind {kind!r}")


# -- initial velocity --------------------------------------------------------


@dataclass(frozen=True)
class InitialVelocity:
    """Piecewise-linear v0 through ``(breakpoints, values)``.

    Constant beyond the breakpoint range, so absolutely continuous with an
    exactly computable total variation.
    """

    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        b = np.atleast_1d(np.asarray(self.breakpoints, dtype=float))
        v = np.atleast_1d(np.asarray(self.values, dtype=float))
        if b.shape != v.shape or b.size == 0:
            raise ValidationError("v0 needs matching nonempty breakpoints and values")
        if np.any(np.diff(b) <= 0):
            raise ValidationError("v0 breakpoints must be strictly increasing")
        if not (np.all(np.isfinite(b)) and np.all(np.isfinite(v))):
            raise ValidationError("v0 table contains non-finite values")
        b.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, value: float) -> "InitialVelocity":
        return cls(np.array([0.0]), np.array([float(value)]))

    @classmethod
    def linear(cls, slope: float, intercept: float, a: float, b: float) -> "InitialVelocity":
        """``v0(x) = slope x + intercept`` on ``[a, b]``, constant outside."""
        return cls(np.array([a, b]), np.array([slope * a + intercept, slope * b + intercept]))

    @classmethod
    def from_atoms(cls, x, v) -> "InitialVelocity":
        return cls(np.asarray(x, dtype=float), np.asarray(v, dtype=float))

    @classmethod
    def from_config(cls, cfg: Mapping[str, Any]) -> "InitialVelocity":
        if "value" in cfg:
            return cls.constant(float(cfg["value"]))
        return cls(cfg["breakpoints"], cfg["values"])

    def to_config(self) -> dict:
        return {"breakpoints": self.breakpoints.tolist(), "values": self.values.tolist()}

    def __call__(self, x):
        out = np.interp(np.asarray(x, dtype=float), self.breakpoints, self.values)
        return out if out.ndim else float(out)

    def total_variation(self, a: float, b: float) -> float:
        if a > b:
            raise ArgumentError(f"total variation needs a <= b, got ({a}, {b})")
        bp, vals = self.breakpoints, self.values
        if bp.size < 2:
            return 0.0
        slopes = np.abs(np.diff(vals) / np.diff(bp))
        lo = np.clip(bp[:-1], a, b)
        hi = np.clip(bp[1:], a, b)
        return float(np.dot(slopes, hi - lo))

    def cumulative_variation(self, x):
        """``TV(v0; [x_min, x])`` for each ``x``; differences give interval TVs."""
        x = np.asarray(x, dtype=float)
        bp, vals = self.breakpoints, self.values
        if bp.size < 2:
            return np.zeros_like(x)
        knots = np.concatenate([[0.0], np.cumsum(np.abs(np.diff(vals)))])
        return np.interp(x, bp, knots)

    def modulus(self, r: float) -> float:
        """sup of the total variation over windows of length <= r."""
        if r < 0:
            raise ArgumentError("modulus needs r >= 0")
        bp = self.breakpoints
        if bp.size < 2:
            return 0.0
        # a window's TV is piecewise linear in its left end, so the sup sits
        # where an endpoint meets a breakpoint
        starts = np.concatenate([bp, bp - r])
        cv = self.cumulative_variation
        return float(np.max(cv(starts + r) - cv(starts)))


def v0_total_variation(v: InitialVelocity, a: float, b: float) -> float:
    return v.total_variation(a, b)
