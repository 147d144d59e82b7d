"""Even, semiconvex interaction potentials W and their derivatives.

Four families are supported:

``zero``        W = 0 (classical sticky particles)
``quadratic``   W = a x^2 / 2, a >= 0
``smooth_abs``  W = (x^2 + eps^2)^(1/2), a C^1 convex stand-in for |x|
``custom``      W tabulated on a nonnegative grid, extended evenly

All evaluation routines accept scalars or arrays and are vectorised.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .errors import DomainError, ValidationError

KINDS = ("zero", "quadratic", "smooth_abs", "custom")

# integer codes understood by the compiled kernels
KIND_CODES = {"zero": 0, "quadratic": 1, "smooth_abs": 2, "custom": 3}

SEMICONVEXITY_TOL = 1e-9


def _check_finite(x):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("potential evaluated at a non-finite position")
    return arr


@dataclass(frozen=True)
class Potential:
    """Interaction potential with its semiconvexity constant ``c``.

    Use the constructors :meth:`zero`, :meth:`quadratic`, :meth:`smooth_abs`
    and :meth:`custom` rather than instantiating directly.
    """

    kind: str
    param: float = 0.0
    c: float = 0.0
    growth: float = 0.0
    table: tuple | None = field(default=None, repr=False, compare=False)
    _spline: Any = field(default=None, repr=False, compare=False)

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls) -> "Potential":
        return cls("zero", 0.0, 0.0, 0.0)

    @classmethod
    def quadratic(cls, a: float) -> "Potential":
        if not (math.isfinite(a) and a >= 0):
            raise ValidationError(f"quadratic curvature must be >= 0, got {a}")
        return cls("quadratic", float(a), 0.0, float(a))

    @classmethod
    def smooth_abs(cls, epsilon: float) -> "Potential":
        if not (math.isfinite(epsilon) and epsilon > 0):
            raise DomainError(f"smooth_abs requires epsilon > 0, got {epsilon}")
        return cls("smooth_abs", float(epsilon), 0.0, 1.0)

    @classmethod
    def custom(cls, x, w, w_prime, c: float, tol: float = SEMICONVEXITY_TOL) -> "Potential":
        """Tabulated potential on a grid ``0 = x_0 < x_1 < ...``.

        W is extended to negative arguments by evenness and beyond the last
        node with constant slope. ``c`` is validated against the second
        differences of ``W + c x^2 / 2`` on the mirrored grid.
        """
        x = np.asarray(x, dtype=float)
        w = np.asarray(w, dtype=float)
        wp = np.asarray(w_prime, dtype=float)
        if x.ndim != 1 or x.size < 2 or w.shape != x.shape or wp.shape != x.shape:
            raise ValidationError("custom potential needs matching 1-d tables of length >= 2")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(w)) and np.all(np.isfinite(wp))):
            raise ValidationError("custom potential table contains non-finite values")
        if x[0] != 0.0 or np.any(np.diff(x) <= 0):
            raise ValidationError("custom grid must start at 0 and be strictly increasing")
        if wp[0] != 0.0:
            raise ValidationError("an even C^1 potential has W'(0) = 0")
        if not (math.isfinite(c) and c >= 0):
            raise ValidationError(f"semiconvexity constant must be >= 0, got {c}")

        xs = np.concatenate([-x[:0:-1], x])
        ws = np.concatenate([w[:0:-1], w]) + 0.5 * c * xs**2
        d2 = _second_differences(xs, ws)
        scale = max(1.0, float(np.max(np.abs(ws))))
        if d2.size and d2.min() < -tol * scale:
            raise ValidationError(
                f"W + (c/2) x^2 is not convex on the table (min second difference {d2.min():.3e})"
            )
        growth = float(np.max(np.abs(wp) / (1.0 + np.abs(x))))
        spline = CubicHermiteSpline(x, w, wp)
        return cls("custom", 0.0, float(c), growth, (x, w, wp), spline)

    @classmethod
    def from_config(cls, cfg: Mapping[str, Any]) -> "Potential":
        kind = cfg.get("kind")
        if kind == "zero":
            return cls.zero()
        if kind == "quadratic":
            return cls.quadratic(float(cfg["a"]))
        if kind == "smooth_abs":
            return cls.smooth_abs(float(cfg["epsilon"]))
        if kind == "custom":
            return cls.custom(cfg["x"], cfg["w"], cfg["w_prime"], float(cfg.get("c", 0.0)))
        raise ValidationError(f"unknown potential kind {kind!r}")

    def to_config(self) -> dict:
        if self.kind == "zero":
            return {"kind": "zero"}
        if self.kind == "quadratic":
            return {"kind": "quadratic", "a": self.param}
        if self.kind == "smooth_abs":
            return {"kind": "smooth_abs", "epsilon": self.param}
        x, w, wp = self.table
        return {"kind": "custom", "x": x.tolist(), "w": w.tolist(), "w_prime": wp.tolist(), "c": self.c}

    # -- evaluation ---------------------------------------------------------

    @property
    def code(self) -> int:
        return KIND_CODES[self.kind]

    def w(self, x):
        """W(x)."""
        x = _check_finite(x)
        if self.kind == "zero":
            out = np.zeros_like(x)
        elif self.kind == "quadratic":
            out = 0.5 * self.param * x * x
        elif self.kind == "smooth_abs":
            out = np.hypot(x, self.param)
        else:
            out = self._custom_w(np.abs(x))
        return out if out.ndim else float(out)

    def w_prime(self, x):
        """W'(x); odd in x."""
        x = _check_finite(x)
        if self.kind == "zero":
            out = np.zeros_like(x)
        elif self.kind == "quadratic":
            out = self.param * x
        elif self.kind == "smooth_abs":
            out = x / np.hypot(x, self.param)
        else:
            out = np.sign(x) * self._custom_wp(np.abs(x))
        return out if out.ndim else float(out)

    def _custom_w(self, ax):
        x, w, wp = self.table
        inside = ax <= x[-1]
        out = np.empty_like(ax)
        out[inside] = self._spline(ax[inside])
        out[~inside] = w[-1] + wp[-1] * (ax[~inside] - x[-1])
        return out

    def _custom_wp(self, ax):
        x, _, wp = self.table
        inside = ax <= x[-1]
        out = np.empty_like(ax)
        out[inside] = self._spline.derivative()(ax[inside])
        out[~inside] = wp[-1]
        return out

    def semiconvexity_constant(self) -> float:
        return self.c


def _second_differences(x, y):
    """Divided second differences of samples on a nonuniform grid."""
    h0 = np.diff(x)[:-1]
    h1 = np.diff(x)[1:]
    s0 = np.diff(y)[:-1] / h0
    s1 = np.diff(y)[1:] / h1
    return 2.0 * (s1 - s0) / (h0 + h1)


def eval_w(p: Potential, x):
    return p.w(x)


def eval_w_prime(p: Potential, x):
    return p.w_prime(x)


def semiconvexity_constant(p: Potential) -> float:
    return p.semiconvexity_constant()


def sigma(t, c: float):
    """sinh(sqrt(c) t) / sqrt(c), continuous at c = 0 where it equals t."""
    t = np.asarray(t, dtype=float)
    if c == 0.0:
        return t
    rc = math.sqrt(c)
    return np.sinh(rc * t) / rc


def cosh_c(t, c: float):
    t = np.asarray(t, dtype=float)
    if c == 0.0:
        return np.ones_like(t)
    return np.cosh(math.sqrt(c) * t)


def oleinik_rate(t, c: float):
    """sqrt(c) / tanh(sqrt(c) t), or 1/t when c = 0."""
    t = np.asarray(t, dtype=float)
    if c == 0.0:
        return 1.0 / t
    rc = math.sqrt(c)
    return rc / np.tanh(rc * t)
