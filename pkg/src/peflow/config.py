"""Run configuration: JSON schema, default materialisation and hashing."""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
import jsonschema

from .dynamics import SolverOptions
from .errors import ValidationError
from .initial_data import InitialVelocity, measure_spec_from_config
from .potential import Potential

_num = {"type": "number"}
_nums = {"type": "array", "items": _num}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["rho0", "T"],
    "properties": {
        "rho0": {
            "oneOf": [
                {"type": "object", "additionalProperties": False, "required": ["kind", "x"],
                 "properties": {"kind": {"const": "atoms"}, "x": _nums, "m": _nums, "v": _nums}},
                {"type": "object", "additionalProperties": False, "required": ["kind", "a", "b"],
                 "properties": {"kind": {"const": "uniform"}, "a": _num, "b": _num,
                                "n": {"type": "integer", "minimum": 1}}},
                {"type": "object", "additionalProperties": False, "required": ["kind", "mu", "sigma"],
                 "properties": {"kind": {"const": "gaussian"}, "mu": _num, "sigma": _num,
                                "n": {"type": "integer", "minimum": 1}}},
                {"type": "object", "additionalProperties": False, "required": ["kind", "x", "f"],
                 "properties": {"kind": {"const": "cdf"}, "x": _nums, "f": _nums,
                                "n": {"type": "integer", "minimum": 1}}},
            ]
        },
        "v0": {
            "oneOf": [
                {"type": "object", "additionalProperties": False, "required": ["breakpoints", "values"],
                 "properties": {"breakpoints": _nums, "values": _nums}},
                {"type": "object", "additionalProperties": False, "required": ["value"],
                 "properties": {"value": _num}},
            ]
        },
        "potential": {
            "oneOf": [
                {"type": "object", "additionalProperties": False, "required": ["kind"],
                 "properties": {"kind": {"const": "zero"}}},
                {"type": "object", "additionalProperties": False, "required": ["kind", "a"],
                 "properties": {"kind": {"const": "quadratic"}, "a": _num}},
                {"type": "object", "additionalProperties": False, "required": ["kind", "epsilon"],
                 "properties": {"kind": {"const": "smooth_abs"}, "epsilon": _num}},
                {"type": "object", "additionalProperties": False,
                 "required": ["kind", "x", "w", "w_prime", "c"],
                 "properties": {"kind": {"const": "custom"}, "x": _nums, "w": _nums,
                                "w_prime": _nums, "c": _num}},
            ]
        },
        "T": {"type": "number", "exclusiveMinimum": 0},
        "mode": {"enum": ["simulate", "verify", "converge-n", "converge-eps", "ep"]},
        "output_dir": {"type": "string"},
        "solver": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "dt_init": {"type": "number", "exclusiveMinimum": 0},
                "gap_tol": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "t_tol": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "output_times": {"type": ["array", "null"], "items": _num},
                "max_steps": {"type": "number", "minimum": 1},
            },
        },
        "converge": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "schedule": {"type": "array", "items": {"type": "integer", "minimum": 1}},
                "reference_n": {"type": "integer", "minimum": 1},
                "K": {"type": "integer", "minimum": 0},
                "eps": _nums,
                "tol": _num,
                "slack": _num,
            },
        },
    },
}

DEFAULTS = {
    "v0": {"value": 0.0},
    "potential": {"kind": "zero"},
    "mode": "simulate",
    "solver": {"dt_init": 1e-3, "gap_tol": None, "t_tol": None, "output_times": None,
               "max_steps": 10_000_000},
    "converge": {"schedule": [4, 8, 16, 32], "reference_n": 256, "K": 10,
                 "tol": 1e-3, "slack": 1e-6},
}


PERSISTED_KEYS = ("config_hash", "resolved_solver")


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration with every default filled in."""

    data: dict

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        # a persisted copy carries bookkeeping keys; drop them so it reloads
        raw = {k: v for k, v in raw.items() if k not in PERSISTED_KEYS}
        try:
            jsonschema.validate(raw, SCHEMA)
        except jsonschema.ValidationError as exc:
            raise ValidationError(f"config: {exc.message}") from exc
        data = copy.deepcopy(raw)
        for key, default in DEFAULTS.items():
            if isinstance(default, dict) and key not in ("v0", "potential"):
                merged = copy.deepcopy(default)
                merged.update(data.get(key, {}))
                data[key] = merged
            else:
                data.setdefault(key, copy.deepcopy(default))
        cfg = cls(data)
        # surface semantic errors (mass sums, CDF shape, epsilon <= 0, ...) now
        cfg.build()
        cfg.potential()
        cfg.solver_options()
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(raw)

    @property
    def hash(self) -> str:
        return hashlib.sha256(canonical_json(self.data).encode()).hexdigest()[:16]

    @property
    def horizon(self) -> float:
        return float(self.data["T"])

    def solver_options(self) -> SolverOptions:
        return SolverOptions.from_config(self.data["solver"])

    def potential(self) -> Potential:
        return Potential.from_config(self.data["potential"])

    def build(self, n: int | None = None):
        """(rho0 spec, default atom count, InitialVelocity or None for per-atom v)."""
        spec, n_default, v_atoms = measure_spec_from_config(self.data["rho0"])
        if v_atoms is not None:
            v0 = InitialVelocity.from_atoms(spec.x, v_atoms) if spec.n > 1 else InitialVelocity.constant(v_atoms[0])
        else:
            v0 = InitialVelocity.from_config(self.data["v0"])
        return spec, n_default, v0

    def to_json(self) -> str:
        return json.dumps(self.data, indent=2, sort_keys=True)
