"""CSV and JSON export of trajectories, and the matching loader.

Each CSV starts with one ``#`` comment line holding a JSON header (config
hash, interaction, atoms, initial velocity, solver options), followed by a
tidy table. Floats are written with 17 significant digits so a file read
back reproduces the run bit for bit.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .initial_data import InitialVelocity
from .potential import Potential
from .trajectory import MergeEvent, Snapshot, TrajectoryMap

TRAJECTORY_COLUMNS = ("t", "cluster_id", "mass", "position", "velocity", "members",
                      "node", "kind", "acceleration", "free_momentum")
EVENT_COLUMNS = ("t", "participants", "v_pre", "v_post", "result_id", "masses",
                 "position", "gap_residual")


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def _join(values, f=str) -> str:
    return ";".join(f(v) for v in values)


def _split(text: str, f=float) -> list:
    return [f(s) for s in text.split(";")] if text else []


def _interaction_config(tm: TrajectoryMap) -> dict:
    return tm.interaction.to_config()


def header(tm: TrajectoryMap) -> dict:
    return {
        "config_hash": tm.config_hash,
        "interaction": _interaction_config(tm),
        "horizon": tm.horizon,
        "atoms": {"x": tm.x0.tolist(), "m": tm.m.tolist(), "v": tm.v_atoms.tolist()},
        "v0": tm.v0.to_config(),
        "solver": tm.opts,
    }


def _write_with_header(path: Path, meta: dict, columns, rows):
    with open(path, "w", newline="") as fh:
        fh.write("# " + json.dumps(meta, sort_keys=True, separators=(",", ":")) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        w.writerows(rows)


def write_trajectory_csv(tm: TrajectoryMap, path) -> None:
    rows = []
    for node, s in enumerate(tm.snapshots):
        bounds = np.append(s.starts, tm.n_atoms)
        free_mom = (np.add.reduceat(tm.m * s.free_vel, s.starts) if s.free_vel is not None
                    else np.full(s.n_clusters, np.nan))
        for k in range(s.n_clusters):
            members = range(int(bounds[k]), int(bounds[k + 1]))
            rows.append((fmt(s.time), int(s.starts[k]), fmt(s.mass[k]), fmt(s.pos[k]),
                         fmt(s.vel[k]), _join(members), node, s.kind, fmt(s.acc[k]),
                         fmt(free_mom[k])))
    _write_with_header(Path(path), header(tm), TRAJECTORY_COLUMNS, rows)


def write_events_csv(tm: TrajectoryMap, path) -> None:
    rows = [(fmt(e.time), _join(e.participants), _join(e.v_pre, fmt), fmt(e.v_post),
             e.result_id, _join(e.masses, fmt), fmt(e.position), fmt(e.gap_residual))
            for e in tm.events]
    _write_with_header(Path(path), {"config_hash": tm.config_hash}, EVENT_COLUMNS, rows)


def _read_with_header(path: Path, columns):
    try:
        with open(path, newline="") as fh:
            first = fh.readline()
            if not first.startswith("# "):
                raise ValidationError(f"{path}: missing header line")
            meta = json.loads(first[2:])
            reader = csv.DictReader(fh)
            if tuple(reader.fieldnames or ()) != tuple(columns):
                raise ValidationError(f"{path}: unexpected columns {reader.fieldnames}")
            return meta, list(reader)
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc


def _interaction_from_config(cfg: dict):
    if cfg.get("kind") == "abs":
        from .euler_poisson import ABS
        return ABS
    return Potential.from_config(cfg)


def read_trajectory_csv(path, events_path=None) -> TrajectoryMap:
    """Rebuild a :class:`TrajectoryMap` from exported CSV files.

    Only the per-cluster free momentum ``sum_i m_i u_i`` is exported, so each
    atom of a loaded cluster gets the cluster's mass-averaged free velocity.
    That is all the flow-equation residual needs. A file without it
    (all ``nan``) falls back to trapezoid quadrature over the stored nodes.
    """
    meta, rows = _read_with_header(Path(path), TRAJECTORY_COLUMNS)
    try:
        atoms = meta["atoms"]
        by_node: dict[int, list] = {}
        for r in rows:
            by_node.setdefault(int(r["node"]), []).append(r)
        snaps = []
        for node in sorted(by_node):
            rs = by_node[node]
            col = lambda key: np.array([float(r[key]) for r in rs])
            starts = np.array([int(r["cluster_id"]) for r in rs], dtype=np.int64)
            mass, free_mom = col("mass"), col("free_momentum")
            free = None
            if np.all(np.isfinite(free_mom)):
                counts = np.diff(np.append(starts, len(atoms["x"])))
                free = np.repeat(free_mom / mass, counts)
            snaps.append(Snapshot(float(rs[0]["t"]), rs[0]["kind"], starts, mass,
                                  col("position"), col("velocity"), col("acceleration"), free))
        events = []
        if events_path is not None:
            ev_meta, ev_rows = _read_with_header(Path(events_path), EVENT_COLUMNS)
            if ev_meta.get("config_hash") != meta.get("config_hash"):
                raise ValidationError("events and trajectory files come from different configs")
            for r in ev_rows:
                events.append(MergeEvent(
                    float(r["t"]), tuple(_split(r["participants"], int)), int(r["result_id"]),
                    tuple(_split(r["masses"])), tuple(_split(r["v_pre"])), float(r["v_post"]),
                    float(r["position"]), float(r["gap_residual"]),
                ))
        return TrajectoryMap(
            x0=np.array(atoms["x"], dtype=float), m=np.array(atoms["m"], dtype=float),
            v_atoms=np.array(atoms["v"], dtype=float),
            v0=InitialVelocity.from_config(meta["v0"]),
            interaction=_interaction_from_config(meta["interaction"]),
            horizon=float(meta["horizon"]), snapshots=snaps, events=events,
            opts=meta.get("solver", {}), config_hash=meta.get("config_hash"),
        )
    except (KeyError, ValueError, TypeError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"malformed trajectory file {path}: {exc}") from exc


def write_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
