"""``peflow`` command-line interface.

Subcommands
-----------
simulate   run the sticky-particle solver and export CSV files
ep         same, with the exact Euler-Poisson solver (W = |x|)
verify     run diagnostics on a fresh run or on exported files
converge   quantization (``--mode n``) or smoothing (``--mode eps``) study

Exit codes: 0 success, 1 a check or study failed, 2 invalid input,
3 the solver gave up.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import io
from .config import RunConfig
from .diagnostics import ALL_CHECKS, energy, run_checks, wasserstein2
from .dynamics import simulate
from .errors import ArgumentError, IntegrationError, PeflowError, TruncationError
from .euler_poisson import epsilon_continuation, simulate_ep
from .initial_data import quantize
from .trajectory import TrajectoryMap

log = logging.getLogger("peflow")

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_SOLVER = 0, 1, 2, 3


# -- helpers -----------------------------------------------------------------


def run_config(cfg: RunConfig, exact_ep: bool | None = None, n: int | None = None) -> TrajectoryMap:
    """Simulate the configured problem, tagging the result with the config hash."""
    spec, n_default, v0 = cfg.build()
    rho0 = quantize(spec, n or n_default)
    if exact_ep is None:
        exact_ep = cfg.data["mode"] == "ep"
    if exact_ep:
        tm = simulate_ep(rho0, v0, cfg.horizon, cfg.solver_options())
    else:
        tm = simulate(rho0, v0, cfg.potential(), cfg.horizon, cfg.solver_options())
    tm.config_hash = cfg.hash
    return tm


def export(tm: TrajectoryMap, cfg: RunConfig, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    io.write_trajectory_csv(tm, out / "trajectory.csv")
    io.write_events_csv(tm, out / "events.csv")
    persisted = dict(cfg.data, config_hash=cfg.hash, resolved_solver=tm.opts)
    io.write_json(persisted, out / "config.json")


def summary(tm: TrajectoryMap) -> str:
    grid = [s.time for s in tm.snapshots if s.kind == "grid"]
    picks = sorted({grid[i] for i in np.linspace(0, len(grid) - 1, min(len(grid), 11)).round().astype(int)})
    lines = [f"atoms: {tm.n_atoms}  horizon: {tm.horizon:g}  merges: {len(tm.events)}"]
    lines.append("clusters over time:")
    lines.extend(f"  t={t:<10.6g} {tm.cluster_count(t)}" for t in picks)
    kin, pot, tot = energy(tm, tm.horizon)
    lines.append(f"final energy: {tot:.12g} (kinetic {kin:.12g}, interaction {pot:.12g})")
    return "\n".join(lines)


def parse_checks(text: str) -> list:
    names = [c.strip() for c in text.split(",") if c.strip()]
    bad = [c for c in names if c not in ALL_CHECKS]
    if bad:
        raise ArgumentError(f"unknown check(s) {', '.join(bad)}; choose from {', '.join(ALL_CHECKS)}")
    return names


def resolve_jobs(jobs: int | None) -> int:
    if jobs is not None:
        return max(1, jobs)
    env = os.environ.get("PEFLOW_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ArgumentError(f"PEFLOW_JOBS must be an integer, got {env!r}") from None
    return 1


def _quantized_run(args):
    cfg_data, n = args
    return run_config(RunConfig.from_dict(cfg_data), n=n)


def quantization_study(cfg: RunConfig, schedule, reference_n: int, jobs: int = 1, slack: float = 1e-12) -> dict:
    """W2 distance between N-atom quantized runs and a fine reference run.

    The study passes when, at every output time, the distance does not
    increase along the schedule (up to ``slack``).
    """
    schedule = [int(n) for n in schedule]
    if not schedule or any(n < 1 for n in schedule):
        raise ArgumentError("schedule needs positive atom counts")
    args = [(cfg.data, n) for n in [reference_n, *schedule]]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            runs = list(pool.map(_quantized_run, args))
    else:
        runs = [_quantized_run(a) for a in args]
    ref, runs = runs[0], runs[1:]
    times = [float(t) for t in ref.opts["output_times"]]
    w2 = np.array([[wasserstein2(tm.push_forward(t), ref.push_forward(t)) for t in times] for tm in runs])
    per_time = np.all(w2[1:] <= w2[:-1] + slack, axis=0) if len(runs) > 1 else np.ones(len(times), bool)
    return {
        "mode": "n",
        "config_hash": cfg.hash,
        "schedule": schedule,
        "reference_n": reference_n,
        "times": times,
        "w2": w2.tolist(),
        "final": w2[:, -1].tolist(),
        "monotone_per_time": per_time.tolist(),
        "slack": slack,
        "pass": bool(per_time.all()),
    }


def smoothing_study(cfg: RunConfig, exponents=None, jobs: int = 1) -> dict:
    spec, n_default, v0 = cfg.build()
    conv = cfg.data["converge"]
    eps = None
    if exponents:
        eps = [2.0 ** -int(k) for k in exponents]
    elif "eps" in conv:
        eps = conv["eps"]
    rep = epsilon_continuation(quantize(spec, n_default), v0, cfg.horizon, eps=eps, K=conv["K"],
                               opts=cfg.solver_options(), tol=conv["tol"], slack=conv["slack"], jobs=jobs)
    return dict(rep.to_dict(), mode="eps", config_hash=cfg.hash)


# -- subcommands ---------------------------------------------------------------


def cmd_simulate(ns, exact_ep=None) -> int:
    cfg = RunConfig.load(ns.config)
    tm = run_config(cfg, exact_ep=exact_ep)
    out = Path(ns.out or cfg.data.get("output_dir", "out"))
    export(tm, cfg, out)
    print(summary(tm))
    print(f"wrote {out / 'trajectory.csv'}, {out / 'events.csv'}, {out / 'config.json'}")
    return EXIT_OK


def cmd_ep(ns) -> int:
    return cmd_simulate(ns, exact_ep=True)


def cmd_verify(ns) -> int:
    cfg = RunConfig.load(ns.config)
    checks = parse_checks(ns.checks)
    if ns.trajectory:
        d = Path(ns.trajectory)
        tm = io.read_trajectory_csv(d / "trajectory.csv", d / "events.csv")
        if tm.config_hash != cfg.hash:
            raise ArgumentError(f"trajectory in {d} was produced by config {tm.config_hash}, "
                                f"not {cfg.hash}; refusing to verify a mismatched pair")
    else:
        tm = run_config(cfg)
    report = run_checks(tm, checks)
    text = report.to_json()
    if ns.out:
        out = Path(ns.out)
        if out.suffix != ".json":
            out.mkdir(parents=True, exist_ok=True)
            out = out / "report.json"
        out.write_text(text + "\n")
    print(text)
    for rec in report.checks:
        log.info("%s: %s (worst slack %.3g, tol %.3g)", rec.name, "pass" if rec.passed else "FAIL",
                 rec.worst_slack, rec.tol)
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_converge(ns) -> int:
    cfg = RunConfig.load(ns.config)
    jobs = resolve_jobs(ns.jobs)
    conv = cfg.data["converge"]
    schedule = [s for s in (ns.schedule or "").split(",") if s.strip()]
    if ns.mode == "n":
        ref_n = ns.reference_n or conv["reference_n"]
        report = quantization_study(cfg, schedule or conv["schedule"], ref_n, jobs,
                                    slack=ns.slack if ns.slack is not None else 1e-12)
    else:
        report = smoothing_study(cfg, schedule or None, jobs)
    if ns.out:
        out = Path(ns.out)
        out.mkdir(parents=True, exist_ok=True)
        io.write_json(report, out / f"converge_{ns.mode}.json")
    print(json.dumps(report, indent=2, sort_keys=True))
    return EXIT_OK if report["pass"] else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="peflow", description="Sticky-particle pressureless Euler flows in 1D.")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("-c", "--config", required=True, help="run configuration (JSON)")
        p.add_argument("-o", "--out", help="output directory")

    p = sub.add_parser("simulate", help="run the solver and export CSV")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("ep", help="exact Euler-Poisson run (W = |x|)")
    common(p)
    p.set_defaults(func=cmd_ep)

    p = sub.add_parser("verify", help="run diagnostics")
    common(p)
    p.add_argument("--checks", default=",".join(ALL_CHECKS),
                   help=f"comma-separated subset of {','.join(ALL_CHECKS)}")
    p.add_argument("--trajectory", help="directory with trajectory.csv/events.csv to verify instead of re-running")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("converge", help="quantization or smoothing study")
    common(p)
    p.add_argument("--mode", choices=("n", "eps"), required=True)
    p.add_argument("--schedule", help="atom counts (mode n) or exponents k with eps = 2^-k (mode eps)")
    p.add_argument("--reference-n", type=int, dest="reference_n")
    p.add_argument("--slack", type=float, help="monotonicity slack for mode n")
    p.add_argument("--jobs", type=int, help="worker processes (default: $PEFLOW_JOBS or 1)")
    p.set_defaults(func=cmd_converge)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    ns = ap.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(ns.verbose, 2), format="%(levelname)s %(message)s")
    try:
        return ns.func(ns)
    except (ValueError, PeflowError) as exc:
        if isinstance(exc, (TruncationError, IntegrationError)):
            print(f"peflow: solver failure: {exc}", file=sys.stderr)
            return EXIT_SOLVER
        print(f"peflow: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"peflow: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
