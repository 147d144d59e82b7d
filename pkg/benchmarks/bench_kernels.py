"""Compare the compiled and NumPy kernel backends.

Times the force evaluation, one RK4 step and the Hermite gap scan for a
range of cluster counts, then a full SmoothAbs run under each backend (the
full run executes in a subprocess so the backend switch takes effect).

    python benchmarks/bench_kernels.py [--sizes 16,64,256] [--repeat 50]
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from peflow import _kernels_py, kernels

FULL_RUN = """
import time, numpy as np
from peflow import DiscreteMeasure, Potential, SolverOptions, simulate, BACKEND
rng = np.random.default_rng(7)
x = np.sort(rng.uniform(-1, 1, {n}))
m = rng.dirichlet(np.ones({n}))
v = rng.uniform(-1, 1, {n})
t0 = time.perf_counter()
tm = simulate(DiscreteMeasure(x, m), v, Potential.smooth_abs(0.3), 3.0, SolverOptions())
print(BACKEND, time.perf_counter() - t0, len(tm.events))
"""


def micro(n: int, repeat: int, compiled) -> dict:
    rng = np.random.default_rng(n)
    pos = np.sort(rng.uniform(-1, 1, n))
    vel = rng.uniform(-1, 1, n)
    mass = rng.dirichlet(np.ones(n))
    pos1, vel1 = pos + 1e-3 * vel, vel.copy()
    out = {}
    for name, mod in (("python", _kernels_py), ("cython", compiled)):
        if mod is None:
            continue
        cases = {
            "accelerations": lambda: mod.accelerations(2, 0.3, pos, mass),
            "rk4_step": lambda: mod.rk4_step(2, 0.3, pos, vel, mass, 1e-3),
            "hermite_gap_min": lambda: mod.hermite_gap_min(pos, vel, pos1, vel1, 1e-3),
        }
        out[name] = {k: min(timeit.repeat(f, number=repeat, repeat=3)) / repeat for k, f in cases.items()}
    return out


def full_run(n: int, pure: bool) -> tuple:
    env = dict(os.environ)
    if pure:
        env["PEFLOW_PURE_PYTHON"] = "1"
    res = subprocess.run([sys.executable, "-c", FULL_RUN.format(n=n)], env=env,
                         capture_output=True, text=True, check=True)
    backend, secs, merges = res.stdout.split()
    return backend, float(secs), int(merges)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="16,64,256")
    ap.add_argument("--repeat", type=int, default=50)
    ap.add_argument("--full-n", type=int, default=32)
    ap.add_argument("--json", action="store_true", help="print raw numbers as JSON")
    ns = ap.parse_args(argv)

    compiled = kernels._compiled
    if compiled is None:
        print("compiled backend unavailable; timing the NumPy fallback only", file=sys.stderr)
    sizes = [int(s) for s in ns.sizes.split(",")]
    results = {"micro": {n: micro(n, ns.repeat, compiled) for n in sizes}, "full": {}}
    for pure in (True, False) if compiled is not None else (True,):
        backend, secs, merges = full_run(ns.full_n, pure)
        results["full"][backend] = {"seconds": secs, "merges": merges}

    if ns.json:
        print(json.dumps(results, indent=2, sort_keys=True))
        return
    print(f"{'N':>5} {'kernel':<16} {'python [us]':>12} {'cython [us]':>12} {'speedup':>8}")
    for n, res in results["micro"].items():
        for k in res["python"]:
            py = res["python"][k] * 1e6
            cy = res.get("cython", {}).get(k)
            if cy is None:
                print(f"{n:>5} {k:<16} {py:>12.2f} {'-':>12} {'-':>8}")
            else:
                print(f"{n:>5} {k:<16} {py:>12.2f} {cy * 1e6:>12.2f} {py / (cy * 1e6):>8.1f}")
    print(f"\nfull SmoothAbs run, N={ns.full_n}, T=3:")
    for backend, r in results["full"].items():
        print(f"  {backend:<7} {r['seconds']:.3f} s  ({r['merges']} merges)")


if __name__ == "__main__":
    main()
