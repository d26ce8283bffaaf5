#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python fallback.

Runs the same two workloads under each backend in subprocesses (the
backend is fixed at import time by BELLMETER_PURE_PYTHON) and checks
that the numeric results are bit-identical before reporting timings.

Usage: python benchmarks/bench_kernels.py [--lp N] [--trials N]
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys

_WORKER = r"""
import hashlib, json, sys, time
import numpy as np
import bellmeter as bm

lp_n, trials = json.loads(sys.argv[1])

t0 = time.perf_counter()
mus = []
for seed in range(lp_n):
    b = bm.sample_nonsignalling(seed=seed)
    mus.append(bm.local_content_lp(b).mu)
lp_time = time.perf_counter() - t0

alice, bob = bm.tsirelson_settings()
beh = bm.born_behaviour(bm.maximally_entangled(), alice, bob)
model = bm.dilate(beh, bm.SettingsDistribution.uniform(2))
t0 = time.perf_counter()
res = bm.run(model, bm.SimConfig(trials=trials, seed=987654321))
sim_time = time.perf_counter() - t0

digest = hashlib.sha256()
digest.update(np.asarray(mus).tobytes())
digest.update(res.counts.tobytes())
print(json.dumps({
    "backend": bm.BACKEND,
    "lp_time": lp_time,
    "sim_time": sim_time,
    "digest": digest.hexdigest(),
}))
"""


def _run(pure_python: bool, lp_n: int, trials: int) -> dict:
    env = dict(os.environ)
    if pure_python:
        env["BELLMETER_PURE_PYTHON"] = "1"
    else:
        env.pop("BELLMETER_PURE_PYTHON", None)
    out = subprocess.run(
        [sys.executable, "-c", _WORKER, json.dumps([lp_n, trials])],
        capture_output=True,
        text=True,
        env=env,
        check=True,
    )
    return json.loads(out.stdout)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--lp", type=int, default=200, help="number of LP solves")
    parser.add_argument(
        "--trials", type=int, default=1_000_000, help="simulation trials"
    )
    args = parser.parse_args()

    compiled = _run(False, args.lp, args.trials)
    python = _run(True, args.lp, args.trials)

    if compiled["digest"] != python["digest"]:
        print("FAIL: backends disagree", file=sys.stderr)
        return 1
    if compiled["backend"] == python["backend"]:
        print(
            "note: compiled extension unavailable; comparing python to itself",
            file=sys.stderr,
        )

    print(f"results bit-identical (sha256 {compiled['digest'][:16]}...)")
    print(f"{'workload':<28}{'compiled':>12}{'python':>12}{'speedup':>10}")
    for label, key in (
        (f"local_content_lp x{args.lp}", "lp_time"),
        (f"simulate x{args.trials}", "sim_time"),
    ):
        c, p = compiled[key], python[key]
        print(f"{label:<28}{c:>11.3f}s{p:>11.3f}s{p / c:>9.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
