"""Compare the compiled and pure-numpy kernel backends.

Runs the same seeded refinement workload in two subprocesses, one per
DDSCHUR_BACKEND value, then checks that the residual histories agree bit
for bit and prints a wall-time table.  Backend selection happens at
import time, so each run needs a fresh interpreter.

Usage: python3 benchmarks/compare_backends.py [--sizes 50,100,200] [--seed 0]
"""

import argparse
import json
import os
import subprocess
import sys

CHILD = r"""
import json, sys, time
import numpy as np
from ddschur import BACKEND
from ddschur.generators import gen_randn
from ddschur.refine import RefineConfig, refine_mixed

sizes = json.loads(sys.argv[1])
seed = int(sys.argv[2])
rows = []
# warm-up run so jit compilation never lands inside a timed row
refine_mixed(gen_randn(8, seed=seed), RefineConfig(seed=seed))
for n in sizes:
    a = gen_randn(n, seed=seed)
    t0 = time.perf_counter()
    pair, report = refine_mixed(a, RefineConfig(seed=seed))
    wall = time.perf_counter() - t0
    rows.append({
        "n": n,
        "wall": wall,
        "iterations": report.iterations,
        "status": report.status.value,
        "history": [[h.hex(), o.hex()] for h, o in report.residual_history],
    })
print(json.dumps({"backend": BACKEND, "rows": rows}))
"""


def run_backend(backend, sizes, seed):
    env = dict(os.environ, DDSCHUR_BACKEND=backend)
    out = subprocess.run(
        [sys.executable, "-c", CHILD, json.dumps(sizes), str(seed)],
        env=env, capture_output=True, text=True, check=True)
    data = json.loads(out.stdout.splitlines()[-1])
    if data["backend"] != backend:
        raise RuntimeError("backend %r not active (got %r); is numba "
                           "missing?" % (backend, data["backend"]))
    return data["rows"]


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="50,100,200")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    sizes = [int(tok) for tok in args.sizes.split(",")]

    results = {b: run_backend(b, sizes, args.seed)
               for b in ("numba", "numpy")}

    mismatches = 0
    print("%6s  %12s  %12s  %8s  %s"
          % ("n", "numba_s", "numpy_s", "speedup", "bit-identical"))
    for fast, slow in zip(results["numba"], results["numpy"]):
        same = (fast["history"] == slow["history"]
                and fast["status"] == slow["status"])
        mismatches += not same
        print("%6d  %12.4f  %12.4f  %8.1fx  %s"
              % (fast["n"], fast["wall"], slow["wall"],
                 slow["wall"] / fast["wall"], "yes" if same else "NO"))
    if mismatches:
        print("FAIL: %d size(s) disagree across backends" % mismatches)
        return 1
    print("OK: residual histories identical across backends")
    return 0


if __name__ == "__main__":
    sys.exit(main())
