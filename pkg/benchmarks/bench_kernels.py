"""Compare the compiled kernel lane against the pure NumPy fallback.

Times the three hot kernels on representative workloads, in-process, by
importing both lane modules directly.  An end-to-end row (filling build
plus one pairwise-solver run) is measured in subprocesses so each lane
goes through the normal import-time dispatch.

Usage: python3 benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import json
import subprocess
import sys
import time

import numpy as np

from hyperfill._kernels import pure

try:
    from hyperfill._kernels import _speedups as compiled
except ImportError:
    compiled = None

_E2E = r"""
import json, time
import numpy as np
import hyperfill as hf
from hyperfill.norms import SmoothnessParams
from hyperfill.hajlasz import hajlasz_norm
from hyperfill.verify import random_tent_functions

t0 = time.perf_counter()
space = hf.unit_cube_space(1, 11)
filling = hf.build_filling(space, 0, 7)
t1 = time.perf_counter()
small = hf.unit_cube_space(1, 6)
f = random_tent_functions(small, 1, np.random.default_rng(0))[0]
res = hajlasz_norm(small, f, SmoothnessParams(1.0, 2.0, kind="hajlasz"))
t2 = time.perf_counter()
print(json.dumps({"backend": hf.BACKEND, "build": t1 - t0,
                  "solve": t2 - t1, "norm": res.norm}))
"""


def _workloads(rng):
    coords = rng.random((4000, 2))
    cand = np.arange(4000, dtype=np.int64)
    n = 600
    ii, jj = np.triu_indices(n, 1)
    ii = ii.astype(np.int64)
    jj = jj.astype(np.int64)
    m = rng.random(ii.shape[0])
    gbar = rng.random(n)
    g = rng.random(n)
    return {
        "greedy_separated_subset": lambda k: k.greedy_separated_subset(
            coords, cand, 0.02, True),
        "pdhg_sweep": lambda k: k.pdhg_sweep(
            np.zeros(ii.shape[0]), ii, jj, m, gbar, 0.5, np.zeros(n)),
        "pair_max_lift": lambda k: k.pair_max_lift(g, ii, jj, m),
    }


def _time(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args(argv)

    if compiled is None:
        print("compiled lane unavailable; build the extension first "
              "(pip install -e . --no-build-isolation)")
        return 1

    rng = np.random.default_rng(42)
    print("%-26s %12s %12s %8s" % ("kernel", "compiled", "pure", "speedup"))
    for name, work in _workloads(rng).items():
        tc = _time(lambda: work(compiled), args.repeats)
        tp = _time(lambda: work(pure), args.repeats)
        print("%-26s %10.3f ms %10.3f ms %7.1fx" % (name, tc * 1e3, tp * 1e3,
                                                    tp / tc))

    rows = {}
    for env_extra in ({}, {"HYPERFILL_PURE": "1"}):
        env = dict(__import__("os").environ, **env_extra)
        out = subprocess.run([sys.executable, "-c", _E2E], env=env,
                             capture_output=True, text=True, check=True)
        row = json.loads(out.stdout)
        rows[row["backend"]] = row
    assert rows["compiled"]["norm"] == rows["pure"]["norm"], \
        "lanes disagree on the solver output"
    for stage in ("build", "solve"):
        tc, tp = rows["compiled"][stage], rows["pure"][stage]
        print("%-26s %10.3f ms %10.3f ms %7.1fx"
              % ("end-to-end " + stage, tc * 1e3, tp * 1e3, tp / tc))
    print("lanes agree bit-for-bit on the end-to-end solve "
          "(norm %.17g)" % rows["pure"]["norm"])
    return 0


if __name__ == "__main__":
    sys.exit(main())
