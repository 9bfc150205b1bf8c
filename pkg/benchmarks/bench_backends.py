"""Compare the numba kernels against the interpreted fallback.

Each backend runs in its own subprocess because the switch is read at
import time. Both must produce identical labels for the same seeds.

    python3 benchmarks/bench_backends.py --n 2000 --repeats 3
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
import labelprop as lp

n, repeats = int(sys.argv[1]), int(sys.argv[2])
g, _ = lp.planted_partition(n=n, q=n // 50, avg_degree=16, mu=0.2, seed=1)
lp.run(g, cfg=lp.RunConfig(seed=0))  # warm-up, includes compilation
out = {"backend": lp.backend_name(), "times": {}, "digest": []}
cases = {
    "async": lp.RunConfig(seed=0),
    "semisync": lp.RunConfig(schedule="semisync", seed=0),
    "modularity": lp.RunConfig(seed=0),
}
for name, cfg in cases.items():
    rule = lp.Rule("modularity") if name == "modularity" else lp.Rule()
    best = float("inf")
    for _ in range(repeats):
        t = time.perf_counter()
        res = lp.run(g, rule, cfg)
        best = min(best, time.perf_counter() - t)
    out["times"][name] = best
    out["digest"].append(int(np.asarray(res.labels, np.int64).sum() * 31 + res.iterations))
t = time.perf_counter()
cover = lp.memory_lpa(g, T=10, seed=0)
out["times"]["memory"] = time.perf_counter() - t
out["digest"].append(len(cover.groups()))
print(json.dumps(out))
"""


def run_backend(disable, n, repeats):
    env = dict(os.environ)
    if disable:
        env["LABELPROP_DISABLE_JIT"] = "1"
    else:
        env.pop("LABELPROP_DISABLE_JIT", None)
    proc = subprocess.run([sys.executable, "-c", WORKER, str(n), str(repeats)], env=env, capture_output=True,
                          text=True, check=True)
    return json.loads(proc.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()

    jit = run_backend(False, args.n, args.repeats)
    ref = run_backend(True, args.n, args.repeats)
    print(f"n={args.n}  best of {args.repeats}")
    print(f"{'case':<12}{jit['backend']:>12}{ref['backend']:>12}{'speedup':>10}")
    for case in jit["times"]:
        a, b = jit["times"][case], ref["times"][case]
        print(f"{case:<12}{a:>11.4f}s{b:>11.4f}s{b / a:>9.1f}x")
    same = jit["digest"] == ref["digest"]
    print("identical results" if same else "RESULTS DIFFER")
    return 0 if same else 1


if __name__ == "__main__":
    sys.exit(main())
