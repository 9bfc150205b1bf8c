import json
import os
import subprocess
import sys

import numpy as np
import pytest

from labelprop import _sweep_kernels as K
from labelprop._accel import JIT_ENABLED, backend_name, py_func
from labelprop.engine import _scratch, compile_rule
from labelprop.generators import planted_partition
from labelprop.rules import Rule

WORKER = r"""
import json
import numpy as np
import labelprop as lp

g, _ = lp.planted_partition(n=256, q=8, avg_degree=10, mu=0.3, seed=4)
runs = {}
cases = [("standard", "async"), ("cpm", "semisync"), ("modularity", "async"), ("offensive", "async"),
         ("balanced", "sync"), ("tau", "async"), ("eigenvector", "async")]
for kind, schedule in cases:
    rule = lp.Rule(kind, lambda1=0.05, tau=0.5)
    res = lp.run(g, rule, lp.RunConfig(schedule=schedule, seed=9, max_iters=30))
    runs[f"{kind}-{schedule}"] = [res.labels.tolist(), res.relabel_counts]
res = lp.run(g, cfg=lp.RunConfig(schedule="sync", probabilistic_sync=True, seed=2, max_iters=20))
runs["probabilistic"] = [res.labels.tolist(), res.relabel_counts]
cover = lp.memory_lpa(g, T=8, seed=1)
runs["memory"] = [sorted(map(tuple, cover.groups().values()))]
print(json.dumps({"backend": lp.backend_name(), "runs": runs}))
"""


def worker(disable):
    env = dict(os.environ)
    env.pop("LABELPROP_DISABLE_JIT", None)
    if disable:
        env["LABELPROP_DISABLE_JIT"] = "1"
    proc = subprocess.run([sys.executable, "-c", WORKER], env=env, capture_output=True, text=True, check=True)
    return json.loads(proc.stdout.strip().splitlines()[-1])


def test_backends_produce_identical_runs():
    fast, slow = worker(False), worker(True)
    assert slow["backend"] == "numpy"
    for case in slow["runs"]:
        assert fast["runs"][case] == slow["runs"][case], case


def test_backend_name_matches_switch():
    assert backend_name() == ("numba" if JIT_ENABLED else "numpy")


@pytest.mark.skipif(not JIT_ENABLED, reason="compiled kernels disabled")
def test_compiled_sweep_matches_interpreted_kernel():
    g, _ = planted_partition(n=200, q=4, avg_degree=12, mu=0.2, seed=0)
    plan = compile_rule(g, Rule("modularity"))
    n = g.n
    rng = np.random.default_rng(1)
    order, u = rng.permutation(n).astype(np.int64), rng.random(n)
    ptr = np.arange(n + 1, dtype=np.int64)
    out = []
    for fn in (K.sweep, py_func(K.sweep)):
        labels = np.arange(n, dtype=np.int64)
        size, kg, kin = np.zeros(n, np.int64), np.zeros(n), np.zeros(n)
        K.recompute_state(g.indptr, g.indices, g.weights, plan.selfw, labels, plan.degree, size, kg, kin)
        acc, acc2, mark, cands, maxset = _scratch(n)
        changes, _ = fn(g.indptr, g.indices, g.weights, plan.selfw, labels, order, ptr, u, plan.kind, plan.lam,
                        1, 1.0, False, 0, np.ones(n), np.zeros(n), np.ones(n), size, kg, kin, plan.degree,
                        np.ones(n, np.int8), False, acc, acc2, mark, cands, maxset, np.zeros(n, np.int64), 0)
        out.append((changes, labels.copy(), kg.copy()))
    assert out[0][0] == out[1][0]
    assert np.array_equal(out[0][1], out[1][1]) and np.array_equal(out[0][2], out[1][2])
