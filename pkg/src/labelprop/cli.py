"""Command-line interface.

Exit status: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys

import numpy as np

from . import io
from .engine import CONVERGENCE, SCHEDULES, TIE_POLICIES, RunConfig, derive_seeds, resolve_seed, run
from .generators import erdos_renyi, overlapping_cliques, planted_partition, split_grid, triangular_grid
from .graph import GraphError, signed_reweight
from .objectives import degeneracy_stats, nmi, objective_report
from .pipelines import (Method, consensus, copra, hierarchy_agglomerate, hierarchy_refine, memory_lpa,
                        two_step_equivalence)
from .rules import RULE_KINDS, Rule, RuleError

BENCH_METHODS = ("standard", "modularity", "defensive", "offensive", "balanced", "degree")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _add_graph(p):
    p.add_argument("graph", help="edge list file")


def _add_seed(p):
    p.add_argument("--seed", type=int, default=None, help="random seed (required with --ci or CI=1)")


def _add_rule(p):
    # preference weights and citation rules have no command-line form
    p.add_argument("--rule", default="standard", choices=[k for k in RULE_KINDS
                                                          if k not in ("preference", "cocitation", "bibcoupling")])
    p.add_argument("--schedule", default="async", choices=SCHEDULES)
    p.add_argument("--tie", default="retention", choices=TIE_POLICIES)
    p.add_argument("--convergence", default="no_change", choices=CONVERGENCE)
    p.add_argument("--max-iters", type=int, default=100)
    p.add_argument("--lambda1", type=float, default=0.0)
    p.add_argument("--lambda2", type=float, default=None, help="default 1/2m")
    p.add_argument("--lambda3", type=float, default=0.0)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--pref-mode", default="promote", choices=("promote", "suppress"))
    p.add_argument("--defensive", action="store_true", help="combine balanced with defensive preferences")
    p.add_argument("--probabilistic", action="store_true", help="probabilistic sync updates")
    p.add_argument("--signed-scheme", default="equal_total", choices=("fixed", "equal_total"))


def _add_out(p, what="partition TSV"):
    p.add_argument("-o", "--out", default="-", help=f"{what} (default stdout)")
    p.add_argument("--report", default=None, help="JSON run report path")


def build_parser():
    ap = _Parser(prog="labelprop", description="Label propagation clustering.")
    ap.add_argument("--ci", action="store_true", help="require --seed")
    sub = ap.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    p = sub.add_parser("detect", help="single propagation run")
    _add_graph(p)
    _add_rule(p)
    _add_seed(p)
    p.add_argument("--active-passive", action="store_true")
    _add_out(p)

    p = sub.add_parser("consensus", help="consensus over repeated runs")
    _add_graph(p)
    _add_rule(p)
    _add_seed(p)
    p.add_argument("--runs", type=int, default=25)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--max-rounds", type=int, default=10)
    p.add_argument("--jobs", type=int, default=1)
    _add_out(p)

    p = sub.add_parser("hierarchy", help="agglomerative hierarchy")
    _add_graph(p)
    _add_rule(p)
    _add_seed(p)
    p.add_argument("--refine", action="store_true")
    p.add_argument("--prefix", required=True, help="output prefix for level files and index")
    p.add_argument("--report", default=None)

    p = sub.add_parser("overlap", help="overlapping groups")
    _add_graph(p)
    _add_seed(p)
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument("--copra-nu", type=float)
    mode.add_argument("--copra-rho", type=float)
    mode.add_argument("--memory", nargs=2, metavar=("T", "R"))
    p.add_argument("--max-iters", type=int, default=100)
    _add_out(p, "cover TSV")

    p = sub.add_parser("equivalence", help="structural equivalence groups")
    _add_graph(p)
    _add_seed(p)
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument("--two-step", action="store_true")
    mode.add_argument("--cocitation", action="store_true")
    mode.add_argument("--bibcoupling", action="store_true")
    p.add_argument("--schedule", default="async", choices=SCHEDULES)
    p.add_argument("--tie", default="retention", choices=TIE_POLICIES)
    p.add_argument("--max-iters", type=int, default=100)
    _add_out(p)

    p = sub.add_parser("generate", help="benchmark graphs")
    p.add_argument("kind", choices=("er", "planted", "grid", "cliques"))
    _add_seed(p)
    p.add_argument("--n", type=int, default=128)
    p.add_argument("--degree", type=float, default=16.0)
    p.add_argument("--groups", type=int, default=4)
    p.add_argument("--mu", type=float, default=0.1)
    p.add_argument("--rows", type=int, default=6)
    p.add_argument("--cols", type=int, default=12)
    p.add_argument("--split", action="store_true", help="grid: thin the middle seam")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--s", type=int, default=1)
    p.add_argument("-o", "--out", required=True, help="edge list path")
    p.add_argument("--truth", default=None, help="ground truth partition or cover TSV")

    p = sub.add_parser("eval", help="objectives and comparisons")
    p.add_argument("files", nargs="*", help="GRAPH PARTITION")
    p.add_argument("--nmi", nargs=2, metavar=("REF", "OUT"))
    p.add_argument("--lambda1", type=float, default=0.0)
    p.add_argument("--lambda2", type=float, default=None)
    p.add_argument("--lambda3", type=float, default=0.0)
    p.add_argument("--tiny", type=int, default=3, help="degeneracy: largest tiny group size")

    p = sub.add_parser("benchmark", help="planted-partition sweeps as CSV")
    p.add_argument("--sweep", choices=("mu", "size"), required=True)
    _add_seed(p)
    p.add_argument("--n", type=int, default=128)
    p.add_argument("--groups", type=int, default=4)
    p.add_argument("--degree", type=float, default=16.0)
    p.add_argument("--mu", type=float, default=0.1, help="size sweep: mixing")
    p.add_argument("--mus", default="0.1,0.15,0.2,0.25,0.3,0.35,0.4,0.45,0.5")
    p.add_argument("--sizes", default="1000,2000,4000,8000", help="size sweep: node counts")
    p.add_argument("--group-size", type=int, default=32, help="size sweep: nodes per group")
    p.add_argument("--runs", type=int, default=25)
    p.add_argument("--methods", default="standard")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("-o", "--out", default="-")
    return ap


# -- helpers ----------------------------------------------------------------------


def _rule_from(args):
    return Rule(args.rule, lambda1=args.lambda1, lambda2=args.lambda2, lambda3=args.lambda3,
                gamma=args.gamma, tau=args.tau, pref_mode=args.pref_mode, defensive=args.defensive)


def _cfg_from(args, seed):
    return RunConfig(schedule=args.schedule, tie_policy=args.tie, convergence=getattr(args, "convergence",
                                                                                        "no_change"),
                     max_iters=args.max_iters, seed=seed, probabilistic_sync=getattr(args, "probabilistic",
                                                                                     False))


def _prepare(g, args):
    """Undirected, sign-reweighted propagation graph."""
    if g.directed:
        g = g.to_undirected()
    if g.signed:
        g = signed_reweight(g, args.signed_scheme)
    return g


def _load(path):
    if not os.path.exists(path):
        raise GraphError(f"{path}: no such file")
    return io.read_edge_list(path)


def _emit(path, writer):
    if path != "-":
        io.ensure_parent(path)
    writer(path)


def _objectives(g, labels, args):
    if g.n == 0:
        return {}
    rep = objective_report(g, labels, getattr(args, "lambda1", 0.0), getattr(args, "lambda2", None),
                           getattr(args, "lambda3", 0.0))
    return rep.as_dict()


# -- commands ---------------------------------------------------------------------


def cmd_detect(args, seed):
    g0 = _load(args.graph)
    g = _prepare(g0, args)
    rule = _rule_from(args)
    res = run(g, rule, _cfg_from(args, seed), active_passive=args.active_passive)
    _emit(args.out, lambda p: io.write_partition(res.partition, p, g0.names))
    if args.report:
        rep = res.report()
        rep.update(command="detect", rule=rule.describe(), schedule=args.schedule, tie=args.tie,
                   convergence=args.convergence, objectives=_objectives(g, res.partition.labels, args))
        io.write_report(rep, args.report)


def cmd_consensus(args, seed):
    g0 = _load(args.graph)
    g = _prepare(g0, args)
    base = Method(_rule_from(args), _cfg_from(args, 0))
    res = consensus(g, base, runs=args.runs, threshold=args.threshold, max_rounds=args.max_rounds, seed=seed,
                    n_jobs=args.jobs)
    _emit(args.out, lambda p: io.write_partition(res.partition, p, g0.names))
    if args.report:
        io.write_report({"command": "consensus", "seed": seed, "rounds": res.rounds, "converged": res.converged,
                         "runs": args.runs, "threshold": args.threshold, "groups": res.partition.n_groups,
                         "objectives": _objectives(g, res.partition.labels, args)}, args.report)


def cmd_hierarchy(args, seed):
    g0 = _load(args.graph)
    g = _prepare(g0, args)
    rule, cfg = _rule_from(args), _cfg_from(args, seed)
    h = hierarchy_agglomerate(g, rule, cfg)
    if args.refine:
        h = hierarchy_refine(g, h, rule, cfg)
    io.ensure_parent(args.prefix)
    index = io.write_hierarchy(h, args.prefix, g0.names)
    if args.report:
        io.write_report({"command": "hierarchy", "seed": seed, "refine": args.refine, "index": str(index),
                         "groups_per_level": [p.n_groups for p in h.lifted_all()]}, args.report)


def cmd_overlap(args, seed):
    g0 = _load(args.graph)
    g = g0.to_undirected() if g0.directed else g0
    if args.memory:
        try:
            t, r = int(args.memory[0]), float(args.memory[1])
        except ValueError:
            raise UsageError("--memory expects an integer T and a real r") from None
        cover = memory_lpa(g, T=t, r=r, seed=seed)
        mode = {"memory": {"T": t, "r": r}}
    elif args.copra_nu is not None:
        cover = copra(g, nu=args.copra_nu, max_iters=args.max_iters, seed=seed)
        mode = {"copra_nu": args.copra_nu}
    else:
        cover = copra(g, rho=args.copra_rho, max_iters=args.max_iters, seed=seed)
        mode = {"copra_rho": args.copra_rho}
    _emit(args.out, lambda p: io.write_cover(cover, p, g0.names))
    if args.report:
        io.write_report({"command": "overlap", "seed": seed, **mode, "groups": len(cover.groups()),
                         "max_memberships": cover.max_memberships()}, args.report)


def cmd_equivalence(args, seed):
    g0 = _load(args.graph)
    cfg = RunConfig(schedule=args.schedule, tie_policy=args.tie, max_iters=args.max_iters, seed=seed)
    if args.two_step:
        g = g0.to_undirected() if g0.directed else g0
        part = two_step_equivalence(g, cfg)
        iters = None
    else:
        if not g0.directed:
            raise GraphError("citation rules need a %directed edge list")
        res = run(g0, Rule("cocitation" if args.cocitation else "bibcoupling"), cfg)
        part, iters = res.partition, res.iterations
    _emit(args.out, lambda p: io.write_partition(part, p, g0.names))
    if args.report:
        mode = "two_step" if args.two_step else ("cocitation" if args.cocitation else "bibcoupling")
        io.write_report({"command": "equivalence", "mode": mode, "seed": seed, "iterations": iters,
                         "groups": part.n_groups}, args.report)


def cmd_generate(args, seed):
    truth = None
    if args.kind == "er":
        g = erdos_renyi(args.n, args.degree, seed)
    elif args.kind == "planted":
        if args.groups < 1 or args.n % args.groups:
            raise UsageError("--n must be a multiple of --groups")
        g, truth = planted_partition(n=args.n, q=args.groups, avg_degree=args.degree, mu=args.mu, seed=seed)
    elif args.kind == "grid":
        if args.split:
            g, truth = split_grid(args.rows, args.cols)
        else:
            g = triangular_grid(args.rows, args.cols)
    else:
        g, truth = overlapping_cliques(args.k, args.s)
    io.ensure_parent(args.out)
    io.write_edge_list(g, args.out)
    if args.truth and truth is not None:
        io.ensure_parent(args.truth)
        if args.kind == "cliques":
            io.write_cover(truth, args.truth)
        else:
            io.write_partition(truth, args.truth)


def cmd_eval(args, seed):
    out = []
    if args.nmi:
        ref, names = io.read_partition_named(args.nmi[0])
        mine = io.read_partition(args.nmi[1], names=names)
        out.append(("nmi", nmi(ref, mine)))
    if args.files:
        if len(args.files) != 2:
            raise UsageError("eval expects GRAPH PARTITION")
        g = _load(args.files[0])
        g = g.to_undirected() if g.directed else g
        part = io.read_partition(args.files[1], names=g.names, n=g.n)
        rep = _objectives(g, part.labels, args)
        for key in ("F", "cut", "Q", "H", "H1", "H2", "H3", "lambda1", "lambda2", "lambda3"):
            if key in rep:
                out.append((key, rep[key]))
        tiny, largest = degeneracy_stats(part, args.tiny)
        out += [("groups", part.n_groups), ("tiny_fraction", tiny), ("largest_fraction", largest)]
    if not out:
        raise UsageError("eval needs --nmi REF OUT and/or GRAPH PARTITION")
    for key, val in out:
        print(f"{key}\t{val if isinstance(val, int) else io.FLOAT_FMT % val}")


def _bench_rule(name):
    return Rule(name)


def _bench_point(n, q, k, mu, method, runs, seed):
    scores, iters = [], []
    for s in derive_seeds(seed, runs):
        gs, rs = derive_seeds(s, 2)
        g, truth = planted_partition(n=n, q=q, avg_degree=k, mu=mu, seed=gs)
        res = run(g, _bench_rule(method), RunConfig(seed=rs))
        scores.append(nmi(res.partition, truth))
        iters.append(res.iterations)
    scores = np.asarray(scores)
    err = scores.std(ddof=1) / np.sqrt(runs) if runs > 1 else 0.0
    return scores.mean(), err, float(np.mean(iters))


def cmd_benchmark(args, seed):
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    bad = [m for m in methods if m not in BENCH_METHODS]
    if bad:
        raise UsageError(f"unknown benchmark method {bad[0]!r}; choose from {', '.join(BENCH_METHODS)}")
    if args.runs < 1:
        raise UsageError("--runs must be >= 1")
    try:
        values = [float(x) for x in (args.mus if args.sweep == "mu" else args.sizes).split(",")]
    except ValueError:
        raise UsageError("sweep values must be comma-separated numbers") from None
    jobs = []
    point_seeds = derive_seeds(seed, len(values))
    for v, ps in zip(values, point_seeds):
        for method in methods:
            if args.sweep == "mu":
                jobs.append((v, method, (args.n, args.groups, args.degree, v, method, args.runs, ps)))
            else:
                n = int(v)
                if n % args.group_size:
                    raise UsageError("sizes must be multiples of --group-size")
                jobs.append((n, method, (n, n // args.group_size, args.degree, args.mu, method, args.runs, ps)))
    if args.jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(lambda j: _bench_point(*j[2]), jobs))
    else:
        results = [_bench_point(*j[2]) for j in jobs]

    def write(fh):
        w = csv.writer(fh, lineterminator="\n")
        if args.sweep == "mu":
            w.writerow(["mu", "method", "mean_nmi", "stderr"])
            for (v, m, _), (mean, err, _) in zip(jobs, results):
                w.writerow([io.FLOAT_FMT % v, m, io.FLOAT_FMT % mean, io.FLOAT_FMT % err])
        else:
            w.writerow(["n", "method", "mean_nmi", "stderr", "mean_iterations"])
            for (v, m, _), (mean, err, it) in zip(jobs, results):
                w.writerow([v, m, io.FLOAT_FMT % mean, io.FLOAT_FMT % err, io.FLOAT_FMT % it])

    if args.out == "-":
        write(sys.stdout)
    else:
        io.ensure_parent(args.out)
        with open(args.out, "w", encoding="utf-8") as fh:
            write(fh)


COMMANDS = {
    "detect": cmd_detect,
    "consensus": cmd_consensus,
    "hierarchy": cmd_hierarchy,
    "overlap": cmd_overlap,
    "equivalence": cmd_equivalence,
    "generate": cmd_generate,
    "eval": cmd_eval,
    "benchmark": cmd_benchmark,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        seed = getattr(args, "seed", None)
        ci = args.ci or os.environ.get("CI", "").lower() in ("1", "true", "yes")
        if ci and "seed" in args and seed is None:
            raise UsageError("--seed is required in CI mode")
        COMMANDS[args.cmd](args, resolve_seed(seed) if "seed" in args else None)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except (GraphError, RuleError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
