"""The propagation loop: schedules, tie policies, convergence and telemetry."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from . import _sweep_kernels as K
from .graph import Graph, Partition, dense_labels, greedy_coloring, split_into_components
from .rules import Rule, RuleError, apm_lambda, eigenvector_prefs

SCHEDULES = ("async", "sync", "semisync", "bipartite_alternating")
TIE_POLICIES = ("random", "retention", "inclusion", "smallest_label")
CONVERGENCE = ("no_change", "equilibrium", "max_iters")

_TIE_CODE = {name: code for code, name in enumerate(TIE_POLICIES)}


@dataclass(frozen=True)
class RunConfig:
    schedule: str = "async"
    tie_policy: str = "retention"
    convergence: str = "no_change"
    max_iters: int = 100
    seed: int | None = 0
    probabilistic_sync: bool = False
    inclusion_bonus: float = 1.0

    def __post_init__(self):
        if self.schedule not in SCHEDULES:
            raise ValueError(f"unknown schedule {self.schedule!r}")
        if self.tie_policy not in TIE_POLICIES:
            raise ValueError(f"unknown tie policy {self.tie_policy!r}")
        if self.convergence not in CONVERGENCE:
            raise ValueError(f"unknown convergence criterion {self.convergence!r}")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.probabilistic_sync and self.schedule != "sync":
            raise ValueError("probabilistic updates require the sync schedule")

    def with_seed(self, seed):
        return replace(self, seed=seed)


@dataclass
class RunResult:
    partition: Partition
    labels: np.ndarray
    iterations: int
    relabel_counts: list
    converged: bool
    seed: int
    prefs: np.ndarray | None = None
    states: list | None = field(default=None, repr=False)

    def report(self):
        return {
            "seed": self.seed,
            "iterations": self.iterations,
            "converged": self.converged,
            "relabel_counts": list(self.relabel_counts),
            "groups": self.partition.n_groups,
        }


# -- rule compilation ------------------------------------------------------------


@dataclass
class _Plan:
    graph: Graph          # propagation graph (transport graph for two-hop rules)
    selfw: np.ndarray
    kind: int
    lam: float
    mode: int
    prefs: np.ndarray
    dynamic: bool
    balanced: bool
    eigen: bool
    degree: np.ndarray


def _csr_graph(mat, n):
    mat = sp.csr_matrix(mat)
    mat.setdiag(0)
    mat.eliminate_zeros()
    mat.sort_indices()
    return Graph(n, mat.indptr.astype(np.int64), mat.indices.astype(np.int64),
                 mat.data.astype(np.float64), np.zeros(n))


def two_hop_graph(g: Graph):
    """Undirected transport weights sum_k W_ik W_kj / (k_k - 1), j != i."""
    hop = g.degree - 2.0 * g.loops
    scale = np.where(hop - 1 > 0, 1.0 / np.maximum(hop - 1, 1e-300), 0.0)
    a = g.adjacency()
    return _csr_graph(a @ sp.diags(scale) @ a, g.n)


def citation_graph(g: Graph, mode="cocitation"):
    """Shared out-neighbor (cocitation) or in-neighbor (bibcoupling) weights."""
    if not g.directed:
        raise RuleError("citation rules need a directed graph")
    a = g.adjacency()
    mat = a @ a.T if mode == "cocitation" else a.T @ a
    return _csr_graph(mat, g.n)


def neighborhood_graph(g: Graph):
    from .graph import common_neighbors

    return g.with_weights((1.0 + common_neighbors(g)) * g.weights)


def compile_rule(g: Graph, rule: Rule) -> _Plan:
    if rule.directed != g.directed:
        if rule.directed:
            raise RuleError(f"rule {rule.kind!r} needs a directed graph")
        raise RuleError(f"rule {rule.kind!r} needs an undirected graph; use Graph.to_undirected()")
    kind, lam, mode = 0, 0.0, 0
    prefs = np.ones(g.n)
    prop, selfw = g, g.loops
    dynamic = balanced = eigen = False
    if rule.kind == "cpm":
        kind, lam = 1, rule.lambda1
    elif rule.kind == "apm":
        kind, lam = 1, apm_lambda(rule.lambda3)
    elif rule.kind == "modularity":
        kind = 2
        lam = rule.lambda2 if rule.lambda2 is not None else (1.0 / (2.0 * g.m) if g.m > 0 else 0.0)
    elif rule.kind == "preference":
        prefs = np.asarray(rule.prefs, dtype=float).copy()
        if prefs.shape != (g.n,):
            raise RuleError("prefs must give one value per node")
        mode = 1 if rule.pref_mode == "promote" else 2
    elif rule.kind == "degree":
        prefs, mode = g.degree.copy(), 1
    elif rule.kind == "defensive":
        mode, dynamic = 3, True
    elif rule.kind == "offensive":
        mode, dynamic = 4, True
    elif rule.kind == "balanced":
        balanced = True
        if rule.defensive:
            mode, dynamic = 3, True
    elif rule.kind == "eigenvector":
        eigen = True
        mode = 1 if rule.pref_mode == "promote" else 2
    elif rule.kind == "neighborhood":
        prop = neighborhood_graph(g)
    elif rule.kind == "tau":
        if rule.tau != 1.0:
            hop = two_hop_graph(g)
            mix = rule.tau * g.adjacency() + (1.0 - rule.tau) * hop.adjacency()
            prop = _csr_graph(mix, g.n)
            selfw = rule.tau * g.loops
    elif rule.kind in ("cocitation", "bibcoupling"):
        prop = citation_graph(g, rule.kind)
        selfw = np.zeros(g.n)
    return _Plan(prop, np.ascontiguousarray(selfw, dtype=np.float64), kind, float(lam), mode, prefs,
                 dynamic, balanced, eigen, np.ascontiguousarray(prop.degree if prop is not g else g.degree))


# -- seeds -----------------------------------------------------------------------


def resolve_seed(seed):
    if seed is None:
        return int(np.random.SeedSequence().entropy % (2**63))
    return int(seed)


def derive_seeds(seed, count):
    """Independent child seeds for multi-run procedures."""
    children = np.random.SeedSequence(resolve_seed(seed)).spawn(count)
    return [int(c.generate_state(1, dtype=np.uint64)[0] % (2**63)) for c in children]


# -- tie resolution and equilibrium ---------------------------------------------


def resolve_tie(candidates, current, policy, rng=None):
    """Pick one label from the maximal set ``candidates``.

    ``inclusion`` acts upstream as a score bonus, so here it behaves like
    ``random``. Random picks index the sorted candidates.
    """
    cands = sorted(set(candidates))
    if not cands:
        raise ValueError("empty candidate set")
    if len(cands) == 1:
        return cands[0]
    if policy == "retention" and current in cands:
        return current
    if policy == "smallest_label":
        return cands[0]
    if policy not in TIE_POLICIES:
        raise ValueError(f"unknown tie policy {policy!r}")
    rng = np.random.default_rng() if rng is None else rng
    return cands[int(rng.random() * len(cands))]


def _scratch(n):
    return (np.zeros(n), np.zeros(n), np.full(n, -1, np.int64), np.zeros(n + 1, np.int64),
            np.zeros(n + 1, np.int64))


def _group_max(labels, prefs, n):
    top = np.zeros(n)
    np.maximum.at(top, labels, prefs)
    return top


def check_equilibrium(g: Graph, rule: Rule | None, labels, prefs=None) -> bool:
    """True iff every node's own label attains the maximal score under ``rule``."""
    rule = rule or Rule()
    plan = compile_rule(g, rule)
    labels = labels.labels if isinstance(labels, Partition) else labels
    lab = np.ascontiguousarray(dense_labels(labels), dtype=np.int64)
    return _violations(plan, lab, prefs) == 0


def _violations(plan, labels, prefs=None):
    pg = plan.graph
    n = pg.n
    size = np.zeros(n, np.int64)
    kg = np.zeros(n)
    kin = np.zeros(n)
    K.recompute_state(pg.indptr, pg.indices, pg.weights, plan.selfw, labels, plan.degree, size, kg, kin)
    p = plan.prefs if prefs is None else np.asarray(prefs, dtype=float)
    if plan.eigen:
        p, _ = eigenvector_prefs(pg, labels)
    acc, acc2, mark, cands, _ = _scratch(n)
    return int(K.equilibrium_violations(pg.indptr, pg.indices, pg.weights, plan.selfw, labels, plan.kind,
                                        plan.lam, plan.mode, p, _group_max(labels, p, n), np.ones(n),
                                        size, kg, plan.degree, acc, acc2, mark, cands))


def _absorbed(pg, labels):
    rows = np.repeat(np.arange(pg.n), np.diff(pg.indptr))
    live = pg.weights > 0
    return bool(np.all(labels[rows[live]] == labels[pg.indices[live]]))


# -- main loop --------------------------------------------------------------------


def _classes(g, plan, cfg):
    if cfg.schedule == "semisync":
        col = greedy_coloring(plan.graph)
        return [np.flatnonzero(col.colors == c) for c in range(col.n_colors)]
    if cfg.schedule == "bipartite_alternating":
        if g.node_type is None:
            raise ValueError("bipartite_alternating needs node types")
        types = np.unique(g.node_type)
        if types.size != 2:
            raise ValueError("bipartite_alternating needs exactly two node types")
        return [np.flatnonzero(g.node_type == t) for t in types]
    return None


def run(g: Graph, rule: Rule | None = None, cfg: RunConfig | None = None, init_labels=None,
        trace=False, active_passive=False) -> RunResult:
    """Propagate labels from ``init_labels`` (default: every node its own label)."""
    rule = rule or Rule()
    cfg = cfg or RunConfig()
    if active_passive and cfg.schedule != "async":
        raise ValueError("active/passive updating runs on the async schedule")
    plan = compile_rule(g, rule)
    pg = plan.graph
    n = g.n
    seed = resolve_seed(cfg.seed)
    rng = np.random.default_rng(seed)

    if init_labels is None:
        labels = np.arange(n, dtype=np.int64)
    else:
        init = init_labels.labels if isinstance(init_labels, Partition) else init_labels
        labels = np.ascontiguousarray(dense_labels(init), dtype=np.int64)
        if labels.shape != (n,):
            raise ValueError("init_labels must cover every node")
    size = np.zeros(n, np.int64)
    kg = np.zeros(n)
    kin = np.zeros(n)
    K.recompute_state(pg.indptr, pg.indices, pg.weights, plan.selfw, labels, plan.degree, size, kg, kin)
    prefs = plan.prefs.copy()
    if plan.dynamic and init_labels is not None:
        # start from the diffusion's fixed point for the given groups
        prefs = np.where(kin > 0, kin, 1.0)

    classes = _classes(g, plan, cfg)
    if cfg.schedule == "bipartite_alternating":
        fixed_order = np.concatenate(classes).astype(np.int64)
        fixed_ptr = np.cumsum([0] + [c.size for c in classes]).astype(np.int64)
    elif cfg.schedule == "sync":
        fixed_order = np.arange(n, dtype=np.int64)
        fixed_ptr = np.array([0, n], dtype=np.int64)
    async_ptr = np.arange(n + 1, dtype=np.int64)

    acc, acc2, mark, cands, maxset = _scratch(n)
    newbuf = np.zeros(n, np.int64)
    bal = np.ones(n)
    gmax = np.zeros(n)
    active = np.ones(n, np.int8)
    stamp = 0
    tie = _TIE_CODE[cfg.tie_policy]
    relabels = []
    states = [labels.copy()] if trace else None
    converged = False

    for _ in range(cfg.max_iters):
        if cfg.schedule == "async":
            order, ptr = rng.permutation(n).astype(np.int64), async_ptr
        elif cfg.schedule == "semisync":
            perm = rng.permutation(len(classes))
            order = (np.concatenate([classes[c] for c in perm]).astype(np.int64)
                     if classes else np.zeros(0, np.int64))
            ptr = np.cumsum([0] + [classes[c].size for c in perm]).astype(np.int64)
        else:
            order, ptr = fixed_order, fixed_ptr
        u = rng.random(n)
        if plan.balanced:
            pos = np.empty(n)
            pos[order] = np.arange(n)
            K.logistic_balance(pos, n, float(rule.gamma), bal)
        if plan.mode == 4:
            gmax = _group_max(labels, prefs, n)
        if plan.eigen:
            prefs, _ = eigenvector_prefs(pg, labels)
        changes, stamp = K.sweep(pg.indptr, pg.indices, pg.weights, plan.selfw, labels, order, ptr, u,
                                 plan.kind, plan.lam, tie, float(cfg.inclusion_bonus),
                                 bool(cfg.probabilistic_sync), plan.mode, prefs, gmax, bal,
                                 size, kg, kin, plan.degree, active, bool(active_passive),
                                 acc, acc2, mark, cands, maxset, newbuf, stamp)
        relabels.append(int(changes))
        if trace:
            states.append(labels.copy())
        if active_passive:
            if not active.any():
                converged = True
                break
        elif cfg.convergence == "no_change":
            # a quiet probabilistic step is only final once no edge can carry another label
            if changes == 0 and (not cfg.probabilistic_sync or _absorbed(pg, labels)):
                converged = True
                break
        elif cfg.convergence == "equilibrium":
            if _violations(plan, labels, prefs) == 0:
                converged = True
                break

    if cfg.convergence == "max_iters" and not active_passive:
        converged = relabels[-1] == 0 if relabels else True
    part = split_into_components(pg, labels)
    return RunResult(part, labels.copy(), len(relabels), relabels, converged, seed,
                     prefs if (plan.dynamic or plan.eigen) else None, states)


def active_passive_run(g: Graph, rule: Rule | None = None, cfg: RunConfig | None = None,
                       init_labels=None) -> RunResult:
    """Async propagation that only revisits nodes whose neighborhood changed."""
    cfg = cfg or RunConfig()
    return run(g, rule, cfg, init_labels=init_labels, active_passive=True)


def run_many(g: Graph, rule: Rule | None, cfg: RunConfig, runs: int, n_jobs: int = 1, init_labels=None):
    """Independent runs with seeds derived from ``cfg.seed``; result order is stable."""
    seeds = derive_seeds(cfg.seed, runs)

    def one(s):
        return run(g, rule, cfg.with_seed(s), init_labels=init_labels)

    if n_jobs == 1:
        return [one(s) for s in seeds]
    with ThreadPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(one, seeds))
