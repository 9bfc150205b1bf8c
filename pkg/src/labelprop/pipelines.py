"""Multi-run and multi-stage procedures built on the engine."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components as _cc

from . import _sweep_kernels as K
from .cover import Cover
from .engine import RunConfig, derive_seeds, resolve_seed, run
from .graph import (Graph, Partition, dense_labels, from_arrays, induced_subgraph, is_refinement, meet,
                    quotient_graph, split_into_components)
from .objectives import degeneracy_stats
from .rules import Rule


@dataclass(frozen=True)
class Method:
    """A base propagation method: rule plus run configuration."""

    rule: Rule = field(default_factory=Rule)
    cfg: RunConfig = field(default_factory=RunConfig)

    def __call__(self, g: Graph, seed) -> Partition:
        return run(g, self.rule, self.cfg.with_seed(seed)).partition


def _as_partition(x):
    return x if isinstance(x, Partition) else Partition(x)


# -- consensus ----------------------------------------------------------------------


@dataclass
class ConsensusResult:
    partition: Partition
    converged: bool
    rounds: int


def consensus_graph(g: Graph, partitions, threshold=0.5):
    """Co-classification frequencies on the edges of ``g``, thresholded."""
    u, v, _ = g.edges()
    keep = u != v
    u, v = u[keep], v[keep]
    co = np.zeros(u.size)
    for p in partitions:
        lab = p.labels
        co += lab[u] == lab[v]
    co /= len(partitions)
    keep = co >= threshold
    return from_arrays(g.n, u[keep], v[keep], co[keep])


def consensus(g: Graph, base: Method | Callable | None = None, runs=25, threshold=0.5, max_rounds=10,
              seed=0, n_jobs=1) -> ConsensusResult:
    """Iterate base runs on consensus graphs until every run agrees."""
    if runs < 2:
        raise ValueError("consensus needs at least two runs")
    if not 0 < threshold <= 1:
        raise ValueError("threshold must lie in (0, 1]")
    base = base or Method()
    h = g.to_undirected() if g.directed else g
    parts = []
    for rnd, rseed in enumerate(derive_seeds(seed, max_rounds), start=1):
        seeds = derive_seeds(rseed, runs)
        if n_jobs == 1:
            parts = [_as_partition(base(h, s)) for s in seeds]
        else:
            from concurrent.futures import ThreadPoolExecutor

            with ThreadPoolExecutor(max_workers=n_jobs) as pool:
                parts = [_as_partition(p) for p in pool.map(lambda s: base(h, s), seeds)]
        keys = [p.key() for p in parts]
        if len(set(keys)) == 1:
            return ConsensusResult(parts[0].canonical(), True, rnd)
        h = consensus_graph(h, parts, threshold)
    top = Counter(p.key() for p in parts).most_common(1)[0][0]
    winner = next(p for p in parts if p.key() == top)
    return ConsensusResult(winner.canonical(), False, max_rounds)


# -- hierarchy ----------------------------------------------------------------------


class Hierarchy:
    """Nested partitions: level 0 labels original nodes, level t labels level t-1 groups."""

    def __init__(self, levels):
        self.levels = [np.asarray(lv, dtype=np.int64) for lv in levels]

    def __len__(self):
        return len(self.levels)

    def lifted(self, t) -> Partition:
        lab = self.levels[0]
        for lv in self.levels[1:t + 1]:
            lab = lv[lab]
        return Partition(lab)

    def lifted_all(self):
        return [self.lifted(t) for t in range(len(self.levels))]

    @classmethod
    def from_lifted(cls, lifted):
        levels = []
        prev = None
        for p in lifted:
            lab = dense_labels(p.labels if isinstance(p, Partition) else p)
            if prev is None:
                levels.append(lab)
            else:
                top = np.zeros(int(prev.max()) + 1, np.int64)
                top[prev] = lab
                levels.append(top)
            prev = lab
        return cls(levels)

    def is_nested(self):
        lifted = self.lifted_all()
        return all(is_refinement(a, b) for a, b in zip(lifted, lifted[1:]))

    def __repr__(self):
        return f"Hierarchy(levels={len(self.levels)}, groups={[int(lv.max()) + 1 for lv in self.levels]})"


def hierarchy_agglomerate(g: Graph, rule: Rule | None = None, cfg: RunConfig | None = None,
                          max_levels=64) -> Hierarchy:
    """Bottom-up: propagate, collapse groups into a meta-network, repeat."""
    rule = rule or Rule()
    cfg = cfg or RunConfig()
    levels = []
    h = g
    for lseed in derive_seeds(cfg.seed, max_levels):
        res = run(h, rule, cfg.with_seed(lseed))
        lab = dense_labels(res.partition.labels)
        merged = int(lab.max()) + 1 < h.n if h.n else False
        if merged or not levels:
            levels.append(lab)
        if not merged:
            break
        h = quotient_graph(h, lab)
        if h.nnz == 0:
            break
    return Hierarchy(levels)


def _refine_partition(g, p, rule, cfg, seed):
    lab = dense_labels(p.labels)
    out = lab.copy()
    nxt = int(lab.max()) + 1 if lab.size else 0
    groups = Partition(lab).groups
    seeds = derive_seeds(seed, max(len(groups), 1))
    for (gid, members), s in zip(sorted(groups.items()), seeds):
        if members.size < 2:
            continue
        sub, nodes = induced_subgraph(g, members)
        sp_lab = dense_labels(run(sub, rule, cfg.with_seed(s)).partition.labels)
        if sp_lab.max() > 0:
            out[nodes] = np.where(sp_lab == 0, gid, nxt + sp_lab - 1)
            nxt += int(sp_lab.max())
    return Partition(out)


def hierarchy_refine(g: Graph, h: Hierarchy, rule: Rule | None = None, cfg: RunConfig | None = None) -> Hierarchy:
    """Rerun propagation inside every group and push splits down the hierarchy."""
    rule = rule or Rule()
    cfg = cfg or RunConfig()
    lifted = h.lifted_all()
    seeds = derive_seeds(cfg.seed, max(len(lifted), 1))
    refined = [_refine_partition(g, p, rule, cfg, s) for p, s in zip(lifted, seeds)]
    final = [None] * len(refined)
    for t in range(len(refined) - 1, -1, -1):
        p = refined[t] if t == len(refined) - 1 else meet(refined[t], final[t + 1])
        final[t] = split_into_components(g, p.labels)
    return Hierarchy.from_lifted(final)


# -- overlapping groups -----------------------------------------------------------


def _cover_from_memberships(g: Graph, node, label, weight, drop_nested=True):
    """Split every label's support into connected pieces; each piece is a group.

    Groups contained in another group are dropped (their nodes keep the
    remaining affiliations, renormalized).
    """
    n = g.n
    order = np.lexsort((node, label))
    node, label, weight = node[order], label[order], weight[order]
    keys = label * n + node
    ne = keys.size
    # entries of each node
    by_node = np.argsort(node, kind="stable")
    cnt = np.bincount(node, minlength=n)
    start = np.concatenate([[0], np.cumsum(cnt)])
    rows = np.repeat(np.arange(n), np.diff(g.indptr))
    cols = g.indices
    reps = cnt[rows]
    e_rows = np.repeat(rows, reps)
    e_cols = np.repeat(cols, reps)
    within = np.arange(reps.sum()) - np.repeat(np.cumsum(reps) - reps, reps)
    ent = by_node[start[e_rows] + within]
    probe = label[ent] * n + e_cols
    pos = np.searchsorted(keys, probe)
    pos = np.minimum(pos, max(ne - 1, 0))
    hit = keys[pos] == probe if ne else np.zeros(0, bool)
    adj = sp.coo_matrix((np.ones(int(hit.sum())), (ent[hit], pos[hit])), shape=(ne, ne))
    _, comp = _cc(adj, directed=False)
    gid = dense_labels(comp)
    # pieces with identical member sets are one group
    members = {}
    for v, gidx in zip(node.tolist(), gid.tolist()):
        members.setdefault(gidx, []).append(v)
    first = {}
    remap = np.empty(int(gid.max()) + 1 if gid.size else 0, np.int64)
    for gidx in sorted(members):
        remap[gidx] = first.setdefault(tuple(sorted(members[gidx])), len(first))
    gid = remap[gid] if gid.size else gid
    aff = [dict() for _ in range(n)]
    for v, gidx, w in zip(node.tolist(), gid.tolist(), weight.tolist()):
        aff[v][gidx] = aff[v].get(gidx, 0.0) + w
    if drop_nested:
        sets = [frozenset(m) for m in first]
        dropped = set()
        for a, sa in enumerate(sets):
            v0 = next(iter(sa))
            if any(b != a and len(sets[b]) > len(sa) and sa <= sets[b] for b in aff[v0]):
                dropped.add(a)
        for d in aff:
            for a in dropped.intersection(d):
                del d[a]
            total = sum(d.values())
            for a in d:
                d[a] /= total
        keep = sorted(set(range(len(sets))) - dropped)
        dense = {a: i for i, a in enumerate(keep)}
        aff = [{dense[a]: w for a, w in d.items()} for d in aff]
    return Cover(aff)


def _row_threshold(mat, nu, rho, rng):
    """Zero weak affiliations per row, then renormalize; keep the top label if all vanish."""
    mat = mat.tocsr()
    mat.sort_indices()
    n = mat.shape[0]
    counts = np.diff(mat.indptr)
    rows = np.repeat(np.arange(n), counts)
    data = mat.data
    top = np.zeros(n)
    np.maximum.at(top, rows, data)
    cut = np.full(n, 1.0 / nu) if nu is not None else rho * top
    keep = data >= cut[rows] - 1e-12
    empty = np.bincount(rows[keep], minlength=n) == 0
    if empty.any():
        # random pick among the row maxima
        cand = empty[rows] & (data >= top[rows] - 1e-12)
        key = np.where(cand, rng.random(data.size), -1.0)
        best = np.full(n, -1.0)
        np.maximum.at(best, rows, key)
        keep |= cand & (key == best[rows])
    new = sp.csr_matrix((np.where(keep, data, 0.0), mat.indices, mat.indptr), shape=mat.shape)
    new.eliminate_zeros()
    sums = np.asarray(new.sum(axis=1)).ravel()
    sums[sums == 0] = 1.0
    return sp.diags(1.0 / sums) @ new


def copra(g: Graph, nu=None, rho=None, max_iters=100, seed=0, tol=1e-6,
          callback: Callable | None = None, drop_nested=True) -> Cover:
    """Overlapping propagation of affiliation vectors.

    Exactly one of ``nu`` (keep affiliations >= 1/nu) or ``rho`` (keep
    affiliations >= rho * row max) must be given. ``callback(iteration,
    matrix)`` sees the thresholded affiliations after every iteration.
    """
    if (nu is None) == (rho is None):
        raise ValueError("give exactly one of nu or rho")
    if nu is not None and nu < 1:
        raise ValueError("nu must be >= 1")
    if rho is not None and not 0 < rho <= 1:
        raise ValueError("rho must lie in (0, 1]")
    if g.directed:
        g = g.to_undirected()
    rng = np.random.default_rng(resolve_seed(seed))
    n = g.n
    w = g.adjacency() + sp.diags(g.loops)
    k = np.asarray(w.sum(axis=1)).ravel()
    isolated = k == 0
    step = sp.diags(np.where(isolated, 0.0, 1.0 / np.where(isolated, 1.0, k))) @ w
    step = step + sp.diags(isolated.astype(float))
    aff = sp.identity(n, format="csr")
    for it in range(1, max_iters + 1):
        new = _row_threshold(step @ aff, nu, rho, rng)
        if callback is not None:
            callback(it, new)
        diff = abs(new - aff)
        done = diff.nnz == 0 or diff.max() < tol
        aff = new
        if done:
            break
    coo = aff.tocoo()
    return _cover_from_memberships(g, coo.row.astype(np.int64), coo.col.astype(np.int64), coo.data,
                                   drop_nested)


def memory_lpa(g: Graph, T=25, r=0.3, seed=0, return_memory=False, drop_nested=True):
    """Speaker-listener propagation: each node keeps a memory of heard labels.

    After ``T`` async iterations a node's cover holds every label whose
    memory frequency is at least ``r`` (renormalized).
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    if not 0 < r <= 1:
        raise ValueError("r must lie in (0, 1]")
    if g.directed:
        g = g.to_undirected()
    n = g.n
    rng = np.random.default_rng(resolve_seed(seed))
    memory = np.zeros((n, T + 1), np.int64)
    memory[:, 0] = np.arange(n)
    mem_len = np.ones(n, np.int64)
    acc = np.zeros(n)
    mark = np.full(n, -1, np.int64)
    cands = np.zeros(n + 1, np.int64)
    stamp = 0
    for _ in range(T):
        order = rng.permutation(n).astype(np.int64)
        pick_u = rng.random(g.nnz)
        tie_u = rng.random(n)
        stamp = K.slpa_iteration(g.indptr, g.indices, g.weights, order, memory, mem_len, pick_u, tie_u,
                                 acc, mark, cands, stamp)
    nodes, labs, wts = [], [], []
    for v in range(n):
        lab, cnt = np.unique(memory[v, :mem_len[v]], return_counts=True)
        freq = cnt / mem_len[v]
        keep = freq >= r - 1e-12
        if not keep.any():
            keep = freq == freq.max()
        f = freq[keep]
        nodes.extend([v] * int(keep.sum()))
        labs.extend(lab[keep].tolist())
        wts.extend((f / f.sum()).tolist())
    cover = _cover_from_memberships(g, np.asarray(nodes, np.int64), np.asarray(labs, np.int64),
                                    np.asarray(wts), drop_nested)
    if return_memory:
        return cover, [memory[v, :mem_len[v]].copy() for v in range(n)]
    return cover


# -- structural equivalence -----------------------------------------------------


def two_step_equivalence(g: Graph, cfg: RunConfig | None = None, return_steps=False):
    """Connected groups first (tau = 1), then two-hop refinement (tau = 0) inside each."""
    cfg = cfg or RunConfig()
    step1 = run(g, Rule("tau", tau=1.0), cfg).partition
    lab = dense_labels(step1.labels)
    out = lab.copy()
    nxt = int(lab.max()) + 1 if lab.size else 0
    groups = Partition(lab).groups
    seeds = derive_seeds(cfg.seed, max(len(groups), 1))
    for (gid, members), s in zip(sorted(groups.items()), seeds):
        if members.size < 2:
            continue
        sub, nodes = induced_subgraph(g, members)
        sub_lab = dense_labels(run(sub, Rule("tau", tau=0.0), cfg.with_seed(s)).partition.labels)
        if sub_lab.max() > 0:
            out[nodes] = np.where(sub_lab == 0, gid, nxt + sub_lab - 1)
            nxt += int(sub_lab.max())
    final = Partition(dense_labels(out))
    return (final, step1) if return_steps else final


# -- preference refinement ------------------------------------------------------


def defensive_then_offensive(g: Graph, cfg: RunConfig | None = None, max_rounds=10, tol=0.01,
                             return_history=False):
    """Defensive propagation, then offensive rounds seeded with the current groups.

    Stops once both degeneracy fractions move by less than ``tol``.
    """
    cfg = cfg or RunConfig()
    seeds = derive_seeds(cfg.seed, max_rounds + 1)
    current = run(g, Rule("defensive"), cfg.with_seed(seeds[0])).partition
    stats = degeneracy_stats(current)
    history = [current]
    for s in seeds[1:]:
        nxt = run(g, Rule("offensive"), cfg.with_seed(s), init_labels=current).partition
        new_stats = degeneracy_stats(nxt)
        history.append(nxt)
        done = abs(new_stats[0] - stats[0]) < tol and abs(new_stats[1] - stats[1]) < tol
        current, stats = nxt, new_stats
        if done:
            break
    return (current, history) if return_history else current
