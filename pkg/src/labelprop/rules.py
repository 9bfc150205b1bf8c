"""Label scoring rules.

``Rule`` describes a propagation variant for the engine. The ``score_*``
functions below are plain reference implementations that read the graph
directly; the engine runs compiled equivalents, and tests check the two
agree.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graph import Graph, Partition, dense_labels

RULE_KINDS = (
    "standard", "cpm", "modularity", "apm", "preference", "degree", "defensive",
    "offensive", "balanced", "eigenvector", "neighborhood", "tau", "cocitation", "bibcoupling",
)


class RuleError(ValueError):
    """Rule parameters invalid or incompatible with the graph."""


@dataclass(frozen=True, eq=False)
class Rule:
    """A scoring rule plus its parameters.

    ``lambda2=None`` means 1/2m (modularity). For ``preference`` and
    ``eigenvector`` rules ``pref_mode`` picks promote or suppress weighting.
    ``defensive=True`` on a ``balanced`` rule multiplies in the defensive
    diffusion preferences.
    """

    kind: str = "standard"
    lambda1: float = 0.0
    lambda2: float | None = None
    lambda3: float = 0.0
    gamma: float = 1.0
    tau: float = 1.0
    prefs: np.ndarray | None = field(default=None, repr=False)
    pref_mode: str = "promote"
    defensive: bool = False

    def __post_init__(self):
        if self.kind not in RULE_KINDS:
            raise RuleError(f"unknown rule {self.kind!r}")
        if self.kind == "cpm" and self.lambda1 < 0:
            raise RuleError("lambda1 must be >= 0")
        if self.kind == "modularity" and self.lambda2 is not None and self.lambda2 < 0:
            raise RuleError("lambda2 must be >= 0")
        if self.kind == "apm" and self.lambda3 <= -1:
            raise RuleError("lambda3 must exceed -1")
        if self.kind == "tau" and not 0.0 <= self.tau <= 1.0:
            raise RuleError("tau must lie in [0, 1]")
        if self.pref_mode not in ("promote", "suppress"):
            raise RuleError("pref_mode is 'promote' or 'suppress'")
        if self.kind == "preference" and self.prefs is None:
            raise RuleError("preference rule needs a prefs array")

    @property
    def directed(self):
        return self.kind in ("cocitation", "bibcoupling")

    @property
    def two_hop(self):
        return self.kind in ("tau", "cocitation", "bibcoupling") and not (self.kind == "tau" and self.tau == 1.0)

    def describe(self):
        extra = {
            "cpm": f"lambda1={self.lambda1:g}",
            "modularity": f"lambda2={'1/2m' if self.lambda2 is None else format(self.lambda2, 'g')}",
            "apm": f"lambda3={self.lambda3:g}",
            "balanced": f"gamma={self.gamma:g}{',defensive' if self.defensive else ''}",
            "tau": f"tau={self.tau:g}",
            "preference": self.pref_mode,
            "eigenvector": self.pref_mode,
        }.get(self.kind)
        return self.kind if extra is None else f"{self.kind}({extra})"


def apm_lambda(lambda3: float) -> float:
    """Resolution of the constant Potts model equivalent to an absolute Potts model."""
    if lambda3 == -1:
        raise RuleError("lambda3 == -1 has no equivalent")
    return lambda3 / (lambda3 + 1.0)


def balanced_weight(t, gamma):
    """Logistic propagation strength for update-time position ``t`` in (0, 1]."""
    return 1.0 / (1.0 + np.exp(-gamma * (2.0 * np.asarray(t, dtype=float) - 1.0)))


# -- state -----------------------------------------------------------------


@dataclass
class RuleState:
    """Labels and their incrementally maintained aggregates.

    Labels must lie in ``0..n-1``. ``sizes``/``group_degrees`` are indexed
    by label; ``own_weight[i]`` is k_i^{g_i} (loop included once).
    """

    graph: Graph
    labels: np.ndarray
    sizes: np.ndarray
    group_degrees: np.ndarray
    own_weight: np.ndarray
    prefs: np.ndarray
    positions: np.ndarray | None = None

    @classmethod
    def from_labels(cls, g: Graph, labels=None, prefs=None, positions=None):
        if labels is None:
            labels = np.arange(g.n, dtype=np.int64)
        labels = np.array(labels, dtype=np.int64)
        if labels.size and (labels.min() < 0 or labels.max() >= g.n):
            labels = dense_labels(labels)
        prefs = np.ones(g.n) if prefs is None else np.array(prefs, dtype=float)
        st = cls(g, labels, np.zeros(g.n, np.int64), np.zeros(g.n), np.zeros(g.n), prefs, positions)
        st.recount()
        return st

    def recount(self):
        g = self.graph
        self.sizes = np.bincount(self.labels, minlength=g.n).astype(np.int64)
        self.group_degrees = np.bincount(self.labels, weights=g.degree, minlength=g.n)
        rows = np.repeat(np.arange(g.n), np.diff(g.indptr))
        same = self.labels[rows] == self.labels[g.indices]
        self.own_weight = g.loops + np.bincount(rows[same], weights=g.weights[same], minlength=g.n)
        return self

    def move(self, i, new):
        """Relabel node i, updating aggregates incrementally."""
        g = self.graph
        old = self.labels[i]
        if old == new:
            return
        self.labels[i] = new
        self.sizes[old] -= 1
        self.sizes[new] += 1
        self.group_degrees[old] -= g.degree[i]
        self.group_degrees[new] += g.degree[i]
        nbr, w = g.neighbors(i)
        own = g.loops[i]
        for j, wij in zip(nbr.tolist(), w.tolist()):
            if self.labels[j] == old:
                self.own_weight[j] -= wij
            elif self.labels[j] == new:
                self.own_weight[j] += wij
                own += wij
        self.own_weight[i] = own

    def is_consistent(self, atol=0.0):
        fresh = RuleState(self.graph, self.labels.copy(), self.sizes, self.group_degrees,
                          self.own_weight, self.prefs).recount()
        return (np.array_equal(fresh.sizes, self.sizes)
                and np.allclose(fresh.group_degrees, self.group_degrees, rtol=0, atol=atol)
                and np.allclose(fresh.own_weight, self.own_weight, rtol=0, atol=atol))


# -- reference scores --------------------------------------------------------


def _linear(i, state, mult=None):
    g = state.graph
    own = int(state.labels[i])
    scores = {}
    if g.loops[i] != 0:
        scores[own] = g.loops[i] * (1.0 if mult is None else mult[i])
    nbr, w = g.neighbors(i)
    for j, wij in zip(nbr.tolist(), w.tolist()):
        lab = int(state.labels[j])
        scores[lab] = scores.get(lab, 0.0) + wij * (1.0 if mult is None else mult[j])
    if not scores:
        scores[own] = 0.0
    return scores


def score_standard(i, state: RuleState):
    """Weighted count of neighbor labels (loops vote for the node's own label)."""
    return _linear(i, state)


def score_cpm(i, state: RuleState, lambda1: float):
    """k_i^g - lambda1 * n_g, with node i excluded from its own group's size."""
    own = int(state.labels[i])
    scores = _linear(i, state)
    scores.setdefault(own, 0.0)
    return {g: s - lambda1 * (state.sizes[g] - (g == own)) for g, s in scores.items()}


def score_modularity(i, state: RuleState, lambda2: float):
    own = int(state.labels[i])
    ki = state.graph.degree[i]
    scores = _linear(i, state)
    scores.setdefault(own, 0.0)
    return {g: s - lambda2 * ki * (state.group_degrees[g] - (ki if g == own else 0.0))
            for g, s in scores.items()}


def score_preference(i, state: RuleState, prefs, mode="promote"):
    prefs = np.asarray(prefs, dtype=float)
    mult = prefs if mode == "promote" else 1.0 - prefs
    return _linear(i, state, mult)


def defensive_pref_update(i, state: RuleState) -> float:
    """New preference of node i after it joined its current group."""
    g = state.graph
    nbr, w = g.neighbors(i)
    gi = state.labels[i]
    p = 0.0
    for j, wij in zip(nbr.tolist(), w.tolist()):
        if state.labels[j] == gi and state.own_weight[j] > 0:
            p += state.prefs[j] / state.own_weight[j] * wij
    return p if p > 0 else 1.0


def probabilistic_sync_update(i, state: RuleState, rng) -> int:
    """Sample a label with probability proportional to self-vote plus neighbor weight."""
    own = int(state.labels[i])
    scores = _linear(i, state)
    mass = dict(scores)
    mass[own] = mass.get(own, 0.0) + 1.0
    labs = sorted(g for g, v in mass.items() if v > 0)
    if not labs:
        return own
    p = np.array([mass[g] for g in labs])
    return int(labs[rng.choice(len(labs), p=p / p.sum())])


def score_neighborhood_strength(i, state: RuleState):
    """Neighbor votes weighted by (1 + number of common neighbors)."""
    g = state.graph
    own = int(state.labels[i])
    ni = set(g.neighbors(i)[0].tolist())
    scores = {}
    if g.loops[i] != 0:
        scores[own] = g.loops[i]
    nbr, w = g.neighbors(i)
    for j, wij in zip(nbr.tolist(), w.tolist()):
        common = len(ni & set(g.neighbors(j)[0].tolist()) - {i, j})
        lab = int(state.labels[j])
        scores[lab] = scores.get(lab, 0.0) + (1 + common) * wij
    return scores or {own: 0.0}


def _hop_degree(g: Graph):
    """Degree without loops, used by the two-hop normalization."""
    return g.degree - 2.0 * g.loops


def score_general_tau(i, state: RuleState, tau: float):
    """Direct votes weighted by tau plus two-hop votes weighted by 1 - tau."""
    g = state.graph
    own = int(state.labels[i])
    scores = {}
    if tau != 0:
        for lab, s in _linear(i, state).items():
            scores[lab] = tau * s
    if tau != 1:
        hop = _hop_degree(g)
        nbr, w = g.neighbors(i)
        for k, wik in zip(nbr.tolist(), w.tolist()):
            if hop[k] - 1 <= 0:
                continue
            nk, wk = g.neighbors(k)
            for j, wkj in zip(nk.tolist(), wk.tolist()):
                if j == i:
                    continue
                lab = int(state.labels[j])
                scores[lab] = scores.get(lab, 0.0) + (1 - tau) * wik * wkj / (hop[k] - 1)
    return scores or {own: 0.0}


def score_citation(i, state: RuleState, mode="cocitation"):
    """Votes through shared cited papers (cocitation) or shared citing papers."""
    g = state.graph
    if not g.directed:
        raise RuleError("citation rules need a directed graph")
    own = int(state.labels[i])
    first = g.neighbors if mode == "cocitation" else g.in_neighbors
    second = g.in_neighbors if mode == "cocitation" else g.neighbors
    scores = {}
    ks, wk = first(i)
    for k, a in zip(ks.tolist(), wk.tolist()):
        js, wj = second(k)
        for j, b in zip(js.tolist(), wj.tolist()):
            if j == i:
                continue
            lab = int(state.labels[j])
            scores[lab] = scores.get(lab, 0.0) + a * b
    return scores or {own: 0.0}


# -- preferences -------------------------------------------------------------


def eigenvector_prefs(g: Graph, p, tol=1e-10, max_iter=1000):
    """Per-group leading eigenvector of the within-group adjacency, max entry 1.

    Uses power iteration on A + I (same eigenvectors, no bipartite
    oscillation). Returns ``(prefs, converged)``; nodes with no in-group
    weight get preference 1.
    """
    labels = p.labels if isinstance(p, Partition) else np.asarray(p)
    lab = dense_labels(labels)
    ngroups = int(lab.max()) + 1 if lab.size else 0
    rows = np.repeat(np.arange(g.n), np.diff(g.indptr))
    inside = lab[rows] == lab[g.indices]
    import scipy.sparse as sp

    a = sp.csr_matrix((g.weights[inside], (rows[inside], g.indices[inside])), shape=(g.n, g.n))
    a = a + sp.diags(g.loops + 1.0)
    x = np.ones(g.n)
    converged = False
    for _ in range(max_iter):
        y = a @ x
        top = np.zeros(ngroups)
        np.maximum.at(top, lab, y)
        y = y / top[lab]
        change = np.max(np.abs(y - x) / np.maximum(np.abs(y), 1e-300)) if g.n else 0.0
        x = y
        if change < tol:
            converged = True
            break
    return x, converged
