"""Sparse graph representation and structural operations.

Undirected graphs store every off-diagonal edge in both CSR rows; loops are
kept apart in ``loops``. A loop of weight w adds 2w to its node's degree, so
``degree.sum() == 2 * m`` always holds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from ._graph_kernels import common_neighbor_counts, greedy_color, split_components


class GraphError(ValueError):
    """Invalid graph construction input."""


def _frozen(a, dtype):
    a = np.ascontiguousarray(a, dtype=dtype)
    a.setflags(write=False)
    return a


def _coalesce(rows, cols, w, n):
    """Sum duplicate (row, col) entries and return CSR arrays sorted by column."""
    if rows.size == 0:
        return np.zeros(n + 1, np.int64), np.zeros(0, np.int64), np.zeros(0, np.float64)
    key = rows * np.int64(n) + cols
    order = np.argsort(key, kind="stable")
    key = key[order]
    w = w[order]
    uniq, start = np.unique(key, return_index=True)
    wsum = np.add.reduceat(w, start)
    keep = wsum != 0.0
    uniq = uniq[keep]
    wsum = wsum[keep]
    r = uniq // n
    c = uniq % n
    indptr = np.zeros(n + 1, np.int64)
    np.cumsum(np.bincount(r, minlength=n), out=indptr[1:])
    return indptr, c.astype(np.int64), wsum.astype(np.float64)


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable weighted (multi)graph in CSR form.

    For directed graphs ``indptr/indices/weights`` hold out-arcs and the
    ``in_*`` arrays hold the transpose.
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray
    loops: np.ndarray
    directed: bool = False
    signed: bool = False
    node_type: np.ndarray | None = None
    names: tuple | None = None
    in_indptr: np.ndarray | None = field(default=None, repr=False)
    in_indices: np.ndarray | None = field(default=None, repr=False)
    in_weights: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        set_ = object.__setattr__
        set_(self, "indptr", _frozen(self.indptr, np.int64))
        set_(self, "indices", _frozen(self.indices, np.int64))
        set_(self, "weights", _frozen(self.weights, np.float64))
        set_(self, "loops", _frozen(self.loops, np.float64))
        if self.node_type is not None:
            set_(self, "node_type", _frozen(self.node_type, np.int64))
        if not np.all(np.isfinite(self.weights)) or not np.all(np.isfinite(self.loops)):
            raise GraphError("non-finite edge weight")
        if not self.signed and (np.any(self.weights < 0) or np.any(self.loops < 0)):
            raise GraphError("negative weights require a signed graph")
        if self.directed and self.in_indptr is None:
            rows = np.repeat(np.arange(self.n, dtype=np.int64), np.diff(self.indptr))
            ip, ii, iw = _coalesce(self.indices.copy(), rows, self.weights.copy(), self.n)
            set_(self, "in_indptr", ip)
            set_(self, "in_indices", ii)
            set_(self, "in_weights", iw)
        for name in ("in_indptr", "in_indices"):
            if getattr(self, name) is not None:
                set_(self, name, _frozen(getattr(self, name), np.int64))
        if self.in_weights is not None:
            set_(self, "in_weights", _frozen(self.in_weights, np.float64))

        rows = np.repeat(np.arange(self.n, dtype=np.int64), np.diff(self.indptr))
        rowsum = np.bincount(rows, weights=self.weights, minlength=self.n)
        if self.directed:
            inrows = np.repeat(np.arange(self.n, dtype=np.int64), np.diff(self.in_indptr))
            insum = np.bincount(inrows, weights=self.in_weights, minlength=self.n)
            degree = rowsum + insum + 2.0 * self.loops
            m = float(self.weights.sum() + self.loops.sum())
        else:
            degree = rowsum + 2.0 * self.loops
            m = float(self.weights.sum() / 2.0 + self.loops.sum())
        set_(self, "degree", _frozen(degree, np.float64))
        set_(self, "m", m)

    # -- basic views -----------------------------------------------------

    def neighbors(self, i):
        s, e = self.indptr[i], self.indptr[i + 1]
        return self.indices[s:e], self.weights[s:e]

    def in_neighbors(self, i):
        if not self.directed:
            return self.neighbors(i)
        s, e = self.in_indptr[i], self.in_indptr[i + 1]
        return self.in_indices[s:e], self.in_weights[s:e]

    def weight(self, i, j):
        if i == j:
            return float(self.loops[i])
        nbr, w = self.neighbors(i)
        k = np.searchsorted(nbr, j)
        if k < nbr.size and nbr[k] == j:
            return float(w[k])
        return 0.0

    @property
    def nnz(self):
        return int(self.indices.size)

    @property
    def max_degree(self):
        counts = np.diff(self.indptr)
        return int(counts.max()) if counts.size else 0

    def edges(self):
        """Return ``(u, v, w)`` arrays listing each edge once (loops included)."""
        rows = np.repeat(np.arange(self.n, dtype=np.int64), np.diff(self.indptr))
        cols = self.indices
        w = self.weights
        if not self.directed:
            keep = rows < cols
            rows, cols, w = rows[keep], cols[keep], w[keep]
        lp = np.flatnonzero(self.loops)
        u = np.concatenate([rows, lp])
        v = np.concatenate([cols, lp])
        ww = np.concatenate([w, self.loops[lp]])
        order = np.lexsort((v, u))
        return u[order], v[order], ww[order]

    def to_undirected(self):
        if not self.directed:
            return self
        u, v, w = self.edges()
        return build_graph(zip(u.tolist(), v.tolist(), w.tolist()), n=self.n, signed=self.signed,
                           node_types=self.node_type, names=self.names)

    def with_weights(self, weights, signed=None):
        """Same structure with replaced off-diagonal CSR weights."""
        return Graph(self.n, self.indptr, self.indices, weights, self.loops,
                     directed=self.directed, signed=self.signed if signed is None else signed,
                     node_type=self.node_type, names=self.names)

    def adjacency(self):
        import scipy.sparse as sp

        a = sp.csr_matrix((self.weights, self.indices, self.indptr), shape=(self.n, self.n))
        return a

    def __repr__(self):
        kind = "directed" if self.directed else "undirected"
        return f"Graph(n={self.n}, m={self.m:g}, {kind}{', signed' if self.signed else ''})"


def from_arrays(n, u, v, w=None, *, directed=False, signed=False, node_types=None, names=None):
    """Vectorized constructor; parallel edges accumulate, u == v becomes a loop."""
    u = np.asarray(u, dtype=np.int64).ravel()
    v = np.asarray(v, dtype=np.int64).ravel()
    w = np.ones(u.size) if w is None else np.asarray(w, dtype=np.float64).ravel()
    if not (u.size == v.size == w.size):
        raise GraphError("edge arrays differ in length")
    if u.size and (u.min() < 0 or v.min() < 0 or u.max() >= n or v.max() >= n):
        raise GraphError(f"node id out of range 0..{n - 1}")
    if not np.all(np.isfinite(w)):
        raise GraphError("non-finite edge weight")
    is_loop = u == v
    loops = np.bincount(u[is_loop], weights=w[is_loop], minlength=n).astype(np.float64)
    u, v, w = u[~is_loop], v[~is_loop], w[~is_loop]
    if directed:
        rows, cols, ww = u, v, w
    else:
        rows = np.concatenate([u, v])
        cols = np.concatenate([v, u])
        ww = np.concatenate([w, w])
    indptr, indices, weights = _coalesce(rows, cols, ww, n)
    if node_types is not None:
        node_types = np.asarray(node_types, dtype=np.int64)
        if node_types.shape != (n,):
            raise GraphError("node_types must give one type per node")
    return Graph(n, indptr, indices, weights, loops, directed=directed, signed=signed,
                 node_type=node_types, names=tuple(names) if names is not None else None)


def build_graph(edge_list: Iterable[Sequence], n: int | None = None, directed: bool = False,
                node_types=None, signed: bool = False, names=None) -> Graph:
    """Build a graph from ``(u, v)`` or ``(u, v, weight)`` tuples.

    Raises GraphError for non-finite weights, ids outside ``0..n-1`` and an
    empty edge list without ``n``.
    """
    us, vs, ws = [], [], []
    for e in edge_list:
        us.append(int(e[0]))
        vs.append(int(e[1]))
        ws.append(float(e[2]) if len(e) > 2 else 1.0)
    if n is None:
        if not us:
            raise GraphError("empty edge list requires an explicit node count")
        n = max(max(us), max(vs)) + 1
    for x in ws:
        if not math.isfinite(x):
            raise GraphError("non-finite edge weight")
    return from_arrays(n, us, vs, ws, directed=directed, signed=signed,
                       node_types=node_types, names=names)


def empty_graph(n):
    return from_arrays(n, [], [])


# -- partitions ------------------------------------------------------------


def dense_labels(labels):
    """Relabel to 0..k-1 in order of first appearance (smallest member first)."""
    labels = np.asarray(labels)
    _, first, inv = np.unique(labels, return_index=True, return_inverse=True)
    rank = np.empty(first.size, np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(first.size)
    return rank[inv.ravel()]


class Partition:
    """Disjoint node labeling with derived group aggregates."""

    __slots__ = ("labels", "_groups")

    def __init__(self, labels):
        self.labels = np.asarray(labels, dtype=np.int64).copy()
        self.labels.setflags(write=False)
        self._groups = None

    @property
    def n(self):
        return int(self.labels.size)

    @property
    def groups(self):
        """Mapping label -> sorted member array."""
        if self._groups is None:
            order = np.argsort(self.labels, kind="stable")
            labs = self.labels[order]
            cut = np.flatnonzero(np.diff(labs)) + 1
            starts = np.r_[0, cut].astype(np.int64)
            self._groups = ({int(labs[s]): members for s, members in zip(starts, np.split(order, cut))}
                            if labs.size else {})
        return self._groups

    @property
    def n_groups(self):
        return int(np.unique(self.labels).size)

    def sizes(self):
        """Dict label -> n_g."""
        lab, cnt = np.unique(self.labels, return_counts=True)
        return dict(zip(lab.tolist(), cnt.tolist()))

    def group_degrees(self, g: Graph):
        """Dict label -> k_g (total degree of the group)."""
        lab, inv = np.unique(self.labels, return_inverse=True)
        kg = np.bincount(inv.ravel(), weights=g.degree, minlength=lab.size)
        return dict(zip(lab.tolist(), kg.tolist()))

    def canonical(self):
        return Partition(dense_labels(self.labels))

    def key(self):
        """Hashable relabel-invariant fingerprint."""
        return dense_labels(self.labels).tobytes()

    def same_as(self, other):
        return self.n == other.n and self.key() == other.key()

    def __eq__(self, other):
        if not isinstance(other, Partition):
            return NotImplemented
        return self.same_as(other)

    def __hash__(self):
        return hash(self.key())

    def __len__(self):
        return self.n

    def __repr__(self):
        return f"Partition(n={self.n}, groups={self.n_groups})"


def _labels_of(p):
    return p.labels if isinstance(p, Partition) else np.asarray(p, dtype=np.int64)


def meet(a, b):
    """Coarsest common refinement of two labelings."""
    a = dense_labels(_labels_of(a))
    b = dense_labels(_labels_of(b))
    return Partition(dense_labels(a * (b.max() + 1 if b.size else 1) + b))


def is_refinement(fine, coarse):
    """True when every group of ``fine`` lies inside one group of ``coarse``."""
    f = dense_labels(_labels_of(fine))
    c = _labels_of(coarse)
    first = np.full(f.max() + 1 if f.size else 0, -1, np.int64)
    first[f[::-1]] = c[::-1]
    return bool(np.all(first[f] == c))


@dataclass(frozen=True)
class Coloring:
    colors: np.ndarray
    n_colors: int

    def classes(self):
        return [np.flatnonzero(self.colors == c) for c in range(self.n_colors)]


# -- operations ------------------------------------------------------------


def split_into_components(g: Graph, labels) -> Partition:
    """Refine ``labels`` so each group is connected within its own label."""
    labels = np.ascontiguousarray(_labels_of(labels), dtype=np.int64)
    if labels.shape != (g.n,):
        raise GraphError("labels must cover every node")
    if g.directed:
        g = g.to_undirected()
    return Partition(split_components(g.indptr, g.indices, labels))


def connected_components(g: Graph) -> Partition:
    return split_into_components(g, np.zeros(g.n, np.int64))


def quotient_graph(g: Graph, p) -> Graph:
    """Meta-network with one node per group (dense label order).

    Meta-edge weights total the original edges between groups; meta-loops
    total the edges inside a group plus its original loops, so ``m`` is
    preserved.
    """
    lab = dense_labels(_labels_of(p))
    if lab.shape != (g.n,):
        raise GraphError("partition must cover every node")
    k = int(lab.max()) + 1 if lab.size else 0
    rows = np.repeat(np.arange(g.n, dtype=np.int64), np.diff(g.indptr))
    gu = lab[rows]
    gv = lab[g.indices]
    inside = gu == gv
    loops = np.bincount(lab, weights=g.loops, minlength=k)
    # Undirected CSR holds each internal edge twice.
    factor = 1.0 if g.directed else 0.5
    loops = loops + factor * np.bincount(gu[inside], weights=g.weights[inside], minlength=k)
    cross = ~inside
    indptr, indices, weights = _coalesce(gu[cross], gv[cross], g.weights[cross], k)
    return Graph(k, indptr, indices, weights, loops, directed=g.directed, signed=g.signed)


def greedy_coloring(g: Graph, order=None) -> Coloring:
    """First-fit coloring in node order (at most max_degree + 1 colors)."""
    if g.directed:
        g = g.to_undirected()
    order = np.arange(g.n, dtype=np.int64) if order is None else np.asarray(order, np.int64)
    colors = greedy_color(g.indptr, g.indices, order)
    return Coloring(colors, int(colors.max()) + 1 if colors.size else 0)


def signed_reweight(g: Graph, scheme="fixed", w_pos=1.0, w_neg=-1.0) -> Graph:
    """Map edge signs to propagation weights.

    ``fixed`` assigns ``w_pos``/``w_neg``; ``equal_total`` assigns
    ``1/m_p`` and ``-1/m_n`` where m_p, m_n count positive and negative edge
    multiplicity.
    """
    sign = np.sign(g.weights)
    mult = np.abs(g.weights)
    if scheme == "fixed":
        if not (w_pos > 0 and w_neg < 0):
            raise GraphError("fixed scheme needs w_pos > 0 and w_neg < 0")
        new = np.where(sign > 0, w_pos, w_neg) * mult
    elif scheme == "equal_total":
        half = 1.0 if g.directed else 0.5
        m_p = half * mult[sign > 0].sum()
        m_n = half * mult[sign < 0].sum()
        if m_p == 0 or m_n == 0:
            raise GraphError("equal_total needs both positive and negative edges")
        new = np.where(sign > 0, mult / m_p, -mult / m_n)
    else:
        raise GraphError(f"unknown reweighting scheme {scheme!r}")
    return g.with_weights(new, signed=True)


def induced_subgraph(g: Graph, nodes):
    """Subgraph on ``nodes`` (re-indexed in sorted order).

    Returns ``(subgraph, sub_to_orig)``; ``orig_to_sub`` is obtained as
    ``{int(o): s for s, o in enumerate(sub_to_orig)}``.
    """
    nodes = np.unique(np.asarray(list(nodes) if not isinstance(nodes, np.ndarray) else nodes, np.int64))
    if nodes.size and (nodes[0] < 0 or nodes[-1] >= g.n):
        raise GraphError("node id out of range")
    pos = np.full(g.n, -1, np.int64)
    pos[nodes] = np.arange(nodes.size)
    rows = np.repeat(np.arange(g.n, dtype=np.int64), np.diff(g.indptr))
    keep = (pos[rows] >= 0) & (pos[g.indices] >= 0)
    indptr, indices, weights = _coalesce(pos[rows[keep]], pos[g.indices[keep]], g.weights[keep], nodes.size)
    sub = Graph(int(nodes.size), indptr, indices, weights, g.loops[nodes], directed=g.directed,
                signed=g.signed,
                node_type=None if g.node_type is None else g.node_type[nodes],
                names=None if g.names is None else tuple(g.names[i] for i in nodes))
    return sub, nodes


def common_neighbors(g: Graph):
    """Common-neighbor count k_ij for every stored CSR entry of ``g``."""
    return common_neighbor_counts(g.indptr, g.indices)
