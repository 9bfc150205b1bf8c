"""Objective functions, quality measures and partition statistics.

All pair sums run over ordered pairs (i, j): an edge inside a group counts
twice and a loop of weight w contributes 2w, matching node degrees. Directed
graphs are evaluated on their undirected version.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import Graph, Partition, dense_labels


def _labels(p):
    lab = p.labels if isinstance(p, Partition) else np.asarray(p)
    return dense_labels(lab)


def _undirected(g):
    return g.to_undirected() if g.directed else g


def _same_mask(g, lab):
    rows = np.repeat(np.arange(g.n), np.diff(g.indptr))
    return lab[rows] == lab[g.indices]


def objective_f(g: Graph, labels) -> float:
    """Sum of W_ij over ordered pairs sharing a label (equals 2(m - cut))."""
    g = _undirected(g)
    lab = _labels(labels)
    return float(g.weights[_same_mask(g, lab)].sum() + 2.0 * g.loops.sum())


def cut_weight(g: Graph, labels) -> float:
    """Total weight of edges joining different groups (each edge once)."""
    g = _undirected(g)
    lab = _labels(labels)
    return float(g.weights[~_same_mask(g, lab)].sum() / 2.0)


def penalty(g: Graph, labels, which="G1") -> float:
    """G1 = sum of squared group sizes, G2 = sum of squared group degrees."""
    lab = _labels(labels)
    if which == "G1":
        return float((np.bincount(lab).astype(float) ** 2).sum())
    if which == "G2":
        return float((np.bincount(lab, weights=_undirected(g).degree) ** 2).sum())
    raise ValueError("penalty is 'G1' or 'G2'")


def hamiltonian(g: Graph, labels, variant="plain", lam=0.0) -> float:
    """Potts-model energy of a labeling.

    ``plain``: -F; ``cpm``: -(F - lam*G1); ``deg``: -(F - lam*G2);
    ``apm``: -((lam + 1) F - lam*G1).
    """
    f = objective_f(g, labels)
    if variant == "plain":
        return -f
    if variant == "cpm":
        return -(f - lam * penalty(g, labels, "G1"))
    if variant == "deg":
        return -(f - lam * penalty(g, labels, "G2"))
    if variant == "apm":
        return -((lam + 1.0) * f - lam * penalty(g, labels, "G1"))
    raise ValueError(f"unknown Hamiltonian variant {variant!r}")


def modularity_q(g: Graph, labels) -> float:
    g = _undirected(g)
    if g.m == 0:
        raise ValueError("modularity is undefined for a graph without edges")
    two_m = 2.0 * g.m
    return (objective_f(g, labels) - penalty(g, labels, "G2") / two_m) / two_m


def _entropy(counts, n):
    p = counts[counts > 0] / n
    return float(-(p * np.log(p)).sum())


def nmi(a, b) -> float:
    """Mutual information normalized by the arithmetic mean of the entropies.

    Two single-group partitions score 1 by convention.
    """
    la = _labels(a)
    lb = _labels(b)
    if la.shape != lb.shape:
        raise ValueError("partitions cover different node sets")
    n = la.size
    if n == 0:
        return 1.0
    ka, kb = int(la.max()) + 1, int(lb.max()) + 1
    joint = np.bincount(la * kb + lb, minlength=ka * kb).reshape(ka, kb).astype(float)
    ha = _entropy(joint.sum(axis=1), n)
    hb = _entropy(joint.sum(axis=0), n)
    if ha == 0.0 and hb == 0.0:
        return 1.0
    pa = joint.sum(axis=1) / n
    pb = joint.sum(axis=0) / n
    nz = joint > 0
    pij = joint[nz] / n
    mi = float((pij * np.log(pij / np.outer(pa, pb)[nz])).sum())
    return float(min(1.0, max(0.0, mi / (0.5 * (ha + hb)))))


def degeneracy_stats(p, tiny=3):
    """(fraction of nodes in groups of at most ``tiny`` nodes, largest group fraction)."""
    lab = _labels(p)
    n = lab.size
    sizes = np.bincount(lab)
    return float(sizes[sizes <= tiny].sum() / n), float(sizes.max() / n)


@dataclass(frozen=True)
class ObjectiveReport:
    F: float
    H: float
    H1: float
    H2: float
    H3: float
    lambda1: float
    lambda2: float
    lambda3: float
    Q: float
    cut: float

    def as_dict(self):
        return dict(self.__dict__)


def objective_report(g: Graph, labels, lambda1=0.0, lambda2=None, lambda3=0.0) -> ObjectiveReport:
    u = _undirected(g)
    lambda2 = 1.0 / (2.0 * u.m) if lambda2 is None and u.m > 0 else (lambda2 or 0.0)
    return ObjectiveReport(
        F=objective_f(u, labels),
        H=hamiltonian(u, labels),
        H1=hamiltonian(u, labels, "cpm", lambda1),
        H2=hamiltonian(u, labels, "deg", lambda2),
        H3=hamiltonian(u, labels, "apm", lambda3),
        lambda1=lambda1, lambda2=lambda2, lambda3=lambda3,
        Q=modularity_q(u, labels) if u.m > 0 else float("nan"),
        cut=cut_weight(u, labels),
    )
