"""Seeded benchmark graph generators."""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .cover import Cover
from .graph import Graph, GraphError, Partition, from_arrays

_CHOICE_LIMIT = 20_000_000


@dataclass(frozen=True)
class PlantedSpec:
    n: int
    q: int
    avg_degree: float
    mu: float
    seed: int | None = None

    def __post_init__(self):
        if self.q < 1 or self.n % self.q:
            raise GraphError("n must be divisible by the group count q")
        if not 0 <= self.avg_degree < self.n:
            raise GraphError("avg_degree must lie in [0, n)")
        if not 0.0 <= self.mu <= 1.0:
            raise GraphError("mu must lie in [0, 1]")


def _decode_pairs(idx):
    """Map pair index to (i, j) with i < j, enumerating column-wise."""
    idx = np.asarray(idx, dtype=np.int64)
    j = ((1.0 + np.sqrt(1.0 + 8.0 * idx.astype(np.float64))) / 2.0).astype(np.int64)
    # repair float rounding at large indices
    j = np.where(j * (j - 1) // 2 > idx, j - 1, j)
    j = np.where((j + 1) * j // 2 <= idx, j + 1, j)
    i = idx - j * (j - 1) // 2
    return i, j


def _sample_pairs(rng, s, k):
    """k distinct unordered pairs from s items, uniformly."""
    pop = s * (s - 1) // 2
    if k == 0:
        return np.zeros(0, np.int64), np.zeros(0, np.int64)
    if pop <= _CHOICE_LIMIT:
        idx = rng.choice(pop, size=k, replace=False)
    else:
        idx = _distinct_draws(rng, lambda c: rng.integers(0, pop, size=c), k)
    return _decode_pairs(np.sort(idx))


def _distinct_draws(rng, draw, k):
    """First k distinct values of an iid stream (a uniform k-subset)."""
    seen = np.zeros(0, np.int64)
    while True:
        need = k - seen.size
        batch = np.concatenate([seen, draw(int(need * 1.1) + 16)])
        _, first = np.unique(batch, return_index=True)
        first.sort()
        seen = batch[first]
        if seen.size >= k:
            return seen[:k]


def erdos_renyi(n: int, avg_degree: float, seed=None) -> Graph:
    """G(n, p) with p = avg_degree / (n - 1)."""
    if avg_degree < 0:
        raise GraphError("avg_degree must be >= 0")
    if avg_degree >= n:
        raise GraphError("avg_degree must be below n")
    rng = np.random.default_rng(seed)
    p = avg_degree / (n - 1) if n > 1 else 0.0
    pop = n * (n - 1) // 2
    k = int(rng.binomial(pop, min(p, 1.0))) if pop else 0
    u, v = _sample_pairs(rng, n, k)
    return from_arrays(n, u, v)


def planted_partition(spec: PlantedSpec | None = None, *, n=None, q=None, avg_degree=None, mu=None,
                      seed=None):
    """Equal-size planted groups; returns ``(graph, ground_truth)``.

    Within-group pairs link with p_in = (1 - mu) k / (s - 1) and between-group
    pairs with p_out = mu k / (n - s), so mu is the expected fraction of a
    node's edges leaving its group.
    """
    if spec is None:
        spec = PlantedSpec(n, q, avg_degree, mu, seed)
    n, q, k, mu = spec.n, spec.q, spec.avg_degree, spec.mu
    s = n // q
    p_in = (1.0 - mu) * k / (s - 1) if s > 1 else (0.0 if mu == 1 or k == 0 else math.inf)
    p_out = mu * k / (n - s) if n > s else (0.0 if mu == 0 else math.inf)
    if not (0.0 <= p_in <= 1.0 and 0.0 <= p_out <= 1.0):
        raise GraphError(f"infeasible planted partition (p_in={p_in:.3g}, p_out={p_out:.3g})")
    rng = np.random.default_rng(spec.seed)

    per = s * (s - 1) // 2
    k_in = int(rng.binomial(q * per, p_in)) if per else 0
    if q * per <= _CHOICE_LIMIT:
        idx = rng.choice(q * per, size=k_in, replace=False) if k_in else np.zeros(0, np.int64)
    else:
        idx = _distinct_draws(rng, lambda c: rng.integers(0, q * per, size=c), k_in)
    idx = np.sort(idx)
    grp = idx // per if per else idx
    iu, iv = _decode_pairs(idx % per if per else idx)
    iu, iv = iu + grp * s, iv + grp * s

    ext_pop = n * (n - 1) // 2 - q * per
    k_out = int(rng.binomial(ext_pop, p_out)) if ext_pop else 0

    def draw(c):
        a = rng.integers(0, n, size=c)
        b = rng.integers(0, n - s, size=c)
        start = (a // s) * s
        b = np.where(b >= start, b + s, b)
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        return lo * n + hi

    keys = np.sort(_distinct_draws(rng, draw, k_out)) if k_out else np.zeros(0, np.int64)
    ou, ov = keys // n, keys % n
    g = from_arrays(n, np.concatenate([iu, ou]), np.concatenate([iv, ov]))
    return g, Partition(np.arange(n) // s)


def block_model(sizes, probs, seed=None):
    """Stochastic block model over a small number of blocks; returns ``(graph, blocks)``."""
    sizes = np.asarray(sizes, dtype=np.int64)
    probs = np.asarray(probs, dtype=float)
    q = sizes.size
    if probs.shape != (q, q) or not np.allclose(probs, probs.T):
        raise GraphError("probs must be a symmetric q x q matrix")
    if np.any(probs < 0) or np.any(probs > 1):
        raise GraphError("block probabilities must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    offs = np.concatenate([[0], np.cumsum(sizes)])
    us, vs = [], []
    for a in range(q):
        for b in range(a, q):
            if a == b:
                pop = sizes[a] * (sizes[a] - 1) // 2
                k = int(rng.binomial(pop, probs[a, a])) if pop else 0
                i, j = _sample_pairs(rng, int(sizes[a]), k)
                us.append(i + offs[a])
                vs.append(j + offs[a])
            else:
                pop = int(sizes[a] * sizes[b])
                k = int(rng.binomial(pop, probs[a, b])) if pop else 0
                idx = np.sort(rng.choice(pop, size=k, replace=False)) if k else np.zeros(0, np.int64)
                us.append(idx // sizes[b] + offs[a])
                vs.append(idx % sizes[b] + offs[b])
    n = int(offs[-1])
    g = from_arrays(n, np.concatenate(us), np.concatenate(vs))
    return g, Partition(np.repeat(np.arange(q), sizes))


def nested_planted_partition(group_size=64, k_in=16.0, k_sibling=4.0, k_out=1.0, seed=None):
    """Four planted groups joined pairwise into two supergroups.

    Expected degree splits into ``k_in`` inside the group, ``k_sibling`` to the
    sibling group and ``k_out`` to the other supergroup. Returns
    ``(graph, fine_truth, coarse_truth)``.
    """
    s = group_size
    p_in = k_in / (s - 1)
    p_sib = k_sibling / s
    p_out = k_out / (2 * s)
    probs = np.full((4, 4), p_out)
    for a, b in ((0, 1), (2, 3)):
        probs[a, b] = probs[b, a] = p_sib
    np.fill_diagonal(probs, p_in)
    g, fine = block_model([s] * 4, probs, seed)
    coarse = Partition(fine.labels // 2)
    return g, fine, coarse


def triangular_grid(rows: int, cols: int, removed_edges=()):
    """Triangular lattice on a rows x cols index grid (node r * cols + c).

    Each node links right, down and down-right.
    """
    def node(r, c):
        return r * cols + c

    edges = set()
    for r in range(rows):
        for c in range(cols):
            if c + 1 < cols:
                edges.add((node(r, c), node(r, c + 1)))
            if r + 1 < rows:
                edges.add((node(r, c), node(r + 1, c)))
            if r + 1 < rows and c + 1 < cols:
                edges.add((node(r, c), node(r + 1, c + 1)))
    for u, v in removed_edges:
        e = (min(u, v), max(u, v))
        if e not in edges:
            raise GraphError(f"edge {e} is not part of the grid")
        edges.remove(e)
    e = sorted(edges)
    return from_arrays(rows * cols, [a for a, _ in e], [b for _, b in e])


def grid_crossing_edges(rows, cols, col):
    """Lattice edges joining column ``col`` to column ``col + 1``."""
    out = []
    for r in range(rows):
        out.append((r * cols + col, r * cols + col + 1))
        if r + 1 < rows:
            out.append((r * cols + col, (r + 1) * cols + col + 1))
    return out


def split_grid(rows=6, cols=12):
    """Triangular grid with four edges removed across the middle column.

    The removals thin the seam between the left and right halves. Returns
    ``(graph, halves)``.
    """
    mid = cols // 2 - 1
    crossing = grid_crossing_edges(rows, cols, mid)
    # drop the diagonals of the middle rows to leave a weak seam
    diagonals = [e for e in crossing if e[1] - e[0] != 1]
    k = len(diagonals)
    removed = diagonals[(k - 4) // 2:(k - 4) // 2 + 4]
    g = triangular_grid(rows, cols, removed)
    halves = Partition((np.arange(rows * cols) % cols > mid).astype(np.int64))
    return g, halves


def overlapping_cliques(k: int, s: int):
    """Two k-cliques sharing s nodes; returns ``(graph, ground_truth_cover)``."""
    if not 0 <= s < k:
        raise GraphError("need 0 <= s < k")
    a = list(range(k))
    b = list(range(k - s, 2 * k - s))
    edges = {(min(u, v), max(u, v)) for grp in (a, b) for u in grp for v in grp if u < v}
    e = sorted(edges)
    n = 2 * k - s
    g = from_arrays(n, [x for x, _ in e], [y for _, y in e])
    return g, Cover.from_groups(n, [a, b])


def karate_club() -> Graph:
    """Zachary karate club network (34 nodes, 78 edges), bundled edge list."""
    text = resources.files("labelprop").joinpath("data/karate.txt").read_text()
    pairs = [tuple(map(int, ln.split())) for ln in text.splitlines() if ln and not ln.startswith("#")]
    return from_arrays(34, [u for u, _ in pairs], [v for _, v in pairs])
