"""Compiled kernels used by the graph core."""

import numpy as np

from ._accel import njit


@njit
def split_components(indptr, indices, labels):
    # Each output group is named by its smallest member id: nodes are
    # scanned in increasing order, so every BFS starts at that member.
    n = labels.shape[0]
    comp = np.full(n, -1, dtype=np.int64)
    stack = np.empty(n, dtype=np.int64)
    for s in range(n):
        if comp[s] >= 0:
            continue
        comp[s] = s
        top = 0
        stack[top] = s
        top += 1
        lab = labels[s]
        while top > 0:
            top -= 1
            v = stack[top]
            for e in range(indptr[v], indptr[v + 1]):
                u = indices[e]
                if comp[u] < 0 and labels[u] == lab:
                    comp[u] = s
                    stack[top] = u
                    top += 1
    return comp


@njit
def greedy_color(indptr, indices, order):
    n = order.shape[0]
    colors = np.full(n, -1, dtype=np.int64)
    mark = np.full(n + 1, -1, dtype=np.int64)
    for t in range(n):
        v = order[t]
        for e in range(indptr[v], indptr[v + 1]):
            u = indices[e]
            c = colors[u]
            if c >= 0:
                mark[c] = v
        c = 0
        while mark[c] == v:
            c += 1
        colors[v] = c
    return colors


@njit
def common_neighbor_counts(indptr, indices):
    # k_ij per stored entry (i, j) via merge of the two sorted rows.
    out = np.zeros(indices.shape[0], dtype=np.float64)
    n = indptr.shape[0] - 1
    for i in range(n):
        for e in range(indptr[i], indptr[i + 1]):
            j = indices[e]
            a = indptr[i]
            b = indptr[j]
            ea = indptr[i + 1]
            eb = indptr[j + 1]
            c = 0
            while a < ea and b < eb:
                x = indices[a]
                y = indices[b]
                if x == y:
                    if x != i and x != j:
                        c += 1
                    a += 1
                    b += 1
                elif x < y:
                    a += 1
                else:
                    b += 1
            out[e] = c
    return out
