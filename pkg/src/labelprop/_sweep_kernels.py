"""Compiled propagation kernels.

Codes shared with the Python side (see ``engine``):

score kind      0 linear, 1 size-penalized (cpm), 2 degree-penalized (modularity)
tie policy      0 random, 1 retention, 2 inclusion, 3 smallest label
pref mode       0 none, 1 fixed promote, 2 fixed suppress,
                3 defensive diffusion, 4 offensive diffusion
"""

import math

import numpy as np

from ._accel import njit

REL_TOL = 1e-10


@njit
def _mult(j, mode, prefs, gmax, labels):
    if mode == 0:
        return 1.0
    if mode == 1 or mode == 3:
        return prefs[j]
    if mode == 2:
        return 1.0 - prefs[j]
    top = gmax[labels[j]]
    r = 1.0
    if top > 0.0:
        r = prefs[j] / top
        if r > 1.0:
            r = 1.0
    return 1.0 - r


@njit
def _collect(i, indptr, indices, weights, selfw, labels, kind, lam, mode, prefs, gmax, bal,
             size, kg, deg, acc, acc2, mark, cands, stamp):
    """Fill acc[label] (rule score) and acc2[label] (plain score); return candidate count."""
    own = labels[i]
    mark[own] = stamp
    sw = selfw[i] * _mult(i, mode, prefs, gmax, labels) * bal[i]
    acc[own] = sw
    acc2[own] = selfw[i]
    cands[0] = own
    nc = 1
    for e in range(indptr[i], indptr[i + 1]):
        j = indices[e]
        g = labels[j]
        w = weights[e]
        if mark[g] != stamp:
            mark[g] = stamp
            acc[g] = 0.0
            acc2[g] = 0.0
            cands[nc] = g
            nc += 1
        acc[g] += _mult(j, mode, prefs, gmax, labels) * bal[j] * w
        acc2[g] += w
    if kind == 1:
        for t in range(nc):
            g = cands[t]
            acc[g] -= lam * (size[g] - (1 if g == own else 0))
    elif kind == 2:
        ki = deg[i]
        for t in range(nc):
            g = cands[t]
            acc[g] -= lam * ki * (kg[g] - (ki if g == own else 0.0))
    return nc


@njit
def _tol(best):
    return REL_TOL * abs(best)


@njit
def _decide(i, u, indptr, indices, weights, selfw, labels, kind, lam, tie, bonus, prob, mode,
            prefs, gmax, bal, size, kg, deg, acc, acc2, mark, cands, maxset, stamp):
    own = labels[i]
    nc = _collect(i, indptr, indices, weights, selfw, labels, kind, lam, mode, prefs, gmax, bal,
                  size, kg, deg, acc, acc2, mark, cands, stamp)
    if prob:
        srt = np.sort(cands[:nc])
        total = 0.0
        for t in range(nc):
            g = srt[t]
            mass = acc[g] + (1.0 if g == own else 0.0)
            if mass > 0.0:
                total += mass
        if total <= 0.0:
            return own
        target = u * total
        run = 0.0
        last = own
        for t in range(nc):
            g = srt[t]
            mass = acc[g] + (1.0 if g == own else 0.0)
            if mass > 0.0:
                run += mass
                last = g
                if target < run:
                    return g
        return last
    if tie == 2:
        acc[own] += bonus
    best = acc[cands[0]]
    for t in range(1, nc):
        s = acc[cands[t]]
        if s > best:
            best = s
    lim = best - _tol(best)
    k = 0
    for t in range(nc):
        g = cands[t]
        if acc[g] >= lim:
            maxset[k] = g
            k += 1
    if mode == 4 and k > 1:
        # offensive scores vanish at group cores; fall back to plain counts
        best2 = acc2[maxset[0]]
        for t in range(1, k):
            if acc2[maxset[t]] > best2:
                best2 = acc2[maxset[t]]
        lim2 = best2 - _tol(best2)
        k2 = 0
        for t in range(k):
            g = maxset[t]
            if acc2[g] >= lim2:
                maxset[k2] = g
                k2 += 1
        k = k2
    if k == 1:
        return maxset[0]
    if tie == 1:
        for t in range(k):
            if maxset[t] == own:
                return own
    if tie == 3:
        low = maxset[0]
        for t in range(1, k):
            if maxset[t] < low:
                low = maxset[t]
        return low
    srt = np.sort(maxset[:k])
    pick = int(u * k)
    if pick >= k:
        pick = k - 1
    return srt[pick]


@njit
def _apply(i, new, indptr, indices, weights, selfw, labels, size, kg, kin, deg, mode, prefs):
    old = labels[i]
    labels[i] = new
    size[old] -= 1
    size[new] += 1
    kg[old] -= deg[i]
    kg[new] += deg[i]
    own_in = selfw[i]
    for e in range(indptr[i], indptr[i + 1]):
        j = indices[e]
        w = weights[e]
        gj = labels[j]
        if gj == old:
            kin[j] -= w
        elif gj == new:
            kin[j] += w
            own_in += w
    kin[i] = own_in
    if mode == 3 or mode == 4:
        p = 0.0
        for e in range(indptr[i], indptr[i + 1]):
            j = indices[e]
            if labels[j] == new and kin[j] > 0.0:
                p += prefs[j] / kin[j] * weights[e]
        if p <= 0.0:
            p = 1.0
        prefs[i] = p


@njit
def sweep(indptr, indices, weights, selfw, labels, order, class_ptr, u,
          kind, lam, tie, bonus, prob, mode, prefs, gmax, bal,
          size, kg, kin, deg, active, use_active,
          acc, acc2, mark, cands, maxset, newbuf, stamp0):
    """One iteration over the node classes in ``order``.

    Returns ``(relabel_count, last_stamp)``.

    Nodes within a class decide from the same state, then all moves apply.
    """
    changes = 0
    stamp = stamp0
    ncls = class_ptr.shape[0] - 1
    for c in range(ncls):
        s = class_ptr[c]
        e = class_ptr[c + 1]
        for t in range(s, e):
            i = order[t]
            if use_active and active[i] == 0:
                newbuf[t] = labels[i]
                continue
            stamp += 1
            newbuf[t] = _decide(i, u[i], indptr, indices, weights, selfw, labels, kind, lam, tie,
                                bonus, prob, mode, prefs, gmax, bal, size, kg, deg,
                                acc, acc2, mark, cands, maxset, stamp)
        for t in range(s, e):
            i = order[t]
            new = newbuf[t]
            if use_active and active[i] == 0:
                continue
            if new != labels[i]:
                _apply(i, new, indptr, indices, weights, selfw, labels, size, kg, kin, deg, mode, prefs)
                changes += 1
                if use_active:
                    for f in range(indptr[i], indptr[i + 1]):
                        active[indices[f]] = 1
            if use_active:
                active[i] = 0
    return changes, stamp


@njit
def recompute_state(indptr, indices, weights, selfw, labels, deg, size, kg, kin):
    n = labels.shape[0]
    size[:] = 0
    kg[:] = 0.0
    for i in range(n):
        g = labels[i]
        size[g] += 1
        kg[g] += deg[i]
        s = selfw[i]
        for e in range(indptr[i], indptr[i + 1]):
            if labels[indices[e]] == g:
                s += weights[e]
        kin[i] = s


@njit
def equilibrium_violations(indptr, indices, weights, selfw, labels, kind, lam, mode, prefs, gmax,
                           bal, size, kg, deg, acc, acc2, mark, cands):
    """Count nodes whose own label scores strictly below their best candidate."""
    bad = 0
    n = labels.shape[0]
    for i in range(n):
        nc = _collect(i, indptr, indices, weights, selfw, labels, kind, lam, mode, prefs, gmax, bal,
                      size, kg, deg, acc, acc2, mark, cands, i + 1)
        best = acc[cands[0]]
        for t in range(1, nc):
            if acc[cands[t]] > best:
                best = acc[cands[t]]
        if acc[labels[i]] < best - _tol(best):
            bad += 1
    return bad


@njit
def slpa_iteration(indptr, indices, weights, order, memory, mem_len, pick_u, tie_u, acc, mark, cands, stamp0):
    """One listener pass of memory-based propagation.

    ``pick_u`` holds one uniform per CSR entry (the speaker draw),
    ``tie_u`` one per node.
    """
    stamp = stamp0
    for t in range(order.shape[0]):
        i = order[t]
        if indptr[i] == indptr[i + 1]:
            continue
        stamp += 1
        nc = 0
        for e in range(indptr[i], indptr[i + 1]):
            j = indices[e]
            ln = mem_len[j]
            r = int(pick_u[e] * ln)
            if r >= ln:
                r = ln - 1
            g = memory[j, r]
            if mark[g] != stamp:
                mark[g] = stamp
                acc[g] = 0.0
                cands[nc] = g
                nc += 1
            acc[g] += weights[e]
        best = acc[cands[0]]
        for q in range(1, nc):
            if acc[cands[q]] > best:
                best = acc[cands[q]]
        k = 0
        for q in range(nc):
            if acc[cands[q]] >= best - 1e-10 * abs(best):
                cands[k] = cands[q]
                k += 1
        srt = np.sort(cands[:k])
        pick = int(tie_u[i] * k)
        if pick >= k:
            pick = k - 1
        memory[i, mem_len[i]] = srt[pick]
        mem_len[i] += 1
    return stamp


@njit
def logistic_balance(positions, n, gamma, out):
    for j in range(positions.shape[0]):
        t = (positions[j] + 1.0) / n
        out[j] = 1.0 / (1.0 + math.exp(-gamma * (2.0 * t - 1.0)))
