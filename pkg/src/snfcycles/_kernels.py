"""Compiled Metropolis-Hastings inner loops.

All randomness is generated by the caller with numpy and passed in, so the
kernels are deterministic functions of their arguments.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def cer_flip_chain(x, centroid, flips, log_u, log_odds, burnin, thin, out):
    """Per-pair flip proposals targeting a CER density.

    ``log_odds`` is ``log(alpha) - log(1 - alpha)``: the change in log
    density per extra disagreement with ``centroid``. ``x`` is updated in
    place and ends at the final state. Returns the number of accepted moves.
    """
    n_steps, m = flips.shape
    accepted = 0
    kept = 0
    for t in range(n_steps):
        delta = 0
        for k in range(m):
            if flips[t, k]:
                if x[k] != centroid[k]:
                    delta -= 1
                else:
                    delta += 1
        if log_u[t] < delta * log_odds:
            for k in range(m):
                if flips[t, k]:
                    x[k] = 1 - x[k]
            accepted += 1
        if t >= burnin and (t - burnin) % thin == thin - 1:
            if kept < out.shape[0]:
                for k in range(m):
                    out[kept, k] = x[k]
                kept += 1
    return accepted


@njit(cache=True)
def table_flip_chain(code, flip_codes, log_u, log_target, burnin, thin, out):
    """Same dynamics on integer graph codes with a tabulated log target."""
    n_steps = flip_codes.shape[0]
    accepted = 0
    kept = 0
    for t in range(n_steps):
        prop = code ^ flip_codes[t]
        if log_u[t] < log_target[prop] - log_target[code]:
            code = prop
            accepted += 1
        if t >= burnin and (t - burnin) % thin == thin - 1:
            if kept < out.shape[0]:
                out[kept] = code
                kept += 1
    return code, accepted


def warm_up():
    x = np.zeros(3, dtype=np.uint8)
    out = np.zeros((1, 3), dtype=np.uint8)
    cer_flip_chain(x, x.copy(), np.zeros((2, 3), dtype=np.bool_), np.zeros(2), -1.0, 0, 1, out)
    table_flip_chain(np.int64(0), np.zeros(2, dtype=np.int64), np.zeros(2), np.zeros(8),
                     0, 1, np.zeros(1, dtype=np.int64))


@njit(cache=True)
def grow_tree(X, r, orders, max_depth, min_leaf, feature, threshold, left, right, value):
    """Level-wise exact greedy regression tree on residuals ``r``.

    ``orders[f]`` lists the rows sorted by feature ``f``. Node arrays must
    hold ``2 ** (max_depth + 1) - 1`` entries; returns the number used.
    A row goes left when ``X[row, feature] <= threshold``.
    """
    n, n_feat = X.shape
    cap = feature.shape[0]
    node_of = np.zeros(n, dtype=np.int64)
    cnt = np.zeros(cap, dtype=np.int64)
    tot = np.zeros(cap)
    for i in range(n):
        cnt[0] += 1
        tot[0] += r[i]
    n_nodes = 1
    level_start, level_end = 0, 1
    sl = np.zeros(cap)
    nl = np.zeros(cap, dtype=np.int64)
    lastv = np.zeros(cap)
    best_gain = np.zeros(cap)
    best_feat = np.full(cap, -1, dtype=np.int64)
    best_thr = np.zeros(cap)
    for k in range(cap):
        feature[k] = -1
        left[k] = -1
        right[k] = -1
    value[0] = tot[0] / cnt[0]
    for depth in range(max_depth):
        for k in range(level_start, level_end):
            best_gain[k] = 0.0
            best_feat[k] = -1
        for f in range(n_feat):
            for k in range(level_start, level_end):
                sl[k] = 0.0
                nl[k] = 0
            for j in range(n):
                i = orders[f, j]
                k = node_of[i]
                if k < level_start:
                    continue
                x = X[i, f]
                c = cnt[k]
                m = nl[k]
                if m >= min_leaf and c - m >= min_leaf and x > lastv[k]:
                    s = sl[k]
                    g = s * s / m + (tot[k] - s) ** 2 / (c - m) - tot[k] * tot[k] / c
                    if g > best_gain[k] + 1e-12:
                        best_gain[k] = g
                        best_feat[k] = f
                        thr = 0.5 * (lastv[k] + x)
                        # adjacent floats: the midpoint may round up to x
                        best_thr[k] = thr if thr < x else lastv[k]
                sl[k] += r[i]
                nl[k] += 1
                lastv[k] = x
        new_start = n_nodes
        for k in range(level_start, level_end):
            if best_feat[k] >= 0:
                feature[k] = best_feat[k]
                threshold[k] = best_thr[k]
                left[k] = n_nodes
                right[k] = n_nodes + 1
                cnt[n_nodes] = 0
                cnt[n_nodes + 1] = 0
                tot[n_nodes] = 0.0
                tot[n_nodes + 1] = 0.0
                n_nodes += 2
        if n_nodes == new_start:
            break
        for i in range(n):
            k = node_of[i]
            if k < level_start:
                continue
            if feature[k] < 0:
                node_of[i] = -1
                continue
            child = left[k] if X[i, feature[k]] <= threshold[k] else right[k]
            node_of[i] = child
            cnt[child] += 1
            tot[child] += r[i]
        for k in range(new_start, n_nodes):
            value[k] = tot[k] / cnt[k]
        level_start, level_end = new_start, n_nodes
    return n_nodes


@njit(cache=True)
def tree_apply(X, feature, threshold, left, right, value, out, scale):
    """``out += scale * tree(X)``."""
    for i in range(X.shape[0]):
        k = 0
        while feature[k] >= 0:
            if X[i, feature[k]] <= threshold[k]:
                k = left[k]
            else:
                k = right[k]
        out[i] += scale * value[k]


@njit(cache=True)
def brandes_batch(mat, rows, cols, n, out):
    """Unnormalised betweenness (each unordered pair once) for every graph
    row of the 0/1 pair matrix ``mat``."""
    k_graphs, m = mat.shape
    adj = np.zeros((n, n), dtype=np.int64)
    deg = np.zeros(n, dtype=np.int64)
    sigma = np.zeros(n)
    delta = np.zeros(n)
    dist = np.zeros(n, dtype=np.int64)
    order = np.zeros(n, dtype=np.int64)
    for g in range(k_graphs):
        deg[:] = 0
        for p in range(m):
            if mat[g, p]:
                i = rows[p]
                j = cols[p]
                adj[i, deg[i]] = j
                deg[i] += 1
                adj[j, deg[j]] = i
                deg[j] += 1
        for v in range(n):
            out[g, v] = 0.0
        for s in range(n):
            if deg[s] == 0:
                continue
            for v in range(n):
                sigma[v] = 0.0
                delta[v] = 0.0
                dist[v] = -1
            sigma[s] = 1.0
            dist[s] = 0
            order[0] = s
            head = 0
            tail = 1
            while head < tail:
                v = order[head]
                head += 1
                for q in range(deg[v]):
                    w = adj[v, q]
                    if dist[w] < 0:
                        dist[w] = dist[v] + 1
                        order[tail] = w
                        tail += 1
                    if dist[w] == dist[v] + 1:
                        sigma[w] += sigma[v]
            for idx in range(tail - 1, 0, -1):
                w = order[idx]
                for q in range(deg[w]):
                    v = adj[w, q]
                    if dist[v] == dist[w] - 1:
                        delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w])
                out[g, w] += delta[w]
        for v in range(n):
            out[g, v] *= 0.5
