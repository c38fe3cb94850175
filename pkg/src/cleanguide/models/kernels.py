"""Hot numeric kernels with numba-compiled and pure-numpy implementations.

The compiled path is used when numba imports cleanly and the environment
variable ``CLEANGUIDE_NUMBA`` is not set to ``0``/``false``/``off``. Both
paths implement the same algorithm with the same tie-breaking, so results
agree; ``benchmarks/bench_kernels.py`` times them against each other.
"""

import os

import numpy as np


def _numba_wanted():
    flag = os.environ.get("CLEANGUIDE_NUMBA", "auto").strip().lower()
    return flag not in ("0", "false", "off", "no")


# -- pure numpy implementations ----------------------------------------------

def np_knn_predict(train_x, train_y, test_x, k, n_classes):
    """k-nearest vote per test row; ties resolved toward the smaller class."""
    d2 = (np.sum(test_x**2, axis=1)[:, None]
          + np.sum(train_x**2, axis=1)[None, :]
          - 2.0 * test_x @ train_x.T)
    order = np.argsort(d2, axis=1, kind="stable")[:, :k]
    votes = train_y[order]
    counts = np.zeros((len(test_x), n_classes), dtype=np.int64)
    for c in range(n_classes):
        counts[:, c] = np.sum(votes == c, axis=1)
    return np.argmax(counts, axis=1).astype(np.int64)


def np_logistic_newton(x, y, l2, max_iter, tol):
    """Newton iterations on L2-regularized log-loss (binary 0/1, free bias).

    Converges to optimizer precision, so downstream F1 is a stable function
    of the data rather than of the optimization path.
    """
    n, d = x.shape
    wb = np.zeros(d + 1)
    aug = np.column_stack([x, np.ones(n)])
    reg = l2 * np.eye(d + 1)
    reg[d, d] = 0.0
    for _ in range(max_iter):
        p = 1.0 / (1.0 + np.exp(-np.clip(aug @ wb, -500.0, 500.0)))
        grad = aug.T @ (p - y) / n + reg @ wb
        if np.max(np.abs(grad)) < tol:
            break
        weights = np.maximum(p * (1.0 - p), 1e-10)
        hess = (aug * weights[:, None]).T @ aug / n + reg
        wb = wb - np.linalg.solve(hess, grad)
    return wb[:d], wb[d]


def np_hinge_gd(x, y, c_reg, lr, epochs, tol):
    """Subgradient descent on mean hinge loss + (0.5/C)·||w||² (labels ±1)."""
    n, d = x.shape
    w = np.zeros(d)
    b = 0.0
    for t in range(epochs):
        margins = y * (x @ w + b)
        active = margins < 1.0
        gw = -(x[active].T @ y[active]) / n + w / c_reg
        gb = -np.sum(y[active]) / n
        step = lr / np.sqrt(1.0 + t)
        w -= step * gw
        b -= step * gb
        if max(np.max(np.abs(gw)), abs(gb)) < tol:
            break
    return w, b


def np_tree_fit(x, g, max_depth, min_leaf):
    """Greedy least-squares regression tree on gradients; array-encoded nodes.

    Node arrays: feature (-1 at leaves), threshold, left/right child ids,
    value (leaf mean). Split gain is the usual sum-of-squares reduction,
    computed in sorted order so both kernel paths accumulate identically.
    """
    n = len(g)
    max_nodes = 2 ** (max_depth + 1) - 1
    feat = np.full(max_nodes, -1, dtype=np.int64)
    thresh = np.zeros(max_nodes)
    left = np.full(max_nodes, -1, dtype=np.int64)
    right = np.full(max_nodes, -1, dtype=np.int64)
    value = np.zeros(max_nodes)

    idx = np.arange(n, dtype=np.int64)
    # stack entries: (node id, start, end, depth) over idx[start:end]
    stack = [(0, 0, n, 0)]
    n_nodes = 1
    while stack:
        node, start, end, depth = stack.pop()
        seg = idx[start:end]
        gseg = g[seg]
        # sequential accumulation, matching the compiled kernel bit for bit
        total = float(np.cumsum(gseg)[-1])
        count = end - start
        value[node] = total / count
        if depth >= max_depth or count < 2 * min_leaf:
            continue
        best_gain = 1e-12
        best_f = -1
        best_pos = -1
        best_thresh = 0.0
        base = total * total / count
        for j in range(x.shape[1]):
            col = x[seg, j]
            order = np.argsort(col, kind="stable")
            sv = col[order]
            sg = gseg[order]
            csum = np.cumsum(sg)
            for p in range(min_leaf - 1, count - min_leaf):
                if sv[p] == sv[p + 1]:
                    continue
                nl = p + 1
                sl = csum[p]
                sr = total - sl
                gain = sl * sl / nl + sr * sr / (count - nl) - base
                if gain > best_gain:
                    best_gain = gain
                    best_f = j
                    best_pos = p
                    best_thresh = 0.5 * (sv[p] + sv[p + 1])
        if best_f < 0:
            continue
        col = x[seg, best_f]
        go_left = col <= best_thresh
        # stable partition keeps relative row order on both sides
        idx[start:end] = np.concatenate([seg[go_left], seg[~go_left]])
        mid = start + int(np.sum(go_left))
        feat[node] = best_f
        thresh[node] = best_thresh
        left[node] = n_nodes
        right[node] = n_nodes + 1
        stack.append((n_nodes, start, mid, depth + 1))
        stack.append((n_nodes + 1, mid, end, depth + 1))
        n_nodes += 2
    return feat, thresh, left, right, value


def np_tree_predict(feat, thresh, left, right, value, x):
    out = np.empty(len(x))
    for i in range(len(x)):
        node = 0
        while feat[node] >= 0:
            node = left[node] if x[i, feat[node]] <= thresh[node] else right[node]
        out[i] = value[node]
    return out


# -- numba mirrors -------------------------------------------------------------

HAS_NUMBA = False
if _numba_wanted():
    try:
        from numba import njit
        HAS_NUMBA = True
    except ImportError:
        HAS_NUMBA = False

if HAS_NUMBA:

    @njit(cache=True)
    def nb_knn_predict(train_x, train_y, test_x, k, n_classes):
        n_tr, d = train_x.shape
        n_te = test_x.shape[0]
        preds = np.empty(n_te, dtype=np.int64)
        best_d = np.empty(k)
        best_i = np.empty(k, dtype=np.int64)
        for i in range(n_te):
            m = 0
            for j in range(n_tr):
                dist = 0.0
                for a in range(d):
                    diff = test_x[i, a] - train_x[j, a]
                    dist += diff * diff
                if m < k:
                    # insert into the current top list, keeping it sorted
                    pos = m
                    while pos > 0 and best_d[pos - 1] > dist:
                        best_d[pos] = best_d[pos - 1]
                        best_i[pos] = best_i[pos - 1]
                        pos -= 1
                    best_d[pos] = dist
                    best_i[pos] = j
                    m += 1
                elif dist < best_d[k - 1]:
                    pos = k - 1
                    while pos > 0 and best_d[pos - 1] > dist:
                        best_d[pos] = best_d[pos - 1]
                        best_i[pos] = best_i[pos - 1]
                        pos -= 1
                    best_d[pos] = dist
                    best_i[pos] = j
            counts = np.zeros(n_classes, dtype=np.int64)
            for a in range(m):
                counts[train_y[best_i[a]]] += 1
            best_c = 0
            for c in range(1, n_classes):
                if counts[c] > counts[best_c]:
                    best_c = c
            preds[i] = best_c
        return preds

    @njit(cache=True)
    def nb_logistic_newton(x, y, l2, max_iter, tol):
        n, d = x.shape
        wb = np.zeros(d + 1)
        grad = np.zeros(d + 1)
        hess = np.zeros((d + 1, d + 1))
        for _ in range(max_iter):
            for a in range(d + 1):
                grad[a] = 0.0
                for bcol in range(d + 1):
                    hess[a, bcol] = 0.0
            for i in range(n):
                z = wb[d]
                for a in range(d):
                    z += x[i, a] * wb[a]
                if z > 500.0:
                    z = 500.0
                elif z < -500.0:
                    z = -500.0
                p = 1.0 / (1.0 + np.exp(-z))
                diff = p - y[i]
                weight = p * (1.0 - p)
                if weight < 1e-10:
                    weight = 1e-10
                for a in range(d):
                    grad[a] += x[i, a] * diff
                    for bcol in range(a, d):
                        hess[a, bcol] += weight * x[i, a] * x[i, bcol]
                    hess[a, d] += weight * x[i, a]
                grad[d] += diff
                hess[d, d] += weight
            gmax = 0.0
            for a in range(d + 1):
                grad[a] /= n
                if a < d:
                    grad[a] += l2 * wb[a]
                if abs(grad[a]) > gmax:
                    gmax = abs(grad[a])
            if gmax < tol:
                break
            for a in range(d + 1):
                for bcol in range(a, d + 1):
                    hess[a, bcol] /= n
                    if a == bcol and a < d:
                        hess[a, bcol] += l2
                    hess[bcol, a] = hess[a, bcol]
            wb = wb - np.linalg.solve(hess, grad)
        return wb[:d], wb[d]

    @njit(cache=True)
    def nb_hinge_gd(x, y, c_reg, lr, epochs, tol):
        n, d = x.shape
        w = np.zeros(d)
        b = 0.0
        gw = np.zeros(d)
        for t in range(epochs):
            for a in range(d):
                gw[a] = 0.0
            gb = 0.0
            for i in range(n):
                z = b
                for a in range(d):
                    z += x[i, a] * w[a]
                if y[i] * z < 1.0:
                    for a in range(d):
                        gw[a] -= x[i, a] * y[i]
                    gb -= y[i]
            gmax = abs(gb / n)
            for a in range(d):
                gw[a] = gw[a] / n + w[a] / c_reg
                if abs(gw[a]) > gmax:
                    gmax = abs(gw[a])
            step = lr / np.sqrt(1.0 + t)
            for a in range(d):
                w[a] -= step * gw[a]
            b -= step * gb / n
            if gmax < tol:
                break
        return w, b

    @njit(cache=True)
    def nb_tree_fit(x, g, max_depth, min_leaf):
        n = len(g)
        max_nodes = 2 ** (max_depth + 1) - 1
        feat = np.full(max_nodes, -1, dtype=np.int64)
        thresh = np.zeros(max_nodes)
        left = np.full(max_nodes, -1, dtype=np.int64)
        right = np.full(max_nodes, -1, dtype=np.int64)
        value = np.zeros(max_nodes)

        idx = np.arange(n, dtype=np.int64)
        stack_node = np.empty(max_nodes, dtype=np.int64)
        stack_start = np.empty(max_nodes, dtype=np.int64)
        stack_end = np.empty(max_nodes, dtype=np.int64)
        stack_depth = np.empty(max_nodes, dtype=np.int64)
        stack_node[0] = 0
        stack_start[0] = 0
        stack_end[0] = n
        stack_depth[0] = 0
        top = 1
        n_nodes = 1
        buf = np.empty(n, dtype=np.int64)
        while top > 0:
            top -= 1
            node = stack_node[top]
            start = stack_start[top]
            end = stack_end[top]
            depth = stack_depth[top]
            count = end - start
            total = 0.0
            for p in range(start, end):
                total += g[idx[p]]
            value[node] = total / count
            if depth >= max_depth or count < 2 * min_leaf:
                continue
            best_gain = 1e-12
            best_f = -1
            best_thresh = 0.0
            base = total * total / count
            seg = idx[start:end]
            for j in range(x.shape[1]):
                col = np.empty(count)
                for p in range(count):
                    col[p] = x[seg[p], j]
                order = np.argsort(col, kind="mergesort")
                csum = 0.0
                for p in range(count - 1):
                    csum += g[seg[order[p]]]
                    if p + 1 < min_leaf or count - p - 1 < min_leaf:
                        continue
                    if col[order[p]] == col[order[p + 1]]:
                        continue
                    nl = p + 1
                    sl = csum
                    sr = total - sl
                    gain = sl * sl / nl + sr * sr / (count - nl) - base
                    if gain > best_gain:
                        best_gain = gain
                        best_f = j
                        best_thresh = 0.5 * (col[order[p]] + col[order[p + 1]])
            if best_f < 0:
                continue
            nl = 0
            for p in range(start, end):
                if x[idx[p], best_f] <= best_thresh:
                    nl += 1
            a = 0
            b = nl
            for p in range(start, end):
                if x[idx[p], best_f] <= best_thresh:
                    buf[a] = idx[p]
                    a += 1
                else:
                    buf[b] = idx[p]
                    b += 1
            for p in range(count):
                idx[start + p] = buf[p]
            mid = start + nl
            feat[node] = best_f
            thresh[node] = best_thresh
            left[node] = n_nodes
            right[node] = n_nodes + 1
            stack_node[top] = n_nodes
            stack_start[top] = start
            stack_end[top] = mid
            stack_depth[top] = depth + 1
            top += 1
            stack_node[top] = n_nodes + 1
            stack_start[top] = mid
            stack_end[top] = end
            stack_depth[top] = depth + 1
            top += 1
            n_nodes += 2
        return feat, thresh, left, right, value

    @njit(cache=True)
    def nb_tree_predict(feat, thresh, left, right, value, x):
        out = np.empty(len(x))
        for i in range(len(x)):
            node = 0
            while feat[node] >= 0:
                if x[i, feat[node]] <= thresh[node]:
                    node = left[node]
                else:
                    node = right[node]
            out[i] = value[node]
        return out

    knn_predict = nb_knn_predict
    logistic_newton = nb_logistic_newton
    hinge_gd = nb_hinge_gd
    tree_fit = nb_tree_fit
    tree_predict = nb_tree_predict
else:
    knn_predict = np_knn_predict
    logistic_newton = np_logistic_newton
    hinge_gd = np_hinge_gd
    tree_fit = np_tree_fit
    tree_predict = np_tree_predict
