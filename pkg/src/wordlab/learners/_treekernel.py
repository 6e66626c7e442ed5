"""Compiled tree growing and traversal.

Targets are sparse per-sample vectors ``(ent_ptr, ent_idx, ent_val)`` in CSR
layout. A node's impurity is its weighted sum of squared errors over all
outputs; for 0/1 targets that is proportional to the mean per-output Gini
index, and for one real output it is the usual variance criterion. The best
split maximizes ``sum_j cL_j^2 / WL + sum_j cR_j^2 / WR`` where ``c`` are the
weighted target sums of each side.

Samples reach the root pre-sorted along every feature (``order``). Children
inherit sorted segments through a stable partition, so no node ever sorts.

Randomness (feature subsets, ExtraTrees thresholds) comes from a splitmix64
stream seeded per tree.
"""
import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)


@njit(cache=True)
def _next_u64(state):
    state[0] = state[0] + _GOLDEN
    z = state[0]
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return z ^ (z >> _S31)


@njit(cache=True)
def _uniform(state):
    return float(_next_u64(state) >> _S11) * (1.0 / 9007199254740992.0)


@njit(cache=True)
def _below(state, bound):
    return int(_uniform(state) * bound)


@njit(cache=True)
def _gather(samples, lo, hi, w, ent_ptr, ent_idx, ent_val, c, mark, touched, stamp):
    """Accumulate weighted target sums of ``samples[lo:hi]`` into ``c``."""
    W = 0.0
    wv2 = 0.0
    n_touched = 0
    for p in range(lo, hi):
        s = samples[p]
        ws = w[s]
        W += ws
        for e in range(ent_ptr[s], ent_ptr[s + 1]):
            j = ent_idx[e]
            v = ent_val[e]
            if mark[j] != stamp:
                mark[j] = stamp
                touched[n_touched] = j
                n_touched += 1
            c[j] += ws * v
            wv2 += ws * v * v
    return W, wv2, n_touched


@njit(cache=True)
def _emit_leaf(W, n_touched, c, touched, leaf_idx, leaf_val, pos):
    for t in range(n_touched):
        j = touched[t]
        leaf_idx[pos] = j
        leaf_val[pos] = c[j] / W if W > 0.0 else 0.0
        pos += 1
    return pos


@njit(cache=True)
def grow(X, order, w, ent_ptr, ent_idx, ent_val, n_out,
         max_depth, min_leaf, max_features, random_split, seed):
    n_feat = X.shape[1]
    n_act = order.shape[1]
    cap = 2 * n_act + 1
    feature = np.full(cap, -1, np.int32)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, np.int32)
    right = np.full(cap, -1, np.int32)
    leaf_start = np.zeros(cap, np.int64)
    leaf_end = np.zeros(cap, np.int64)
    node_depth = np.zeros(cap, np.int32)

    nnz = 0
    for p in range(n_act):
        s = order[0, p]
        nnz += ent_ptr[s + 1] - ent_ptr[s]
    leaf_idx = np.empty(max(nnz, 1), np.int32)
    leaf_val = np.empty(max(nnz, 1))
    n_leaf_ent = 0

    state = np.empty(1, np.uint64)
    state[0] = seed
    feats = np.arange(n_feat)
    c = np.zeros(n_out)
    cl = np.zeros(n_out)
    touched = np.empty(n_out, np.int64)
    mark = np.full(n_out, -1, np.int64)
    goes_left = np.zeros(X.shape[0], np.bool_)
    buf = np.empty(n_act, order.dtype)

    st_node = np.empty(cap, np.int64)
    st_start = np.empty(cap, np.int64)
    st_end = np.empty(cap, np.int64)
    top = 0
    st_node[0] = 0
    st_start[0] = 0
    st_end[0] = n_act
    top = 1
    n_nodes = 1

    while top > 0:
        top -= 1
        node = st_node[top]
        start = st_start[top]
        end = st_end[top]
        depth = node_depth[node]
        cnt = end - start

        # node statistics
        W, wv2, n_touched = _gather(order[0], start, end, w, ent_ptr, ent_idx,
                                    ent_val, c, mark, touched, node)
        sumsq = 0.0
        for t in range(n_touched):
            sumsq += c[touched[t]] * c[touched[t]]
        # a side carrying (almost) no weight is not a usable child
        wmin = 1e-12 * W
        sse = wv2 - sumsq / W if W > 0.0 else 0.0

        best_f = -1
        best_thr = 0.0
        best_proxy = -np.inf
        splittable = (
            (max_depth < 0 or depth < max_depth)
            and cnt >= 2 * min_leaf
            and sse > 1e-12 * (wv2 + 1e-300)
        )
        if splittable:
            # visit features in a random order until max_features
            # non-constant ones have been examined
            if max_features < n_feat or random_split:
                for i in range(n_feat - 1, 0, -1):
                    r = _below(state, i + 1)
                    tmp = feats[i]
                    feats[i] = feats[r]
                    feats[r] = tmp
            else:
                for i in range(n_feat):
                    feats[i] = i
            examined = 0
            for fi in range(n_feat):
                if examined >= max_features:
                    break
                f = feats[fi]
                lo = X[order[f, start], f]
                hi = X[order[f, end - 1], f]
                if not lo < hi:
                    continue
                examined += 1
                if random_split:
                    thr = lo + _uniform(state) * (hi - lo)
                    if thr >= hi:
                        thr = lo
                    WL = 0.0
                    sl = 0.0
                    sr = sumsq
                    nl = 0
                    for p in range(start, end):
                        s = order[f, p]
                        if X[s, f] > thr:
                            break
                        ws = w[s]
                        for e in range(ent_ptr[s], ent_ptr[s + 1]):
                            j = ent_idx[e]
                            a = ws * ent_val[e]
                            old = cl[j]
                            new = old + a
                            sl += new * new - old * old
                            oldr = c[j] - old
                            newr = oldr - a
                            sr += newr * newr - oldr * oldr
                            cl[j] = new
                        WL += ws
                        nl += 1
                    if (nl >= min_leaf and cnt - nl >= min_leaf
                            and WL > wmin and W - WL > wmin):
                        proxy = sl / WL + sr / (W - WL)
                        if proxy > best_proxy or (proxy == best_proxy and f < best_f):
                            best_proxy = proxy
                            best_f = f
                            best_thr = thr
                    for p in range(start, start + nl):
                        s = order[f, p]
                        for e in range(ent_ptr[s], ent_ptr[s + 1]):
                            cl[ent_idx[e]] = 0.0
                else:
                    WL = 0.0
                    sl = 0.0
                    sr = sumsq
                    cand_proxy = -np.inf
                    cand_thr = 0.0
                    for p in range(start, end - 1):
                        s = order[f, p]
                        ws = w[s]
                        for e in range(ent_ptr[s], ent_ptr[s + 1]):
                            j = ent_idx[e]
                            a = ws * ent_val[e]
                            old = cl[j]
                            new = old + a
                            sl += new * new - old * old
                            oldr = c[j] - old
                            newr = oldr - a
                            sr += newr * newr - oldr * oldr
                            cl[j] = new
                        WL += ws
                        nl = p - start + 1
                        x0 = X[s, f]
                        x1 = X[order[f, p + 1], f]
                        if (x0 < x1 and nl >= min_leaf and cnt - nl >= min_leaf
                                and WL > wmin and W - WL > wmin):
                            proxy = sl / WL + sr / (W - WL)
                            if proxy > cand_proxy:
                                cand_proxy = proxy
                                thr = 0.5 * (x0 + x1)
                                if thr >= x1:
                                    thr = x0
                                cand_thr = thr
                    for p in range(start, end):
                        s = order[f, p]
                        for e in range(ent_ptr[s], ent_ptr[s + 1]):
                            cl[ent_idx[e]] = 0.0
                    if cand_proxy > best_proxy or (cand_proxy == best_proxy and f < best_f):
                        if cand_proxy > -np.inf:
                            best_proxy = cand_proxy
                            best_f = f
                            best_thr = cand_thr

        if best_f < 0:
            leaf_start[node] = n_leaf_ent
            n_leaf_ent = _emit_leaf(W, n_touched, c, touched, leaf_idx, leaf_val, n_leaf_ent)
            leaf_end[node] = n_leaf_ent
        for t in range(n_touched):
            c[touched[t]] = 0.0
        if best_f < 0:
            continue

        n_left = 0
        for p in range(start, end):
            s = order[0, p]
            gl = X[s, best_f] <= best_thr
            goes_left[s] = gl
            if gl:
                n_left += 1
        lnode = n_nodes
        rnode = n_nodes + 1
        n_nodes += 2
        feature[node] = best_f
        threshold[node] = best_thr
        left[node] = lnode
        right[node] = rnode
        node_depth[lnode] = depth + 1
        node_depth[rnode] = depth + 1
        if max_depth >= 0 and depth + 1 >= max_depth:
            # both children are leaves: build them from a scratch copy and
            # leave ``order`` untouched
            a = 0
            b = n_left
            for p in range(start, end):
                s = order[0, p]
                if goes_left[s]:
                    buf[a] = s
                    a += 1
                else:
                    buf[b] = s
                    b += 1
            for child, lo, hi in ((lnode, 0, n_left), (rnode, n_left, cnt)):
                Wc, _, nt = _gather(buf, lo, hi, w, ent_ptr, ent_idx, ent_val,
                                    c, mark, touched, child)
                leaf_start[child] = n_leaf_ent
                n_leaf_ent = _emit_leaf(Wc, nt, c, touched, leaf_idx, leaf_val, n_leaf_ent)
                leaf_end[child] = n_leaf_ent
                for t in range(nt):
                    c[touched[t]] = 0.0
            continue
        for f in range(n_feat):
            a = 0
            b = n_left
            for p in range(start, end):
                s = order[f, p]
                if goes_left[s]:
                    buf[a] = s
                    a += 1
                else:
                    buf[b] = s
                    b += 1
            for q in range(cnt):
                order[f, start + q] = buf[q]

        # right first so the left subtree is grown next
        st_node[top] = rnode
        st_start[top] = start + n_left
        st_end[top] = end
        top += 1
        st_node[top] = lnode
        st_start[top] = start
        st_end[top] = start + n_left
        top += 1

    return (feature[:n_nodes].copy(), threshold[:n_nodes].copy(),
            left[:n_nodes].copy(), right[:n_nodes].copy(),
            leaf_start[:n_nodes].copy(), leaf_end[:n_nodes].copy(),
            leaf_idx[:n_leaf_ent].copy(), leaf_val[:n_leaf_ent].copy(),
            node_depth[:n_nodes].copy())


@njit(cache=True)
def apply(X, feature, threshold, left, right):
    out = np.empty(X.shape[0], np.int64)
    for i in range(X.shape[0]):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = node
    return out


@njit(cache=True)
def accumulate(X, feature, threshold, left, right, leaf_start, leaf_end,
               leaf_idx, leaf_val, out, scale):
    """Add ``scale`` times each row's leaf vector into ``out``."""
    for i in range(X.shape[0]):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        for e in range(leaf_start[node], leaf_end[node]):
            out[i, leaf_idx[e]] += scale * leaf_val[e]
