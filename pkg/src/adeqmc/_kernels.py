"""Numba kernels for the hot loops: storage dispatch, outage chains, CART.

Everything here is deterministic given its inputs; tree growing takes an
explicit per-tree seed for its feature subsampling.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def markov_capacity(caps, u0, u, availability, p_fail, p_repair):
    """Total available capacity trace under per-generator two-state chains."""
    n_gen, n_hours = u.shape
    out = np.zeros(n_hours)
    for g in range(n_gen):
        up = u0[g] < availability
        for t in range(n_hours):
            if up:
                if u[g, t] < p_fail:
                    up = False
            else:
                if u[g, t] < p_repair:
                    up = True
            if up:
                out[t] += caps[g]
    return out


@njit(cache=True)
def _waterfill_discharge(power, soc, bound, d, target):
    """Allocate `target` MWh of discharge across units, equalizing the
    post-discharge time-to-empty soc/power (water-filling from the top).

    bound[i] = min(power[i], soc[i]); target < sum(bound).  Writes the
    per-unit discharge into d.
    """
    n = power.size
    bp = np.empty(2 * n)
    m = 0
    for i in range(n):
        if bound[i] > 0.0:
            bp[m] = (soc[i] - bound[i]) / power[i]
            bp[m + 1] = soc[i] / power[i]
            m += 2
    bps = np.sort(bp[:m])
    # g(lam) = sum_i clip(soc_i - lam*p_i, 0, bound_i) is piecewise linear and
    # non-increasing; find the segment bracketing the target and interpolate.
    lam = bps[m - 1]
    prev_l = bps[0]
    prev_g = -1.0
    for k in range(m):
        g = 0.0
        for i in range(n):
            if bound[i] > 0.0:
                x = soc[i] - bps[k] * power[i]
                if x < 0.0:
                    x = 0.0
                elif x > bound[i]:
                    x = bound[i]
                g += x
        if g <= target:
            if k == 0:
                lam = bps[0]
            elif prev_g > g:
                lam = bps[k] - (target - g) * (bps[k] - prev_l) / (prev_g - g)
            else:
                lam = bps[k]
            break
        prev_l = bps[k]
        prev_g = g
    total = 0.0
    for i in range(n):
        if bound[i] > 0.0:
            x = soc[i] - lam * power[i]
            if x < 0.0:
                x = 0.0
            elif x > bound[i]:
                x = bound[i]
            d[i] = x
            total += x
        else:
            d[i] = 0.0
    # absorb float residual so the served energy matches exactly
    resid = target - total
    for i in range(n):
        if resid == 0.0:
            break
        if resid > 0.0:
            room = bound[i] - d[i]
            if room > 0.0:
                add = resid if resid < room else room
                d[i] += add
                resid -= add
        else:
            take = d[i]
            if take > 0.0:
                sub = -resid if -resid < take else take
                d[i] -= sub
                resid += sub


@njit(cache=True)
def _waterfill_charge(power, soc, bound, d, eff, target):
    """Allocate `target` MW of grid-side charging, raising the lowest
    time-to-empty units first toward a common level.

    bound[i] = min(power[i], headroom_i/eff); target < sum(bound)."""
    n = power.size
    bp = np.empty(2 * n)
    m = 0
    for i in range(n):
        if bound[i] > 0.0:
            bp[m] = soc[i] / power[i]
            bp[m + 1] = (soc[i] + eff * bound[i]) / power[i]
            m += 2
    bps = np.sort(bp[:m])
    # g(lam) = sum_i clip((lam*p_i - soc_i)/eff, 0, bound_i), non-decreasing
    lam = bps[m - 1]
    prev_l = bps[0]
    prev_g = -1.0
    for k in range(m):
        g = 0.0
        for i in range(n):
            if bound[i] > 0.0:
                x = (bps[k] * power[i] - soc[i]) / eff
                if x < 0.0:
                    x = 0.0
                elif x > bound[i]:
                    x = bound[i]
                g += x
        if g >= target:
            if k == 0:
                lam = bps[0]
            elif g > prev_g:
                lam = prev_l + (target - prev_g) * (bps[k] - prev_l) / (g - prev_g)
            else:
                lam = bps[k]
            break
        prev_l = bps[k]
        prev_g = g
    total = 0.0
    for i in range(n):
        if bound[i] > 0.0:
            x = (lam * power[i] - soc[i]) / eff
            if x < 0.0:
                x = 0.0
            elif x > bound[i]:
                x = bound[i]
            d[i] = x
            total += x
        else:
            d[i] = 0.0
    resid = target - total
    for i in range(n):
        if resid == 0.0:
            break
        if resid > 0.0:
            room = bound[i] - d[i]
            if room > 0.0:
                add = resid if resid < room else room
                d[i] += add
                resid -= add
        else:
            take = d[i]
            if take > 0.0:
                sub = -resid if -resid < take else take
                d[i] -= sub
                resid += sub


@njit(cache=True)
def dispatch(margin, power, cap, soc0, eff, eps):
    """Greedy shortfall-minimizing dispatch over an hourly margin trace.

    Shortfall hours discharge as much as feasible (units balanced by
    descending time-to-empty); surplus hours recharge as much as feasible
    (ascending time-to-empty).  Returns (lol, ens, final_soc).
    """
    n = power.size
    soc = soc0.copy()
    bound = np.empty(n)
    d = np.empty(n)
    lol = 0
    ens = 0.0
    for t in range(margin.size):
        z = margin[t]
        if z < 0.0:
            need = -z
            avail = 0.0
            for i in range(n):
                b = power[i] if power[i] < soc[i] else soc[i]
                if b < 0.0:
                    b = 0.0
                bound[i] = b
                avail += b
            served = need if need < avail else avail
            if served > 0.0:
                if served >= avail:
                    for i in range(n):
                        soc[i] -= bound[i]
                else:
                    _waterfill_discharge(power, soc, bound, d, served)
                    for i in range(n):
                        soc[i] -= d[i]
                        if soc[i] < 0.0:
                            soc[i] = 0.0
            residual = need - served
            if residual > eps:
                lol += 1
                ens += residual
        elif z > 0.0:
            room = 0.0
            for i in range(n):
                if power[i] > 0.0:
                    b = (cap[i] - soc[i]) / eff
                    if power[i] < b:
                        b = power[i]
                    if b < 0.0:
                        b = 0.0
                else:
                    b = 0.0
                bound[i] = b
                room += b
            take = z if z < room else room
            if take > 0.0:
                if take >= room:
                    for i in range(n):
                        soc[i] += eff * bound[i]
                else:
                    _waterfill_charge(power, soc, bound, d, eff, take)
                    for i in range(n):
                        soc[i] += eff * d[i]
                for i in range(n):
                    if soc[i] > cap[i]:
                        soc[i] = cap[i]
    return lol, ens, soc


@njit(cache=True)
def build_tree(X, y, boot_idx, max_depth, min_leaf, n_sub, seed):
    """Grow one CART regression tree on X[boot_idx], y[boot_idx].

    Splits minimize the summed child SSE over a random subset of n_sub
    features; thresholds are midpoints between consecutive distinct values.
    Ties are broken toward the lowest feature index, then lowest threshold.
    max_depth < 0 means unbounded.

    Returns (feature, threshold, left, right, value) with child indices
    local to this tree; feature == -1 marks a leaf.
    """
    np.random.seed(seed)
    n = boot_idx.size
    n_features = X.shape[1]
    max_nodes = 2 * n
    feat = np.full(max_nodes, -1, np.int32)
    thr = np.zeros(max_nodes)
    left = np.full(max_nodes, -1, np.int32)
    right = np.full(max_nodes, -1, np.int32)
    val = np.zeros(max_nodes)
    idx = boot_idx.astype(np.int64)
    st_node = np.empty(max_nodes, np.int64)
    st_lo = np.empty(max_nodes, np.int64)
    st_hi = np.empty(max_nodes, np.int64)
    st_depth = np.empty(max_nodes, np.int64)
    perm = np.empty(n_features, np.int64)
    n_nodes = 1
    sp = 1
    st_node[0] = 0
    st_lo[0] = 0
    st_hi[0] = n
    st_depth[0] = 0
    while sp > 0:
        sp -= 1
        node = st_node[sp]
        lo = st_lo[sp]
        hi = st_hi[sp]
        depth = st_depth[sp]
        m = hi - lo
        s = 0.0
        ss = 0.0
        for k in range(lo, hi):
            yv = y[idx[k]]
            s += yv
            ss += yv * yv
        mean = s / m
        val[node] = mean
        sse = ss - s * s / m
        if (
            m < 2 * min_leaf
            or (max_depth >= 0 and depth >= max_depth)
            or sse <= m * 1e-12 * (1.0 + mean * mean)
        ):
            continue
        # random feature subset (partial Fisher-Yates), scanned in index order
        for j in range(n_features):
            perm[j] = j
        for j in range(n_sub):
            r = j + np.random.randint(0, n_features - j)
            tmp = perm[j]
            perm[j] = perm[r]
            perm[r] = tmp
        feats = np.sort(perm[:n_sub].copy())
        best_sse = sse - 1e-12 * (1.0 + sse)
        best_feat = -1
        best_thr = 0.0
        vals = np.empty(m)
        for jj in range(n_sub):
            f = feats[jj]
            for k in range(m):
                vals[k] = X[idx[lo + k], f]
            order = np.argsort(vals)
            ls = 0.0
            lss = 0.0
            for k in range(m - 1):
                yv = y[idx[lo + order[k]]]
                ls += yv
                lss += yv * yv
                if vals[order[k + 1]] > vals[order[k]]:
                    nl = k + 1
                    nr = m - nl
                    if nl >= min_leaf and nr >= min_leaf:
                        rs = s - ls
                        rss = ss - lss
                        cand = (lss - ls * ls / nl) + (rss - rs * rs / nr)
                        if cand < best_sse:
                            best_sse = cand
                            best_feat = f
                            best_thr = 0.5 * (vals[order[k]] + vals[order[k + 1]])
        if best_feat < 0:
            continue
        # stable partition of idx[lo:hi] around the split
        seg = idx[lo:hi].copy()
        p = lo
        for k in range(m):
            if X[seg[k], best_feat] <= best_thr:
                idx[p] = seg[k]
                p += 1
        nl = p - lo
        for k in range(m):
            if X[seg[k], best_feat] > best_thr:
                idx[p] = seg[k]
                p += 1
        feat[node] = best_feat
        thr[node] = best_thr
        left[node] = n_nodes
        right[node] = n_nodes + 1
        st_node[sp] = n_nodes
        st_lo[sp] = lo
        st_hi[sp] = lo + nl
        st_depth[sp] = depth + 1
        st_node[sp + 1] = n_nodes + 1
        st_lo[sp + 1] = lo + nl
        st_hi[sp + 1] = hi
        st_depth[sp + 1] = depth + 1
        sp += 2
        n_nodes += 2
    return (
        feat[:n_nodes].copy(),
        thr[:n_nodes].copy(),
        left[:n_nodes].copy(),
        right[:n_nodes].copy(),
        val[:n_nodes].copy(),
    )


@njit(cache=True)
def forest_predict_all(feat, thr, left, right, val, offsets, X):
    """Per-tree predictions for each row of X; shape (n_trees, n_rows)."""
    n_trees = offsets.size - 1
    n_rows = X.shape[0]
    out = np.empty((n_trees, n_rows))
    for t in range(n_trees):
        root = offsets[t]
        for r in range(n_rows):
            node = root
            while feat[node] >= 0:
                if X[r, feat[node]] <= thr[node]:
                    node = root + left[node]
                else:
                    node = root + right[node]
            out[t, r] = val[node]
    return out
