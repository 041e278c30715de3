"""Compiled round kernels.

The logic mirrors ``step.py`` word for word on the random stream: every round
draws all of its randomness first and only then mutates the loads, so a round
that runs out of buffered words can be retried after a refill.
"""

from __future__ import annotations

import numpy as np
from numba import njit

OK = 0
NEED_RANDOM = 1
NEED_SPACE = 2
OVERFLOW = 3

K_ONE, K_DCHOICE, K_BETA, K_CACHING, K_PACKING, K_OVERPACKING, K_TWINNING, K_THINNING, K_MEAN, K_ETA = range(10)

_TOP = np.uint64(0xFFFFFFFFFFFFFFFF)
_ONE = np.uint64(1)
MAX_SCALED = 1 << 62


@njit(inline="always")
def _below(buf, pos, bound):
    b = np.uint64(bound)
    lim = _TOP - (((_TOP % b) + _ONE) % b)
    while pos < buf.shape[0]:
        r = buf[pos]
        pos += 1
        if r <= lim:
            return np.int64(r % b), pos
    return np.int64(-1), pos


@njit(inline="always")
def _ceil_div(a, b):
    return -((-a) // b)


@njit(cache=True)
def _overpack(x, n, W, i, pl_bin, pl_cnt):
    top = _ceil_div(W, n)
    k = top + 1 - x[i]
    m = 0
    for b in range(n):
        if n * x[b] < W:
            pl_bin[m] = b
            m += 1
    under = pl_bin[:m].copy()
    keys = -x[under]
    order = np.argsort(keys, kind="mergesort")
    j = under[order[0]]
    first = min(k, top - x[j])
    left = k - first
    npl = 1
    pl_bin[0] = j
    pl_cnt[0] = first
    for r in range(1, m):
        if left == 0:
            break
        b = under[order[r]]
        room = top - 1 - x[b]
        if room > 0:
            put = min(room, left)
            pl_bin[npl] = b
            pl_cnt[npl] = put
            npl += 1
            left -= put
    pl_cnt[0] += left
    return npl


@njit(cache=True)
def one_round(kind, params, x, W, t, cache, buf, pos, samp, pl_bin, pl_cnt):
    """Decide one round without touching x.

    Returns (pos, chosen, cache, n_samples, n_placements); pos == -1 means the
    buffer ran dry and nothing should be committed.
    """
    n = x.shape[0]
    ns = 0
    chosen = -1
    if kind == K_DCHOICE or kind == K_BETA:
        d = params[0]
        if kind == K_BETA:
            c, pos = _below(buf, pos, params[2])
            if c < 0:
                return -1, -1, cache, 0, 0
            d = 2 if c < params[1] else 1
        for s in range(d):
            v, pos = _below(buf, pos, n)
            if v < 0:
                return -1, -1, cache, 0, 0
            samp[s] = v
            if chosen < 0 or x[v] < x[chosen] or (x[v] == x[chosen] and v < chosen):
                chosen = v
        ns = d
    elif kind == K_THINNING or kind == K_MEAN or kind == K_ETA:
        two = True
        if kind == K_ETA:
            c, pos = _below(buf, pos, params[2])
            if c < 0:
                return -1, -1, cache, 0, 0
            two = c < params[1]
        i1, pos = _below(buf, pos, n)
        if i1 < 0:
            return -1, -1, cache, 0, 0
        samp[0] = i1
        ns = 1
        chosen = i1
        if two:
            i2, pos = _below(buf, pos, n)
            if i2 < 0:
                return -1, -1, cache, 0, 0
            samp[1] = i2
            ns = 2
            if kind == K_THINNING:
                first = n * x[i1] * params[4] < t * params[4] + n * params[3]
            else:
                first = n * x[i1] < W
            if not first:
                chosen = i2
    else:
        i, pos = _below(buf, pos, n)
        if i < 0:
            return -1, -1, cache, 0, 0
        samp[0] = i
        ns = 1
        chosen = i
        if kind == K_CACHING:
            if cache < 0:
                cache = i
            else:
                samp[1] = cache
                ns = 2
                if x[i] < x[cache]:
                    cache = i
                elif x[i] > x[cache]:
                    chosen = cache

    under = n * x[chosen] < W
    pl_bin[0] = chosen
    pl_cnt[0] = 1
    npl = 1
    if under:
        if kind == K_TWINNING:
            pl_cnt[0] = 2
        elif kind == K_PACKING:
            pl_cnt[0] = _ceil_div(W, n) + 1 - x[chosen]
        elif kind == K_OVERPACKING:
            npl = _overpack(x, n, W, chosen, pl_bin, pl_cnt)
    return pos, chosen, cache, ns, npl


@njit(cache=True, nogil=True)
def advance(kind, params, x, st, buf, pos, stop_round, stop_weight,
            rec_loads, rec_cache, rec_chosen, rec_nsamp, rec_samp, rec_ploff, rec_pbin, rec_pcnt):
    """Run rounds until ``stop_round`` or until W >= ``stop_weight``.

    ``st`` holds [W, round, cache (-1 = none), recorded placements, recording base round].
    Recording arrays of length zero disable recording.
    Returns (pos, status).
    """
    n = x.shape[0]
    samp = np.empty(max(params[0], 2), dtype=np.int64)
    pl_bin = np.empty(n, dtype=np.int64)
    pl_cnt = np.empty(n, dtype=np.int64)
    record = rec_chosen.shape[0] > 0
    keep_loads = rec_loads.shape[0] > 0
    W = st[0]
    t = st[1]
    cache = st[2]
    filled = st[3]
    base = st[4]
    status = OK
    while t < stop_round and W < stop_weight:
        newpos, chosen, newcache, ns, npl = one_round(kind, params, x, W, t, cache, buf, pos, samp, pl_bin, pl_cnt)
        if newpos < 0:
            status = NEED_RANDOM
            break
        w = 0
        for q in range(npl):
            w += pl_cnt[q]
        if (W + w) >= MAX_SCALED // n:
            status = OVERFLOW
            break
        if record:
            if filled + npl > rec_pbin.shape[0]:
                status = NEED_SPACE
                break
            r = t - base
            if keep_loads:
                for b in range(n):
                    rec_loads[r, b] = x[b]
            rec_cache[r] = cache
            rec_chosen[r] = chosen
            rec_nsamp[r] = ns
            for s in range(ns):
                rec_samp[r, s] = samp[s]
            rec_ploff[r] = filled
            for q in range(npl):
                rec_pbin[filled + q] = pl_bin[q]
                rec_pcnt[filled + q] = pl_cnt[q]
            filled += npl
            rec_ploff[r + 1] = filled
        for q in range(npl):
            x[pl_bin[q]] += pl_cnt[q]
        W += w
        t += 1
        cache = newcache
        pos = newpos
    st[0] = W
    st[1] = t
    st[2] = cache
    st[3] = filled
    return pos, status


@njit(cache=True, nogil=True)
def batch_final(kind, params, n, rounds, reps_done, reps, buf, pos, out_x, out_w):
    """Run consecutive independent simulations from empty on one stream.

    Simulation r writes its final loads into out_x[r] and W into out_w[r].
    Returns (pos, next simulation index); stops early when the buffer runs dry,
    rolling back the unfinished simulation.
    """
    samp = np.empty(max(params[0], 2), dtype=np.int64)
    pl_bin = np.empty(n, dtype=np.int64)
    pl_cnt = np.empty(n, dtype=np.int64)
    x = np.zeros(n, dtype=np.int64)
    r = reps_done
    while r < reps:
        start = pos
        x[:] = 0
        W = 0
        cache = -1
        ok = True
        for t in range(rounds):
            newpos, chosen, cache, ns, npl = one_round(kind, params, x, W, t, cache, buf, pos, samp, pl_bin, pl_cnt)
            if newpos < 0:
                ok = False
                break
            for q in range(npl):
                x[pl_bin[q]] += pl_cnt[q]
                W += pl_cnt[q]
            pos = newpos
        if not ok:
            return start, r
        out_x[r, :] = x
        out_w[r] = W
        r += 1
    return pos, r
