"""Compiled inner loops.

The arena layout shared by these kernels: ``children[node, a]`` is the child
id or -1, node 0 is the root, and ``istate`` / ``fstate`` carry the scalars a
run needs to resume after the Python side grows the arrays.
"""

from __future__ import annotations

import numpy as np
from numba import njit

DIRICHLET = 0
ATOM = 1

# istate slots
CURSOR, N_NODES, N_PHRASES, CK_POS = 0, 1, 2, 3


@njit(cache=True)
def draw_theta(rng, kinds, params, cumw, out):
    K = kinds.shape[0]
    A = params.shape[1]
    k = 0
    if K > 1:
        u = rng.random()
        while k < K - 1 and u >= cumw[k]:
            k += 1
    if kinds[k] == ATOM:
        for a in range(A):
            out[a] = params[k, a]
        return
    mx = -np.inf
    for a in range(A):
        g = params[k, a]
        if g < 1.0:
            lg = np.log(rng.gamma(g + 1.0)) + np.log(rng.random()) / g
        else:
            lg = np.log(rng.gamma(g))
        out[a] = lg
        if lg > mx:
            mx = lg
    s = 0.0
    for a in range(A):
        out[a] = np.exp(out[a] - mx)
        s += out[a]
    for a in range(A):
        out[a] /= s


@njit(cache=True)
def emit(theta, u):
    A = theta.shape[0]
    acc = 0.0
    for a in range(A - 1):
        acc += theta[a]
        if u < acc:
            return a
    a = A - 1
    while a > 0 and theta[a] <= 0.0:
        a -= 1
    return a


@njit(cache=True)
def mixture_step(node, sym, kinds, params, psum, dir_only, counts, totals, logw):
    """Predictive probability of ``sym`` at ``node``, then absorb it."""
    if dir_only:
        p = (counts[node, sym] + params[0, sym]) / (totals[node] + psum[0])
    else:
        K = kinds.shape[0]
        mx = -np.inf
        for k in range(K):
            if logw[node, k] > mx:
                mx = logw[node, k]
        if mx == -np.inf:
            p = 0.0
        else:
            num = 0.0
            den = 0.0
            for k in range(K):
                w = np.exp(logw[node, k] - mx)
                if kinds[k] == ATOM:
                    pk = params[k, sym]
                else:
                    pk = (counts[node, sym] + params[k, sym]) / (totals[node] + psum[k])
                num += w * pk
                den += w
                logw[node, k] += np.log(pk)
            p = num / den
    counts[node, sym] += 1
    totals[node] += 1
    return p


@njit(cache=True)
def lz_run(x, n, sample, rng, kinds, params, psum, cumw, logw0, dir_only,
           children, thetas, has_theta, counts, totals, logw,
           istate, fstate, t0, record_b, b_index, phrase_ends, ck, ck_logq):
    """Advance the LZ78 source (``sample``) or score ``x`` from step ``t0``.

    Returns the number of steps completed; fewer than ``n`` means the node
    arena is full and must be grown before resuming.
    """
    cap = children.shape[0]
    A = children.shape[1]
    cursor = istate[CURSOR]
    n_nodes = istate[N_NODES]
    n_phr = istate[N_PHRASES]
    ckp = istate[CK_POS]
    logq = fstate[0]
    t = t0
    while t < n:
        if n_nodes >= cap:
            break
        node = cursor
        if sample:
            if not has_theta[node]:
                draw_theta(rng, kinds, params, cumw, thetas[node])
                has_theta[node] = True
            sym = emit(thetas[node], rng.random())
            x[t] = sym
        else:
            sym = x[t]
        p = mixture_step(node, sym, kinds, params, psum, dir_only, counts, totals, logw)
        logq += np.log(p)
        if record_b:
            b_index[t] = node
        child = children[node, sym]
        if child < 0:
            children[node, sym] = n_nodes
            if not dir_only:
                for k in range(logw0.shape[0]):
                    logw[n_nodes, k] = logw0[k]
            n_nodes += 1
            phrase_ends[n_phr] = t + 1
            n_phr += 1
            cursor = 0
        else:
            cursor = child
        t += 1
        while ckp < ck.shape[0] and ck[ckp] == t:
            ck_logq[ckp] = logq
            ckp += 1
    istate[CURSOR] = cursor
    istate[N_NODES] = n_nodes
    istate[N_PHRASES] = n_phr
    istate[CK_POS] = ckp
    fstate[0] = logq
    return t


@njit(cache=True)
def lz_parse(x, A):
    """Phrase end times (1-based) and per-step node ids of the LZ78 parse of ``x``."""
    n = x.shape[0]
    cap = n + 1
    children = np.full((cap, A), -1, dtype=np.int32)
    ends = np.empty(n, dtype=np.int64)
    nodes = np.empty(n, dtype=np.int32)
    n_nodes = 1
    n_phr = 0
    cursor = 0
    for t in range(n):
        nodes[t] = cursor
        s = x[t]
        c = children[cursor, s]
        if c < 0:
            children[cursor, s] = n_nodes
            n_nodes += 1
            ends[n_phr] = t + 1
            n_phr += 1
            cursor = 0
        else:
            cursor = c
    return ends[:n_phr], nodes, n_nodes


@njit(cache=True)
def _xlogx(c):
    if c <= 0:
        return 0.0
    return c * np.log(c)


@njit(cache=True)
def conditional_entropy_curve(tuple_ids, ctx_ids, n_tuple, n_ctx, k, ck):
    """Count-weighted empirical conditional entropy (nats) at each checkpoint.

    ``tuple_ids[i]`` identifies the (k+1)-window starting at position i and
    ``ctx_ids[i]`` its first k symbols; a checkpoint m covers windows
    0 .. m-k-1.
    """
    ctab = np.zeros(n_ctx, dtype=np.int64)
    ttab = np.zeros(n_tuple, dtype=np.int64)
    s_ctx = 0.0
    s_tup = 0.0
    out = np.empty(ck.shape[0])
    w = 0
    for j in range(ck.shape[0]):
        target = ck[j] - k
        while w < target:
            c = ctab[ctx_ids[w]]
            s_ctx += _xlogx(c + 1) - _xlogx(c)
            ctab[ctx_ids[w]] = c + 1
            c = ttab[tuple_ids[w]]
            s_tup += _xlogx(c + 1) - _xlogx(c)
            ttab[tuple_ids[w]] = c + 1
            w += 1
        v = (s_ctx - s_tup) / w
        out[j] = v if v > 0.0 else 0.0
    return out


@njit(cache=True)
def window_codes(x, r, A):
    """Base-A code of every length-r window, oldest symbol most significant."""
    n = x.shape[0] - r + 1
    out = np.empty(n, dtype=np.int64)
    code = 0
    mod = 1
    for _ in range(r):
        mod *= A
    for i in range(x.shape[0]):
        code = (code * A + x[i]) % mod
        if i >= r - 1:
            out[i - r + 1] = code
    return out


@njit(cache=True)
def plugin_losses(x, A, k, gamma, pad):
    """Per-symbol log loss (nats) of the adaptive add-gamma k-th order Markov SPA."""
    n = x.shape[0]
    n_ctx = 1
    for _ in range(k):
        n_ctx *= A
    tab = np.zeros((n_ctx, A), dtype=np.int64)
    tot = np.zeros(n_ctx, dtype=np.int64)
    ctx = 0
    for _ in range(k):
        ctx = (ctx * A + pad) % n_ctx
    out = np.empty(n)
    for t in range(n):
        s = x[t]
        out[t] = -np.log((tab[ctx, s] + gamma) / (tot[ctx] + A * gamma))
        tab[ctx, s] += 1
        tot[ctx] += 1
        if k > 0:
            ctx = (ctx * A + s) % n_ctx
    return out


# -- context tree weighting ---------------------------------------------------

LOG_HALF = np.log(0.5)


@njit(cache=True)
def _logaddexp(a, b):
    if a == -np.inf:
        return b
    if b == -np.inf:
        return a
    if a > b:
        return a + np.log1p(np.exp(b - a))
    return b + np.log1p(np.exp(a - b))


@njit(cache=True)
def ctw_path(depth, hist, hpos, children, n_nodes_arr, path, create):
    """Fill ``path[0..depth]`` with node ids along the current context.

    ``hist`` is a ring buffer of the last ``depth`` symbols, most recent at
    ``hpos - 1``. Missing nodes are created when ``create`` is set, otherwise
    recorded as -1 (and everything below them too).
    """
    path[0] = 0
    node = 0
    for d in range(1, depth + 1):
        s = hist[(hpos - d) % depth]
        if node >= 0:
            c = children[node, s]
            if c < 0 and create:
                c = n_nodes_arr[0]
                children[node, s] = c
                n_nodes_arr[0] = c + 1
            node = c
        path[d] = node
    return path


@njit(cache=True)
def ctw_root_after(depth, hist, hpos, children, cnt, logkt, logbeta, path, sym):
    """Root log weighted probability if ``sym`` were appended (no mutation)."""
    ctw_path(depth, hist, hpos, children, np.zeros(1, dtype=np.int64), path, False)
    child_new = 0.0
    for d in range(depth, -1, -1):
        node = path[d]
        if node < 0:
            # an unseen node after one symbol always has beta = 1/2
            new = LOG_HALF
        else:
            a = cnt[node, 0]
            b = cnt[node, 1]
            kt = logkt[node] + np.log((cnt[node, sym] + 0.5) / (a + b + 1.0))
            if d == depth:
                new = kt
            else:
                s = hist[(hpos - d - 1) % depth]
                other = children[node, 1 - s]
                lo = logbeta[other] if other >= 0 else 0.0
                new = _logaddexp(LOG_HALF + kt, LOG_HALF + child_new + lo)
        child_new = new
    return child_new


@njit(cache=True)
def ctw_update(depth, hist, hpos, children, cnt, logkt, logbeta, n_nodes_arr, path, sym):
    """Absorb ``sym``; returns the increment of the root log weighted probability."""
    old = logbeta[0]
    ctw_path(depth, hist, hpos, children, n_nodes_arr, path, True)
    for d in range(depth, -1, -1):
        node = path[d]
        a = cnt[node, 0]
        b = cnt[node, 1]
        logkt[node] += np.log((cnt[node, sym] + 0.5) / (a + b + 1.0))
        cnt[node, sym] += 1
        if d == depth:
            logbeta[node] = logkt[node]
        else:
            c0 = children[node, 0]
            c1 = children[node, 1]
            l0 = logbeta[c0] if c0 >= 0 else 0.0
            l1 = logbeta[c1] if c1 >= 0 else 0.0
            logbeta[node] = _logaddexp(LOG_HALF + logkt[node], LOG_HALF + l0 + l1)
    return logbeta[0] - old


@njit(cache=True)
def ctw_run(x, t0, depth, hist, hstate, children, cnt, logkt, logbeta, n_nodes_arr, path, out):
    """Bulk CTW over ``x[t0:]``; stops early when fewer than depth+1 free nodes remain."""
    cap = children.shape[0]
    t = t0
    while t < x.shape[0]:
        if n_nodes_arr[0] + depth + 1 > cap:
            break
        s = x[t]
        out[t] = ctw_update(depth, hist, hstate[0], children, cnt, logkt, logbeta,
                            n_nodes_arr, path, s)
        if depth > 0:
            hist[hstate[0] % depth] = s
            hstate[0] = (hstate[0] + 1) % depth
        t += 1
    return t
