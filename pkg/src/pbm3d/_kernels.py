"""Compiled inner loops for block matching and collaborative filtering.

Every kernel works on a half-open range ``[lo, hi)`` of reference blocks so
callers can split the work into fixed chunks. The functions release the GIL.
"""

import numpy as np
from numba import njit

HAAR = 0
WALSH_HADAMARD = 1


@njit(nogil=True, cache=True)
def match_range(feat, ref_rows, ref_cols, lo, hi, half, max_group, tau,
                out_rc, out_dist, out_count):
    """Fill groups for references ``lo..hi-1``.

    ``feat`` is ``(n_rows, n_cols, K)``: one K-vector per block origin.
    Distances are sums of squared differences divided by K. Candidates with
    distance ``< tau`` compete for ``max_group - 1`` slots ordered by
    (distance, row, col); the reference always comes first, and the final
    count is the largest power of two that fits.
    """
    nr, nc, K = feat.shape
    k_others = max_group - 1
    cap = max(k_others, 1)
    best_d = np.empty(cap)
    best_r = np.empty(cap, dtype=np.int64)
    best_c = np.empty(cap, dtype=np.int64)
    thr = tau * K
    for g in range(lo, hi):
        r = ref_rows[g]
        c = ref_cols[g]
        cnt = 0
        if k_others > 0:
            r0 = max(r - half, 0)
            r1 = min(r + half, nr - 1)
            c0 = max(c - half, 0)
            c1 = min(c + half, nc - 1)
            for rr in range(r0, r1 + 1):
                for cc in range(c0, c1 + 1):
                    if rr == r and cc == c:
                        continue
                    limit = thr
                    if cnt == k_others and best_d[cnt - 1] < limit:
                        limit = best_d[cnt - 1]
                    acc = 0.0
                    for q in range(K):
                        diff = feat[r, c, q] - feat[rr, cc, q]
                        acc += diff * diff
                        if acc >= limit:
                            break
                    if acc < limit:
                        i = cnt if cnt < k_others else k_others - 1
                        while i > 0 and best_d[i - 1] > acc:
                            best_d[i] = best_d[i - 1]
                            best_r[i] = best_r[i - 1]
                            best_c[i] = best_c[i - 1]
                            i -= 1
                        best_d[i] = acc
                        best_r[i] = rr
                        best_c[i] = cc
                        if cnt < k_others:
                            cnt += 1
        n = cnt + 1
        p = 1
        while p * 2 <= n:
            p *= 2
        out_count[g] = p
        out_rc[g, 0, 0] = r
        out_rc[g, 0, 1] = c
        out_dist[g, 0] = 0.0
        for i in range(p - 1):
            out_rc[g, i + 1, 0] = best_r[i]
            out_rc[g, i + 1, 1] = best_c[i]
            out_dist[g, i + 1] = best_d[i] / K


@njit(nogil=True, cache=True)
def _stack_forward(x, n, K, kind, tmp):
    if kind == HAAR:
        length = n
        while length > 1:
            h = length // 2
            for i in range(h):
                for q in range(K):
                    a = x[2 * i, q]
                    b = x[2 * i + 1, q]
                    tmp[i, q] = (a + b) * 0.7071067811865476
                    tmp[h + i, q] = (a - b) * 0.7071067811865476
            for i in range(length):
                for q in range(K):
                    x[i, q] = tmp[i, q]
            length = h
    else:
        _fwht(x, n, K)


@njit(nogil=True, cache=True)
def _stack_inverse(x, n, K, kind, tmp):
    if kind == HAAR:
        length = 2
        while length <= n:
            h = length // 2
            for i in range(h):
                for q in range(K):
                    a = x[i, q]
                    d = x[h + i, q]
                    tmp[2 * i, q] = (a + d) * 0.7071067811865476
                    tmp[2 * i + 1, q] = (a - d) * 0.7071067811865476
            for i in range(length):
                for q in range(K):
                    x[i, q] = tmp[i, q]
            length *= 2
    else:
        _fwht(x, n, K)


@njit(nogil=True, cache=True)
def _fwht(x, n, K):
    h = 1
    while h < n:
        for i in range(0, n, 2 * h):
            for j in range(i, i + h):
                for q in range(K):
                    a = x[j, q]
                    b = x[j + h, q]
                    x[j, q] = a + b
                    x[j + h, q] = a - b
        h *= 2
    s = 1.0 / np.sqrt(n)
    for i in range(n):
        for q in range(K):
            x[i, q] *= s


@njit(nogil=True, cache=True)
def stack_roundtrip(x, kind):
    """Forward then inverse stack transform, in place. Used by tests."""
    n, K = x.shape
    tmp = np.empty_like(x)
    _stack_forward(x, n, K, kind, tmp)
    _stack_inverse(x, n, K, kind, tmp)


@njit(nogil=True, cache=True)
def stack_forward(x, kind):
    n, K = x.shape
    tmp = np.empty_like(x)
    _stack_forward(x, n, K, kind, tmp)


@njit(nogil=True, cache=True)
def _accumulate(G, n, rc_g, w, acc, wacc, row0):
    K = G.shape[1]
    for i in range(n):
        r = rc_g[i, 0] - row0
        c = rc_g[i, 1]
        for q in range(K):
            acc[r, c, q] += w * G[i, q]
        wacc[r, c] += w


@njit(nogil=True, cache=True)
def hard_threshold_range(coefs, rc, counts, lo, hi, kind, thr, acc, wacc, row0):
    """Stage-1 collaborative hard thresholding.

    Filtered block spectra are accumulated, weighted, per block origin in
    ``acc`` (with the weights in ``wacc``); the inverse block transform is
    linear, so it can be applied once per origin afterwards. The accumulators
    may cover only a band of block rows starting at ``row0``.
    """
    K = coefs.shape[2]
    maxn = rc.shape[1]
    G = np.empty((maxn, K))
    tmp_stack = np.empty((maxn, K))
    for g in range(lo, hi):
        n = counts[g]
        for i in range(n):
            for q in range(K):
                G[i, q] = coefs[rc[g, i, 0], rc[g, i, 1], q]
        _stack_forward(G, n, K, kind, tmp_stack)
        retained = 0
        for i in range(n):
            for q in range(K):
                if abs(G[i, q]) < thr:
                    G[i, q] = 0.0
                else:
                    retained += 1
        _stack_inverse(G, n, K, kind, tmp_stack)
        # the 1/sigma^2 factor is common to all groups of a plane
        w = 1.0 / retained if retained > 0 else 1.0
        _accumulate(G, n, rc[g], w, acc, wacc, row0)


@njit(nogil=True, cache=True)
def wiener_range(coefs_noisy, coefs_basic, rc, counts, lo, hi, kind, sigma2, acc, wacc, row0):
    """Stage-2 empirical Wiener shrinkage; accumulates like the stage-1 kernel."""
    K = coefs_noisy.shape[2]
    maxn = rc.shape[1]
    G = np.empty((maxn, K))
    B = np.empty((maxn, K))
    tmp_stack = np.empty((maxn, K))
    for g in range(lo, hi):
        n = counts[g]
        for i in range(n):
            r = rc[g, i, 0]
            c = rc[g, i, 1]
            for q in range(K):
                G[i, q] = coefs_noisy[r, c, q]
                B[i, q] = coefs_basic[r, c, q]
        _stack_forward(G, n, K, kind, tmp_stack)
        _stack_forward(B, n, K, kind, tmp_stack)
        wsum = 0.0
        for i in range(n):
            for q in range(K):
                if sigma2 > 0.0:
                    b2 = B[i, q] * B[i, q]
                    shrink = b2 / (b2 + sigma2)
                else:
                    shrink = 1.0
                G[i, q] *= shrink
                wsum += shrink * shrink
        _stack_inverse(G, n, K, kind, tmp_stack)
        w = 1.0 / wsum if wsum > 0.0 else 1.0
        _accumulate(G, n, rc[g], w, acc, wacc, row0)


@njit(nogil=True, cache=True)
def block_spectra(plane, A, out):
    """Separable 2-D transform ``A @ block @ A.T`` of every block, into ``out``."""
    H, W = plane.shape
    bs = A.shape[0]
    nr = H - bs + 1
    nc = W - bs + 1
    col = np.empty((bs, W))
    for r in range(nr):
        # vertical pass for the strip of rows r..r+bs-1
        for u in range(bs):
            for x in range(W):
                col[u, x] = 0.0
            for i in range(bs):
                a = A[u, i]
                for x in range(W):
                    col[u, x] += a * plane[r + i, x]
        for c in range(nc):
            for u in range(bs):
                for v in range(bs):
                    s = 0.0
                    for j in range(bs):
                        s += col[u, c + j] * A[v, j]
                    out[r, c, u * bs + v] = s


@njit(nogil=True, cache=True)
def scatter_blocks(blocks, wacc, kaiser, num, den):
    """Kaiser-weighted overlap-add of per-origin blocks ``(nr, nc, bs*bs)``."""
    nr, nc, K = blocks.shape
    bs = kaiser.shape[0]
    for r in range(nr):
        for c in range(nc):
            w = wacc[r, c]
            if w == 0.0:
                continue
            for dy in range(bs):
                for dx in range(bs):
                    k = kaiser[dy, dx]
                    num[r + dy, c + dx] += k * blocks[r, c, dy * bs + dx]
                    den[r + dy, c + dx] += k * w
