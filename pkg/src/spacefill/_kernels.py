"""Compiled inner loops for incremental criterion updates under a row swap
within one column."""

import math

import numpy as np
from numba import njit

_OPTS = dict(cache=True, nogil=True)


@njit(**_OPTS)
def pair_power_matrix(X, q):
    n, d = X.shape
    P = np.zeros((n, n))
    for a in range(n):
        for b in range(a + 1, n):
            s = 0.0
            for k in range(d):
                s += abs(X[a, k] - X[b, k]) ** q
            P[a, b] = s
            P[b, a] = s
    return P


@njit(**_OPTS)
def log_gap_matrix(X):
    n, d = X.shape
    L = np.zeros((n, n))
    for a in range(n):
        for b in range(a + 1, n):
            s = 0.0
            for k in range(d):
                g = X[a, k] - X[b, k]
                s += math.log(g * g) if g != 0.0 else -np.inf
            L[a, b] = s
            L[b, a] = s
    return L


@njit(**_OPTS)
def swapped_power_rows(X, c, i, j, q, ri, rj):
    """Rows i and j of the pair-power matrix after swapping X[i,c], X[j,c]."""
    n, d = X.shape
    for b in range(n):
        si = 0.0
        sj = 0.0
        for k in range(d):
            xi = X[i, k]
            xj = X[j, k]
            if k == c:
                xi, xj = xj, xi
            xb = X[b, k]
            if b == i:
                xb = xi
            elif b == j:
                xb = xj
            si += abs(xi - xb) ** q
            sj += abs(xj - xb) ** q
        ri[b] = si
        rj[b] = sj


@njit(**_OPTS)
def swapped_log_gap_rows(X, c, i, j, ri, rj):
    n, d = X.shape
    for b in range(n):
        si = 0.0
        sj = 0.0
        for k in range(d):
            xi = X[i, k]
            xj = X[j, k]
            if k == c:
                xi, xj = xj, xi
            xb = X[b, k]
            if b == i:
                xb = xi
            elif b == j:
                xb = xj
            gi = xi - xb
            gj = xj - xb
            si += math.log(gi * gi) if gi != 0.0 else -np.inf
            sj += math.log(gj * gj) if gj != 0.0 else -np.inf
        ri[b] = si
        rj[b] = sj


@njit(**_OPTS)
def logsumexp_pairs(M, scale, i, j, ri, rj):
    """log sum_{a<b} exp(scale * M'[a,b]) where M' is M with rows/cols i, j
    replaced by ri, rj. Pass i = j = -1 to use M unchanged."""
    n = M.shape[0]
    top = -np.inf
    for a in range(n):
        if a == i or a == j:
            continue
        for b in range(a + 1, n):
            if b == i or b == j:
                continue
            v = scale * M[a, b]
            if v > top:
                top = v
    if i >= 0:
        for b in range(n):
            if b != i:
                v = scale * ri[b]
                if v > top:
                    top = v
            if b != i and b != j:
                v = scale * rj[b]
                if v > top:
                    top = v
    if top == np.inf:
        return np.inf
    if top == -np.inf:
        return -np.inf
    s = 0.0
    for a in range(n):
        if a == i or a == j:
            continue
        for b in range(a + 1, n):
            if b == i or b == j:
                continue
            s += math.exp(scale * M[a, b] - top)
    if i >= 0:
        for b in range(n):
            if b != i:
                s += math.exp(scale * ri[b] - top)
            if b != i and b != j:
                s += math.exp(scale * rj[b] - top)
    return top + math.log(s)


@njit(**_OPTS)
def min_pairs(M, i, j, ri, rj):
    n = M.shape[0]
    best = np.inf
    for a in range(n):
        if a == i or a == j:
            continue
        for b in range(a + 1, n):
            if b == i or b == j:
                continue
            if M[a, b] < best:
                best = M[a, b]
    if i >= 0:
        for b in range(n):
            if b != i and ri[b] < best:
                best = ri[b]
            if b != i and b != j and rj[b] < best:
                best = rj[b]
    return best


@njit(**_OPTS)
def write_rows(M, i, j, ri, rj):
    n = M.shape[0]
    for b in range(n):
        if b != i:
            M[i, b] = ri[b]
            M[b, i] = ri[b]
        if b != j:
            M[j, b] = rj[b]
            M[b, j] = rj[b]


# -- ARD ---------------------------------------------------------------------


@njit(**_OPTS)
def _recip_root(s, lam):
    """s ** (-lam / 4) with fast paths for the common exponents."""
    if lam == 1.0:
        return 1.0 / math.sqrt(math.sqrt(s))
    if lam == 2.0:
        return 1.0 / math.sqrt(s)
    if lam == 4.0:
        return 1.0 / s
    return math.exp(-0.25 * lam * math.log(s))


@njit(**_OPTS)
def squared_gap_tensor(X):
    n, d = X.shape
    G = np.zeros((d, n, n))
    for k in range(d):
        for a in range(n):
            for b in range(a + 1, n):
                g = X[a, k] - X[b, k]
                G[k, a, b] = g * g
                G[k, b, a] = g * g
    return G


@njit(**_OPTS)
def ard_total(G, subsets, sizes, lam):
    d, n, _ = G.shape
    total = 0.0
    for u in range(subsets.shape[0]):
        k = sizes[u]
        coef = k ** (lam / 2.0)
        for a in range(n):
            for b in range(a + 1, n):
                s = 0.0
                for t in range(k):
                    s += G[subsets[u, t], a, b]
                if s <= 0.0:
                    return np.inf
                total += coef * _recip_root(s, lam)
    return total


@njit(**_OPTS)
def ard_swap_delta(G, X, c, i, j, subsets, sizes, col_ptr, col_idx, lam):
    """Change of the ARD pair sum when X[i,c] and X[j,c] are swapped."""
    n = X.shape[0]
    xi = X[i, c]
    xj = X[j, c]
    delta = 0.0
    for p in range(col_ptr[c], col_ptr[c + 1]):
        u = col_idx[p]
        k = sizes[u]
        if k == 1:
            # a one-dimensional projection is only permuted by the swap
            continue
        coef = k ** (lam / 2.0)
        for b in range(n):
            if b == i or b == j:
                continue
            si = 0.0
            sj = 0.0
            for t in range(k):
                si += G[subsets[u, t], i, b]
                sj += G[subsets[u, t], j, b]
            gi_new = (xj - X[b, c]) ** 2
            gj_new = (xi - X[b, c]) ** 2
            si_new = si - G[c, i, b] + gi_new
            sj_new = sj - G[c, j, b] + gj_new
            if si_new <= 0.0 or sj_new <= 0.0:
                return np.inf
            delta += coef * (_recip_root(si_new, lam) + _recip_root(sj_new, lam)
                             - _recip_root(si, lam) - _recip_root(sj, lam))
    return delta


@njit(**_OPTS)
def swap_rows_cols(A, i, j):
    """Swap rows and columns i, j of a square matrix in place."""
    n = A.shape[0]
    for b in range(n):
        t = A[i, b]
        A[i, b] = A[j, b]
        A[j, b] = t
    for a in range(n):
        t = A[a, i]
        A[a, i] = A[a, j]
        A[a, j] = t


# -- uniform projection --------------------------------------------------------


@njit(**_OPTS)
def cd_factor_tensor(Z):
    n, d = Z.shape
    F = np.empty((d, n, n))
    g = np.empty((d, n))
    for k in range(d):
        for a in range(n):
            za = abs(Z[a, k])
            g[k, a] = 1.0 + 0.5 * za - 0.5 * za * za
            for b in range(n):
                F[k, a, b] = 1.0 + 0.5 * za + 0.5 * abs(Z[b, k]) - 0.5 * abs(Z[a, k] - Z[b, k])
    return F, g


@njit(**_OPTS)
def up_pair_total(F, g):
    """Sum over column pairs of the non-constant part of the projected CD."""
    d, n, _ = F.shape
    total = 0.0
    for a in range(d):
        for m in range(a + 1, d):
            s1 = 0.0
            for x in range(n):
                for y in range(n):
                    s1 += F[a, x, y] * F[m, x, y]
            s2 = 0.0
            for x in range(n):
                s2 += g[a, x] * g[m, x]
            total += s1 / (n * n) - 2.0 * s2 / n
    return total


@njit(**_OPTS)
def up_swap_delta(F, g, c, i, j):
    d, n, _ = F.shape
    delta = 0.0
    for m in range(d):
        if m == c:
            continue
        s = 0.0
        for b in range(n):
            if b == i or b == j:
                continue
            s += (F[c, j, b] - F[c, i, b]) * (F[m, i, b] - F[m, j, b])
        s = 2.0 * s + (F[c, j, j] - F[c, i, i]) * (F[m, i, i] - F[m, j, j])
        delta += s / (n * n) - 2.0 / n * (g[c, j] - g[c, i]) * (g[m, i] - g[m, j])
    return delta
