"""Hot loops, each in a numba flavour and a pure-numpy flavour.

The numba kernels are used unless ``HIDDENCOMM_DISABLE_NUMBA`` is set to a
non-empty value other than ``0`` (or numba cannot be imported).  Both
flavours are always importable as ``*_numba`` / ``*_numpy`` so they can be
cross-checked and benchmarked against each other.

All scores handed back are "exact" scores: a sequential sum over index
pairs a < b in row-major order followed by the diagonal terms, which is the
summation order ``seq_score_numpy`` reproduces with ``np.cumsum``.  That
makes the two flavours agree bit for bit.
"""

from __future__ import annotations

import itertools
import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

_flag = os.environ.get("HIDDENCOMM_DISABLE_NUMBA", "")
USE_NUMBA = numba is not None and _flag in ("", "0")

# incremental scores are resynchronised with an exact recomputation this often
_RESYNC = 1024


def _jit(fn):
    if numba is None:  # pragma: no cover
        return fn
    return numba.njit(cache=True, nogil=True)(fn)


# ---------------------------------------------------------------- exact score

def seq_score_numpy(L: np.ndarray, idx: np.ndarray, diag: bool) -> float:
    idx = np.asarray(idx, dtype=np.int64)
    k = len(idx)
    ia, ib = np.triu_indices(k, 1)
    vals = L[idx[ia], idx[ib]]
    if diag:
        vals = np.concatenate([vals, L[idx, idx]])
    if vals.size == 0:
        return 0.0
    return float(np.cumsum(vals)[-1])


def _seq_score(L, idx, k, diag):
    s = 0.0
    for a in range(k):
        for b in range(a + 1, k):
            s += L[idx[a], idx[b]]
    if diag:
        for a in range(k):
            s += L[idx[a], idx[a]]
    return s


seq_score_numba = _jit(_seq_score)


# ------------------------------------------------------------ exhaustive MLE

def _exhaustive(L, t, diag, tol):
    n = L.shape[0]
    best = np.arange(t)
    if t >= n or t < 2:
        return best, seq_score_numba(L, best, t, diag)
    c = np.empty(t + 2, dtype=np.int64)
    for j in range(1, t + 1):
        c[j] = j - 1
    c[t + 1] = n
    cur = np.empty(t, dtype=np.int64)
    for a in range(t):
        cur[a] = c[a + 1]
    inc = seq_score_numba(L, cur, t, diag)
    best_exact = inc
    steps = 0
    while True:
        # advance to the next combination (revolving-door order); exactly one
        # element leaves and one enters
        j = 0
        state = 0
        lo_old = 0
        hi_old = 0
        done = False
        moved = False
        if t % 2 == 1:
            if c[1] + 1 < c[2]:
                lo_old = c[1]
                hi_old = c[1]
                c[1] += 1
                j = 1
                moved = True
            else:
                j = 2
                state = 4
        else:
            if c[1] > 0:
                lo_old = c[1]
                hi_old = c[1]
                c[1] -= 1
                j = 1
                moved = True
            else:
                j = 2
                state = 5
        if not moved:
            while True:
                if state == 4:
                    if c[j] >= j:
                        lo_old = c[j - 1]
                        hi_old = c[j]
                        c[j] = c[j - 1]
                        c[j - 1] = j - 2
                        break
                    j += 1
                    state = 5
                if state == 5:
                    if c[j] + 1 < c[j + 1]:
                        lo_old = c[j - 1]
                        hi_old = c[j]
                        c[j - 1] = c[j]
                        c[j] += 1
                        break
                    j += 1
                    if j <= t:
                        state = 4
                    else:
                        done = True
                        break
        if done:
            break
        # locate the swapped-out and swapped-in elements
        if j == 1:
            out_el = lo_old
            in_el = c[1]
        else:
            a0, a1 = lo_old, hi_old
            b0, b1 = c[j - 1], c[j]
            out_el = a0 if (a0 != b0 and a0 != b1) else a1
            in_el = b0 if (b0 != a0 and b0 != a1) else b1
        delta = 0.0
        for a in range(1, t + 1):
            x = c[a]
            if x != in_el:
                delta += L[in_el, x] - L[out_el, x]
        if diag:
            delta += L[in_el, in_el] - L[out_el, out_el]
        inc += delta
        for a in range(t):
            cur[a] = c[a + 1]
        steps += 1
        if steps % _RESYNC == 0:
            inc = seq_score_numba(L, cur, t, diag)
        if inc >= best_exact - tol:
            exact = seq_score_numba(L, cur, t, diag)
            better = exact > best_exact
            if not better and exact == best_exact:
                for a in range(t):
                    if cur[a] != best[a]:
                        better = cur[a] < best[a]
                        break
            if better:
                best_exact = exact
                for a in range(t):
                    best[a] = cur[a]
    return best, best_exact


exhaustive_numba = _jit(_exhaustive)


def exhaustive_numpy(L: np.ndarray, t: int, diag: bool, tol: float = 0.0,
                     chunk: int = 1 << 15):
    """Lexicographic enumeration in vectorised chunks; first maximum wins."""
    n = L.shape[0]
    ia, ib = np.triu_indices(t, 1)
    best = None
    best_score = -np.inf
    combos = itertools.combinations(range(n), t)
    while True:
        block = np.fromiter(itertools.chain.from_iterable(itertools.islice(combos, chunk)),
                            dtype=np.int64)
        if block.size == 0:
            break
        c = block.reshape(-1, t)
        s = np.zeros(len(c))
        for a, b in zip(ia, ib):
            s = s + L[c[:, a], c[:, b]]
        if diag:
            for a in range(t):
                s = s + L[c[:, a], c[:, a]]
        k = int(np.argmax(s))
        if s[k] > best_score:
            best_score = float(s[k])
            best = c[k].copy()
    return best, best_score


# -------------------------------------------------------------- local search

def _local_search(L, init, max_iters, tol):
    n = L.shape[0]
    in_c = np.zeros(n, dtype=np.bool_)
    for x in init:
        in_c[x] = True
    members = np.sort(init.copy())
    r = np.zeros(n)
    for x in range(n):
        s = 0.0
        for k in members:
            s += L[x, k]
        r[x] = s
    it = 0
    while it < max_iters:
        best = tol
        bi = -1
        bj = -1
        for i in range(n):
            if not in_c[i]:
                continue
            for j in range(n):
                if in_c[j]:
                    continue
                d = ((r[j] - L[j, i]) - r[i]) + L[j, j]
                if d > best:
                    best = d
                    bi = i
                    bj = j
        if bi < 0:
            break
        for x in range(n):
            r[x] += L[x, bj] - L[x, bi]
        in_c[bi] = False
        in_c[bj] = True
        it += 1
    out = np.empty(len(init), dtype=np.int64)
    m = 0
    for x in range(n):
        if in_c[x]:
            out[m] = x
            m += 1
    return out, it


local_search_numba = _jit(_local_search)


def local_search_numpy(L: np.ndarray, init: np.ndarray, max_iters: int, tol: float):
    n = L.shape[0]
    in_c = np.zeros(n, dtype=bool)
    in_c[init] = True
    r = np.cumsum(L[:, np.sort(init)], axis=1)[:, -1].copy()
    it = 0
    while it < max_iters:
        ci = np.flatnonzero(in_c)
        cj = np.flatnonzero(~in_c)
        if cj.size == 0:
            break
        d = ((r[cj][None, :] - L[np.ix_(cj, ci)].T) - r[ci][:, None]) + L[cj, cj][None, :]
        k = int(np.argmax(d))
        a, b = divmod(k, len(cj))
        if not d[a, b] > tol:
            break
        i, j = ci[a], cj[b]
        r += L[:, j] - L[:, i]
        in_c[i] = False
        in_c[j] = True
        it += 1
    return np.flatnonzero(in_c).astype(np.int64), it


# ------------------------------------------------------------------ dispatch

def exhaustive(L: np.ndarray, t: int, diag: bool, tol: float):
    if USE_NUMBA:
        return exhaustive_numba(L, t, diag, tol)
    return exhaustive_numpy(L, t, diag, tol)


def local_search(L: np.ndarray, init: np.ndarray, max_iters: int, tol: float):
    if USE_NUMBA:
        return local_search_numba(L, np.asarray(init, dtype=np.int64), max_iters, tol)
    return local_search_numpy(L, np.asarray(init, dtype=np.int64), max_iters, tol)


def seq_score(L: np.ndarray, idx, diag: bool) -> float:
    idx = np.asarray(idx, dtype=np.int64)
    if USE_NUMBA:
        return float(seq_score_numba(L, idx, len(idx), diag))
    return seq_score_numpy(L, idx, diag)
