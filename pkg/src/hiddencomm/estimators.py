"""Likelihood statistic e(S, T) and community estimators.

Every estimator returns a sorted size-K index set and its score e(C, C)
recomputed from scratch.  Ties are broken towards the lexicographically
smallest index set throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .model import DiagMode, LlrMatrix, random_subset

DEFAULT_BUDGET = 10**7
DEFAULT_RESTARTS = 5
DEFAULT_MAX_ITERS = 10_000
METHODS = ("exhaustive", "local", "degree")


class BudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class Estimate:
    community_hat: np.ndarray
    score: float
    method: str
    iterations: int = 0

    def as_dict(self, one_based: bool = True) -> dict:
        off = 1 if one_based else 0
        return {"method": self.method, "community": [int(i) + off for i in self.community_hat],
                "score": self.score, "iterations": self.iterations}


def _as_index(s) -> np.ndarray:
    return np.unique(np.asarray(list(s) if not isinstance(s, np.ndarray) else s, dtype=np.int64))


def e_stat(lmat: LlrMatrix, s, t) -> float:
    """Sum of L_ij over i < j with (i, j) in (S x T) u (T x S).

    With an informative diagonal, L_ii for i in S n T is added as well.
    Summation is sequential in row-major pair order, then the diagonal.
    """
    s_idx, t_idx = _as_index(s), _as_index(t)
    u = np.union1d(s_idx, t_idx)
    in_s = np.isin(u, s_idx)
    in_t = np.isin(u, t_idx)
    ia, ib = np.triu_indices(len(u), 1)
    keep = (in_s[ia] & in_t[ib]) | (in_t[ia] & in_s[ib])
    L = lmat.l_values
    vals = L[u[ia[keep]], u[ib[keep]]]
    if lmat.diag_mode is DiagMode.INFORMATIVE:
        both = u[in_s & in_t]
        vals = np.concatenate([vals, L[both, both]])
    return float(np.cumsum(vals)[-1]) if vals.size else 0.0


def _score(lmat: LlrMatrix, idx: np.ndarray) -> float:
    return e_stat(lmat, idx, idx)


def _scale(lmat: LlrMatrix) -> float:
    return max(1.0, float(np.max(np.abs(lmat.l_values))) if lmat.n else 1.0)


def mle_exhaustive(lmat: LlrMatrix, K: int, budget: int = DEFAULT_BUDGET) -> Estimate:
    """argmax of e(C, C) over all size-K subsets (revolving-door enumeration)."""
    n = lmat.n
    if not 1 <= K <= n:
        raise ValueError(f"need 1 <= K <= n, got K={K}, n={n}")
    count = math.comb(n, K)
    if count > budget:
        raise BudgetExceeded(f"C({n},{K}) = {count} subsets exceeds the budget of {budget}; "
                             f"use method='local' instead")
    diag = lmat.diag_mode is DiagMode.INFORMATIVE
    tol = 1e-9 * K * _scale(lmat)
    best, _ = _kernels.exhaustive(lmat.l_values, K, diag, tol)
    best = np.sort(np.asarray(best, dtype=np.int64))
    return Estimate(community_hat=best, score=_score(lmat, best), method="exhaustive")


def mle_local_search(lmat: LlrMatrix, K: int, init, max_iters: int = DEFAULT_MAX_ITERS) -> Estimate:
    """Best-improvement single-swap hill climbing from ``init``.

    Each round scans every (i in C, j not in C) swap and applies the largest
    gain above a 1e-10 relative tolerance; stops at a local optimum.
    """
    init = _as_index(init)
    if len(init) != K:
        raise ValueError(f"init must hold K={K} distinct indices, got {len(init)}")
    tol = 1e-10 * _scale(lmat)
    out, it = _kernels.local_search(lmat.l_values, init, max_iters, tol)
    out = np.sort(out)
    return Estimate(community_hat=out, score=_score(lmat, out), method="local", iterations=int(it))


def degree_threshold(lmat: LlrMatrix, K: int) -> Estimate:
    """The K indices with the largest LLR row sums, smaller index first on ties."""
    if not 1 <= K <= lmat.n:
        raise ValueError(f"need 1 <= K <= n, got K={K}")
    deg = lmat.l_values.sum(axis=1)
    top = np.sort(np.argsort(-deg, kind="stable")[:K]).astype(np.int64)
    return Estimate(community_hat=top, score=_score(lmat, top), method="degree")


def _better(a: Estimate, b: Estimate | None) -> bool:
    if b is None or a.score > b.score:
        return True
    return a.score == b.score and tuple(a.community_hat) < tuple(b.community_hat)


def mle_local(lmat: LlrMatrix, K: int, rng: np.random.Generator,
              restarts: int = DEFAULT_RESTARTS, max_iters: int = DEFAULT_MAX_ITERS) -> Estimate:
    """Local search with restarts: first from the degree-threshold set, then random sets."""
    best = None
    total = 0
    for r in range(max(1, restarts)):
        init = degree_threshold(lmat, K).community_hat if r == 0 else random_subset(lmat.n, K, rng)
        est = mle_local_search(lmat, K, init, max_iters)
        total += est.iterations
        if _better(est, best):
            best = est
    return Estimate(community_hat=best.community_hat, score=best.score, method="local",
                    iterations=total)


def estimate(lmat: LlrMatrix, K: int, method: str, rng: np.random.Generator | None = None,
             *, budget: int = DEFAULT_BUDGET, restarts: int = DEFAULT_RESTARTS,
             max_iters: int = DEFAULT_MAX_ITERS) -> Estimate:
    if method == "exhaustive":
        return mle_exhaustive(lmat, K, budget)
    if method == "degree":
        return degree_threshold(lmat, K)
    if method == "local":
        if rng is None:
            rng = np.random.default_rng(0)
        return mle_local(lmat, K, rng, restarts, max_iters)
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
