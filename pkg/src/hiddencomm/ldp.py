"""Large-deviation machinery for sums of LLRs.

Rate functions are Legendre transforms of psi_Q restricted to lambda in
[0, 1], where the objective lambda*theta - psi_Q(lambda) is concave.  On top
of them sit the Chernoff upper bounds, the non-asymptotic lower bound with
the tilted-variance correction, the regularity certificates, and an
importance sampler that draws LLR sums under the tilted measure so that
tails as small as 1e-12 can be estimated with 1e5 replicates.

Grid densities used by the certificates are implementation choices and are
reported back in every result (``grid_size``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np
from scipy import stats

from .dists import DistPair, DomainError, Gaussian

GOLDEN_RTOL = 1e-10
FD_STEP = 1e-4
CERT_GRID = 400
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


class Side(str, Enum):
    Q_UPPER = "QUpper"  # Q[sum L >= n theta]
    P_LOWER = "PLower"  # P[sum L <= n theta]


@dataclass(frozen=True)
class RateEval:
    theta: float
    e_q: float
    e_p: float
    lambda_star: float
    clamped: bool = False


def golden_section_max(f: Callable[[float], float], a: float, b: float,
                       rtol: float = GOLDEN_RTOL) -> tuple[float, float]:
    """Maximize a unimodal ``f`` on [a, b]; endpoints are always considered.

    Returns (argmax, max).
    """
    tol = rtol * max(1.0, abs(a), abs(b))
    lo, hi = a, b
    x1 = hi - _INV_PHI * (hi - lo)
    x2 = lo + _INV_PHI * (hi - lo)
    f1, f2 = f(x1), f(x2)
    while hi - lo > tol:
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _INV_PHI * (hi - lo)
            f2 = f(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _INV_PHI * (hi - lo)
            f1 = f(x1)
    cands = [(f1, x1), (f2, x2), (f(a), a), (f(b), b)]
    best_f, best_x = max(cands, key=lambda t: t[0])
    return best_x, best_f


def theta_range(pair: DistPair) -> tuple[float, float]:
    """[-D(Q||P), D(P||Q)], the interval where the rate functions are finite and tight."""
    return -pair.kl_qp(), pair.kl_pq()


def _resolve_theta(pair: DistPair, theta: float, clamp: bool) -> tuple[float, bool]:
    lo, hi = theta_range(pair)
    slack = 1e-12 * max(1.0, abs(lo), abs(hi))
    if lo - slack <= theta <= hi + slack:
        return min(max(theta, lo), hi), False
    if not clamp:
        raise DomainError(f"theta={theta} outside [{lo}, {hi}]")
    return min(max(theta, lo), hi), True


def rate_e_q(pair: DistPair, theta: float, clamp: bool = True,
             numeric: bool = False) -> RateEval:
    """E_Q(theta) = sup_{0<=lam<=1} lam*theta - psi_Q(lam), with E_P = E_Q - theta.

    Out-of-range theta is clamped to the nearest endpoint with ``clamped`` set,
    or raises when ``clamp`` is False.  Gaussian pairs use the closed form
    unless ``numeric`` forces the search.
    """
    th, clamped = _resolve_theta(pair, float(theta), clamp)
    if isinstance(pair, Gaussian) and not numeric:
        mu = pair.mu
        e_q = (mu + 2.0 * th / mu) ** 2 / 8.0
        lam = min(max(th / mu**2 + 0.5, 0.0), 1.0)
    else:
        lam, e_q = golden_section_max(lambda x: x * th - pair._psi_q(x), 0.0, 1.0)
    return RateEval(theta=th, e_q=e_q, e_p=e_q - th, lambda_star=lam, clamped=clamped)


def rate_e_p(pair: DistPair, theta: float, **kw) -> float:
    return rate_e_q(pair, theta, **kw).e_p


def chernoff_index(pair: DistPair) -> float:
    """C(P, Q) = E_Q(0)."""
    return rate_e_q(pair, 0.0).e_q


def chernoff_tail_upper(pair: DistPair, n: int, theta: float,
                        side: Side | str = Side.Q_UPPER) -> float:
    if n < 1:
        raise DomainError("n must be >= 1")
    r = rate_e_q(pair, theta, clamp=False)
    exponent = r.e_q if Side(side) is Side.Q_UPPER else r.e_p
    return math.exp(-n * exponent)


def second_derivative_fd(f: Callable[[float], float], x: float, h: float = FD_STEP) -> float:
    return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)


def sup_psi_q_dd(pair: DistPair, lo: float, hi: float, grid: int = CERT_GRID) -> float:
    return max(pair._psi_q_dd(float(x)) for x in np.linspace(lo, hi, grid))


def ld_lower_bound(pair: DistPair, n: int, gamma: float, delta: float,
                   grid: int = CERT_GRID) -> float:
    """Lower bound on Q[sum_{k<=n} L_k > n*gamma].

    Returns 0.0 (vacuous) when n*delta^2 does not exceed sup_{[0,1]} psi_Q''.
    """
    lo, hi = theta_range(pair)
    slack = 1e-12 * max(1.0, abs(lo), abs(hi))
    if not (delta > 0 and gamma >= lo - slack and gamma + delta <= hi + slack):
        raise DomainError(f"need -D(Q||P) <= gamma < gamma + delta <= D(P||Q); "
                          f"got gamma={gamma}, delta={delta}, range=[{lo}, {hi}]")
    denom = 1.0 - sup_psi_q_dd(pair, 0.0, 1.0, grid) / (n * delta * delta)
    if denom <= 0.0:
        return 0.0
    e = rate_e_q(pair, gamma + delta).e_q
    return math.exp(-(n * e + math.log(2.0)) / denom)


@dataclass(frozen=True)
class AssumptionReport:
    sup_psi2: float
    min_div: float
    c_required: float
    certificate: float | None
    grid_size: int

    def holds_with_c(self, c: float) -> bool:
        return self.c_required <= c


def check_assumption1(pair: DistPair, grid: int = CERT_GRID) -> AssumptionReport:
    """Smallest C with psi_Q'' <= C min{D(P||Q), D(Q||P)} on a lambda grid over [-1, 1].

    Bounded-LLR pairs also carry the certificate 2 exp(5B), B = max |L|.
    """
    sup2 = sup_psi_q_dd(pair, -1.0, 1.0, grid)
    mind = min(pair.kl_pq(), pair.kl_qp())
    b = pair.llr_bound
    cert = 2.0 * math.exp(5.0 * b) if math.isfinite(b) else None
    return AssumptionReport(sup_psi2=sup2, min_div=mind, c_required=sup2 / mind,
                            certificate=cert, grid_size=grid)


def equivalence_bounds(pair: DistPair, c: float) -> tuple[float, float, float]:
    """(max-divergence / 2C, C(P,Q), min-divergence); ordered when the regularity constant C holds."""
    dpq, dqp = pair.kl_pq(), pair.kl_qp()
    return max(dpq, dqp) / (2.0 * c), chernoff_index(pair), min(dpq, dqp)


@dataclass(frozen=True)
class DivQuadReport:
    holds: bool
    worst_slack_p: float
    worst_slack_q: float
    grid_size: int


def check_divquad(pair: DistPair, c: float, grid: int = 101) -> DivQuadReport:
    """Grid check of E_P((1-eta)D(P||Q)) >= eta^2 D(P||Q)/(2C) and its Q-side twin."""
    dpq, dqp = pair.kl_pq(), pair.kl_qp()
    sp, sq = math.inf, math.inf
    for eta in np.linspace(0.0, 1.0, grid):
        sp = min(sp, rate_e_q(pair, (1 - eta) * dpq).e_p - eta**2 * dpq / (2 * c))
        sq = min(sq, rate_e_q(pair, -(1 - eta) * dqp).e_q - eta**2 * dqp / (2 * c))
    tol = 1e-12 * max(dpq, dqp, 1.0)
    return DivQuadReport(holds=sp >= -tol and sq >= -tol, worst_slack_p=sp,
                         worst_slack_q=sq, grid_size=grid)


def bernoulli_a_dd(theta):
    """A''(theta) for the Bernoulli family in natural parameter theta = logit(p)."""
    e = np.exp(-np.abs(theta))
    return e / (1.0 + e) ** 2


def gaussian_a_dd(theta):
    return np.ones_like(np.asarray(theta, dtype=float))


def expfam_condition(a_dd: Callable, theta0: float, theta1: float,
                     grid: int = CERT_GRID) -> float:
    """max_J A'' / min_I A'' with I = [theta0, theta1] and J = theta0 +/- (theta1 - theta0).

    Returns inf when A'' vanishes somewhere on I.
    """
    if theta0 == theta1:
        return 1.0
    d = abs(theta1 - theta0)
    inner = np.asarray(a_dd(np.linspace(min(theta0, theta1), max(theta0, theta1), grid)), float)
    outer = np.asarray(a_dd(np.linspace(theta0 - d, theta0 + d, grid)), float)
    den = float(inner.min())
    if den <= 0.0:
        return math.inf
    return float(outer.max()) / den


def binom_upper_tail_bound(n: int, p: float, eta: float) -> float:
    """Chernoff bound on P[X >= (1+eta) n p], X ~ Binom(n, p), 0 <= eta <= 1."""
    if not 0.0 <= eta <= 1.0:
        raise DomainError("eta must lie in [0, 1]")
    return math.exp(-eta * eta * n * p / 3.0)


def binom_lower_tail_bound(n: int, p: float, eta: float) -> float:
    """Chernoff bound on P[X <= (1-eta) n p]."""
    if not 0.0 <= eta <= 1.0:
        raise DomainError("eta must lie in [0, 1]")
    return math.exp(-eta * eta * n * p / 2.0)


@dataclass(frozen=True)
class TailEstimate:
    estimate: float
    ci_low: float
    ci_high: float
    std_err: float
    reps: int
    method: str
    tilt: float
    level: float


def wilson_interval(k: int, n: int, level: float) -> tuple[float, float]:
    ci = stats.binomtest(int(k), int(n)).proportion_ci(confidence_level=level, method="wilson")
    return float(ci.low), float(ci.high)


def estimate_q_tail(pair: DistPair, n: int, gamma: float, reps: int,
                    rng: np.random.Generator, method: str = "tilted",
                    level: float = 0.99, chunk: int = 1 << 16) -> TailEstimate:
    """Monte Carlo estimate of Q[sum_{k<=n} L_k >= n*gamma].

    ``plain`` samples under Q and reports a Wilson interval.  ``tilted`` samples
    under Q_lam with lam the Legendre maximizer at gamma and reweights by
    exp(-lam S + n psi_Q(lam)); its interval is the normal one.
    """
    if method not in ("plain", "tilted"):
        raise ValueError(f"unknown method {method!r}")
    lam = rate_e_q(pair, gamma).lambda_star if method == "tilted" else 0.0
    psi = pair._psi_q(lam)
    total = 0.0
    total_sq = 0.0
    hits = 0
    done = 0
    while done < reps:
        m = min(chunk, reps - done)
        s = pair.sample_llr_sum(n, m, rng, lam)
        hit = s >= n * gamma
        hits += int(hit.sum())
        if method == "tilted":
            w = np.where(hit, np.exp(-lam * s + n * psi), 0.0)
            total += float(w.sum())
            total_sq += float((w * w).sum())
        done += m
    if method == "plain":
        est = hits / reps
        lo, hi = wilson_interval(hits, reps, level)
        se = math.sqrt(est * (1 - est) / reps)
    else:
        est = total / reps
        var = max(total_sq / reps - est * est, 0.0)
        se = math.sqrt(var / reps)
        z = float(stats.norm.ppf(0.5 + level / 2.0))
        lo, hi = max(est - z * se, 0.0), est + z * se
    return TailEstimate(estimate=est, ci_low=lo, ci_high=hi, std_err=se, reps=reps,
                        method=method, tilt=lam, level=level)
