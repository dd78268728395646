"""Finite-n evaluation of the sharp weak and exact recovery conditions.

The conditions are asymptotic (liminf as n grows), so a report at one (n, K)
is a heuristic reading: margins are exact numbers, verdicts are three-way
(strictly above the sufficient cut, strictly below the necessary cut, or on
the boundary in between).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from enum import Enum

from scipy.optimize import brentq

from .dists import Bernoulli, DistPair, DomainError, Gaussian, bern_kl
from .ldp import rate_e_q
from .model import DiagMode

WEAK_CUT = 2.0
EXACT_CUT = 1.0
NOTE = "finite-n reading of asymptotic conditions; interpret trends across n"


class Verdict(str, Enum):
    SUFFICIENT = "SUFFICIENT"
    NECESSARY_ONLY = "NECESSARY_ONLY"
    FAILS = "FAILS"


def _three_way(ratio: float, cut: float) -> Verdict:
    if ratio > cut:
        return Verdict.SUFFICIENT
    if ratio < cut:
        return Verdict.FAILS
    return Verdict.NECESSARY_ONLY


def _check_nk(n: int, K: int) -> None:
    if not (2 <= K < n):
        raise DomainError(f"need 2 <= K < n, got n={n}, K={K}")


@dataclass(frozen=True)
class WeakMargin:
    kd: float
    weak_ratio: float
    weak_ratio_k: float
    verdict: Verdict
    factor: int


def weak_margin(n: int, K: int, pair: DistPair,
                diag_mode: DiagMode | str = DiagMode.ZERO) -> WeakMargin:
    """K D(P||Q) and (K-1) D(P||Q) / log(n/K) against the cut 2.

    With an informative diagonal the factor K-1 becomes K+1.  The K-factor
    variant (valid for bounded LLR) is reported alongside in ``weak_ratio_k``.
    """
    _check_nk(n, K)
    d = pair.kl_pq()
    log_nk = math.log(n / K)
    factor = K + 1 if DiagMode(diag_mode) is DiagMode.INFORMATIVE else K - 1
    ratio = factor * d / log_nk
    return WeakMargin(kd=K * d, weak_ratio=ratio, weak_ratio_k=K * d / log_nk,
                      verdict=_three_way(ratio, WEAK_CUT), factor=factor)


def exact_verdict(weak: Verdict, exact_ratio: float) -> Verdict:
    """Sufficient needs both strict conditions; failing either necessary one fails."""
    if weak is Verdict.FAILS or exact_ratio < EXACT_CUT:
        return Verdict.FAILS
    if weak is Verdict.SUFFICIENT and exact_ratio > EXACT_CUT:
        return Verdict.SUFFICIENT
    return Verdict.NECESSARY_ONLY


@dataclass(frozen=True)
class ExactMargin:
    exact_ratio: float
    verdict: Verdict
    gamma: float
    gamma_clamped: bool


def exact_margin(n: int, K: int, pair: DistPair,
                 diag_mode: DiagMode | str = DiagMode.ZERO) -> ExactMargin:
    """K E_Q(gamma) / log n with gamma = log(n/K) / K, against the cut 1."""
    weak = weak_margin(n, K, pair, diag_mode)
    gamma = math.log(n / K) / K
    r = rate_e_q(pair, gamma, clamp=True)
    ratio = K * r.e_q / math.log(n)
    return ExactMargin(exact_ratio=ratio, verdict=exact_verdict(weak.verdict, ratio),
                       gamma=gamma, gamma_clamped=r.clamped)


@dataclass(frozen=True)
class TauStar:
    tau_star: float
    ratio: float
    in_range: bool
    degenerate: bool


def bern_tau_star(n: int, K: int, p: float, q: float) -> TauStar:
    """tau* = (log(q'/p') + log(n/K)/K) / log(p q' / (q p')) and K d(tau*||q) / log n.

    (primes denote complements.)  ``in_range`` reports tau* strictly between q
    and p; ``degenerate`` flags p = q or tau* outside (0, 1), with ratio nan.
    """
    _check_nk(n, K)
    den = math.log(p * (1 - q) / (q * (1 - p))) if p != q else 0.0
    if den == 0.0:
        return TauStar(math.nan, math.nan, False, True)
    tau = (math.log((1 - q) / (1 - p)) + math.log(n / K) / K) / den
    if not 0.0 < tau < 1.0:
        return TauStar(tau, math.nan, False, True)
    ratio = K * bern_kl(tau, q) / math.log(n)
    return TauStar(tau, ratio, min(p, q) < tau < max(p, q), False)


def gauss_exact_margin(n: int, K: int, mu: float) -> float:
    """K mu^2 / (sqrt(2 log n) + sqrt(2 log K))^2."""
    _check_nk(n, K)
    return K * mu * mu / (math.sqrt(2 * math.log(n)) + math.sqrt(2 * math.log(K))) ** 2


def gauss_mu_critical(n: int, K: int) -> tuple[float, float]:
    """(mu_+^2, mu_-^2) = (2/K)(sqrt(log n) +/- sqrt(log K))^2."""
    _check_nk(n, K)
    a, b = math.sqrt(math.log(n)), math.sqrt(math.log(K))
    return 2.0 / K * (a + b) ** 2, 2.0 / K * (a - b) ** 2


def cap_i(x: float, y: float) -> float:
    """I(x, y) = x - y log(e x / y)."""
    if x <= 0 or y <= 0:
        raise DomainError("cap_i needs x, y > 0")
    return x - y * (1.0 + math.log(x / y))


def tau0(a: float, b: float) -> float:
    if a <= 0 or b <= 0 or a == b:
        raise DomainError("tau0 needs distinct a, b > 0")
    return (a - b) / math.log(a / b)


def regime_exact_ratio(rho: float, a: float, b: float) -> float:
    """rho I(b, tau0); exact recovery in the log-degree regime iff this exceeds 1."""
    return rho * cap_i(b, tau0(a, b))


def bernoulli_p_for_weak_ratio(n: int, K: int, q: float, ratio: float,
                               diag_mode: DiagMode | str = DiagMode.ZERO) -> float:
    """The p > q at which weak_margin(...).weak_ratio equals ``ratio``."""
    _check_nk(n, K)
    factor = K + 1 if DiagMode(diag_mode) is DiagMode.INFORMATIVE else K - 1
    target = ratio * math.log(n / K) / factor
    if not 0 < target < math.log(1 / q):
        raise DomainError(f"weak ratio {ratio} unreachable with q={q}")
    return brentq(lambda p: bern_kl(p, q) - target, q, 1.0 - 1e-15, xtol=1e-15, rtol=1e-15)


def gaussian_mu_for_weak_ratio(n: int, K: int, ratio: float,
                               diag_mode: DiagMode | str = DiagMode.ZERO) -> float:
    _check_nk(n, K)
    factor = K + 1 if DiagMode(diag_mode) is DiagMode.INFORMATIVE else K - 1
    return math.sqrt(2.0 * ratio * math.log(n / K) / factor)


@dataclass
class ThresholdReport:
    n: int
    K: int
    pair: dict
    diag_mode: str
    kd: float
    weak_ratio: float
    weak_ratio_k: float
    exact_ratio: float
    gamma: float
    gamma_clamped: bool
    verdicts: dict
    extras: dict = field(default_factory=dict)
    note: str = NOTE

    def as_dict(self) -> dict:
        return asdict(self)


def threshold_report(n: int, K: int, pair: DistPair,
                     diag_mode: DiagMode | str = DiagMode.ZERO) -> ThresholdReport:
    mode = DiagMode(diag_mode)
    w = weak_margin(n, K, pair, mode)
    e = exact_margin(n, K, pair, mode)
    extras: dict = {}
    if isinstance(pair, Bernoulli):
        ts = bern_tau_star(n, K, pair.p, pair.q)
        extras.update(tau_star=ts.tau_star, bern_exact_ratio=ts.ratio,
                      tau_star_in_range=ts.in_range, tau_star_degenerate=ts.degenerate)
        if not ts.degenerate:
            extras["bern_exact_verdict"] = exact_verdict(w.verdict, ts.ratio).value
        # log-degree regime coordinates at s = 1: p = a log n / n, q = b log n / n, rho = K / n
        scale = n / math.log(n)
        a, b = pair.p * scale, pair.q * scale
        t0 = tau0(a, b)
        extras.update(a=a, b=b, tau0=t0, cap_i=cap_i(b, t0),
                      regime_exact_ratio=regime_exact_ratio(K / n, a, b))
    elif isinstance(pair, Gaussian):
        plus, minus = gauss_mu_critical(n, K)
        g = gauss_exact_margin(n, K, pair.mu)
        extras.update(gauss_exact_ratio=g, mu_plus_sq=plus, mu_minus_sq=minus,
                      gauss_exact_verdict=exact_verdict(w.verdict, g).value)
    return ThresholdReport(
        n=n, K=K, pair=pair.to_dict(), diag_mode=mode.value, kd=w.kd,
        weak_ratio=w.weak_ratio, weak_ratio_k=w.weak_ratio_k, exact_ratio=e.exact_ratio,
        gamma=e.gamma, gamma_clamped=e.gamma_clamped,
        verdicts={"weak": w.verdict.value, "exact": e.verdict.value}, extras=extras)
