"""Distribution pairs (P, Q) for the hidden community model.

Three kinds are supported: Bernoulli(p) vs Bernoulli(q), N(mu, 1) vs N(0, 1),
and a pair of strictly positive pmfs over a shared finite alphabet.  Every
pair exposes the log-likelihood ratio L = log dP/dQ, both KL divergences,
the log-MGFs psi_Q and psi_P of L and their tilted-variance second
derivative, plus samplers for observations and for sums of LLRs under the
tilted family Q_lambda (Q_0 = Q, Q_1 = P).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from typing import Any

import numpy as np
from scipy.special import logsumexp

# psi is only ever evaluated on this interval
LAMBDA_RANGE = (-2.0, 2.0)
_MASS_TOL = 1e-12


class DomainError(ValueError):
    """Argument outside the domain an operation is defined on."""


class Measure(str, Enum):
    P = "P"
    Q = "Q"


def _check_lambda(lam: float) -> None:
    lo, hi = LAMBDA_RANGE
    if not (lo <= lam <= hi):
        raise DomainError(f"lambda={lam} outside [{lo}, {hi}]")


def bern_kl(a: float, b: float) -> float:
    """Binary divergence d(a||b) with the 0 log 0 = 0 convention."""
    if not (0.0 < b < 1.0):
        raise DomainError(f"d(a||b) needs 0 < b < 1, got b={b}")
    if not (0.0 <= a <= 1.0):
        raise DomainError(f"d(a||b) needs 0 <= a <= 1, got a={a}")
    out = 0.0
    if a > 0.0:
        out += a * math.log(a / b)
    if a < 1.0:
        out += (1.0 - a) * math.log((1.0 - a) / (1.0 - b))
    return out


class DistPair:
    """Common interface; concrete kinds are the dataclasses below."""

    kind: str

    # subclasses implement these
    def llr(self, x): ...
    def kl_pq(self) -> float: ...
    def kl_qp(self) -> float: ...
    def _psi_q(self, lam: float) -> float: ...
    def _psi_p(self, lam: float) -> float: ...
    def _psi_q_dd(self, lam: float) -> float: ...
    def sample(self, measure: Measure | str, rng: np.random.Generator, size=None): ...
    def sample_llr_sum(self, n: int, size: int, rng: np.random.Generator, lam: float = 0.0): ...
    def to_dict(self) -> dict[str, Any]: ...

    def psi_q(self, lam: float) -> float:
        """log E_Q[exp(lam * L)] for lam in [-2, 2]."""
        _check_lambda(lam)
        return self._psi_q(float(lam))

    def psi_p(self, lam: float) -> float:
        """log E_P[exp(lam * L)], computed under P directly (equals psi_q(lam + 1))."""
        _check_lambda(lam)
        return self._psi_p(float(lam))

    def psi_q_dd(self, lam: float) -> float:
        """psi_Q''(lam), i.e. the variance of L under the tilted measure Q_lam."""
        _check_lambda(lam)
        return self._psi_q_dd(float(lam))

    @property
    def llr_bound(self) -> float:
        """max |L| over the support (inf when the LLR is unbounded)."""
        return math.inf

    def describe(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))


@dataclass(frozen=True)
class Bernoulli(DistPair):
    p: float
    q: float
    kind = "bernoulli"

    def __post_init__(self):
        if not (0.0 < self.p < 1.0 and 0.0 < self.q < 1.0):
            raise DomainError(f"Bernoulli pair needs 0 < p, q < 1, got p={self.p}, q={self.q}")
        if self.p == self.q:
            raise DomainError("Bernoulli pair needs p != q")

    @property
    def l1(self) -> float:
        return math.log(self.p / self.q)

    @property
    def l0(self) -> float:
        return math.log((1.0 - self.p) / (1.0 - self.q))

    def llr(self, x):
        arr = np.asarray(x)
        if not np.isin(arr, (0, 1)).all():
            raise DomainError("Bernoulli observations must be 0 or 1")
        out = np.where(arr == 1, self.l1, self.l0)
        return float(out) if out.ndim == 0 else out

    def kl_pq(self) -> float:
        return bern_kl(self.p, self.q)

    def kl_qp(self) -> float:
        return bern_kl(self.q, self.p)

    def _log_terms(self, lam: float, base: float):
        # log(base_k) + lam * L_k for the two atoms (x=1, x=0)
        return math.log(base) + lam * self.l1, math.log1p(-base) + lam * self.l0

    def _psi_q(self, lam):
        return float(np.logaddexp(*self._log_terms(lam, self.q)))

    def _psi_p(self, lam):
        return float(np.logaddexp(*self._log_terms(lam, self.p)))

    def tilted_p1(self, lam: float) -> float:
        """Q_lam(x = 1)."""
        t1, t0 = self._log_terms(lam, self.q)
        return float(math.exp(t1 - np.logaddexp(t1, t0)))

    def _psi_q_dd(self, lam):
        w = self.tilted_p1(lam)
        return w * (1.0 - w) * (self.l1 - self.l0) ** 2

    @property
    def llr_bound(self) -> float:
        return max(abs(self.l1), abs(self.l0))

    def sample(self, measure, rng, size=None):
        prob = self.p if Measure(measure) is Measure.P else self.q
        return (rng.random(size) < prob).astype(np.int8)

    def sample_llr_sum(self, n, size, rng, lam=0.0):
        ones = rng.binomial(n, self.tilted_p1(lam), size=size)
        return ones * self.l1 + (n - ones) * self.l0

    def to_dict(self):
        return {"kind": "bernoulli", "p": self.p, "q": self.q}


@dataclass(frozen=True)
class Gaussian(DistPair):
    """P = N(mu, 1), Q = N(0, 1)."""

    mu: float
    kind = "gaussian"

    def __post_init__(self):
        if self.mu == 0.0 or not math.isfinite(self.mu):
            raise DomainError(f"Gaussian pair needs finite mu != 0, got {self.mu}")

    def llr(self, x):
        arr = np.asarray(x, dtype=float)
        if not np.isfinite(arr).all():
            raise DomainError("Gaussian observations must be finite")
        out = self.mu * (arr - self.mu / 2.0)
        return float(out) if out.ndim == 0 else out

    def kl_pq(self):
        return self.mu**2 / 2.0

    def kl_qp(self):
        return self.mu**2 / 2.0

    def _psi_q(self, lam):
        return (lam * lam - lam) * self.mu**2 / 2.0

    def _psi_p(self, lam):
        return (lam * lam + lam) * self.mu**2 / 2.0

    def _psi_q_dd(self, lam):
        return self.mu**2

    def sample(self, measure, rng, size=None):
        shift = self.mu if Measure(measure) is Measure.P else 0.0
        return rng.standard_normal(size) + shift

    def sample_llr_sum(self, n, size, rng, lam=0.0):
        # under Q_lam, X ~ N(lam * mu, 1) so L ~ N(mu^2 (lam - 1/2), mu^2)
        m2 = self.mu**2
        return n * m2 * (lam - 0.5) + math.sqrt(n * m2) * rng.standard_normal(size)

    def to_dict(self):
        return {"kind": "gaussian", "mu": self.mu}


@dataclass(frozen=True)
class FiniteSupport(DistPair):
    """Two strictly positive pmfs over the alphabet {0, ..., m-1}."""

    p_masses: tuple
    q_masses: tuple
    kind = "finite"

    def __post_init__(self):
        p = np.asarray(self.p_masses, dtype=float)
        q = np.asarray(self.q_masses, dtype=float)
        object.__setattr__(self, "p_masses", tuple(float(v) for v in p))
        object.__setattr__(self, "q_masses", tuple(float(v) for v in q))
        if p.ndim != 1 or p.shape != q.shape or p.size < 2:
            raise DomainError("finite pair needs two mass vectors of equal length >= 2")
        if (p <= 0).any() or (q <= 0).any():
            raise DomainError("every atom needs positive mass under both P and Q")
        if abs(p.sum() - 1.0) > _MASS_TOL or abs(q.sum() - 1.0) > _MASS_TOL:
            raise DomainError("masses must sum to 1 within 1e-12")
        if np.array_equal(p, q):
            raise DomainError("finite pair needs P != Q")

    @property
    def p(self) -> np.ndarray:
        return np.asarray(self.p_masses)

    @property
    def q(self) -> np.ndarray:
        return np.asarray(self.q_masses)

    @property
    def atoms(self) -> np.ndarray:
        """LLR value of each alphabet symbol."""
        return np.log(self.p) - np.log(self.q)

    def llr(self, x):
        arr = np.asarray(x)
        m = len(self.p_masses)
        if not np.issubdtype(arr.dtype, np.integer):
            if not np.array_equal(arr, np.round(arr)):
                raise DomainError("finite observations must be alphabet indices")
            arr = arr.astype(np.int64)
        if ((arr < 0) | (arr >= m)).any():
            raise DomainError(f"finite observations must lie in 0..{m - 1}")
        out = self.atoms[arr]
        return float(out) if out.ndim == 0 else out

    def kl_pq(self):
        return float(np.sum(self.p * self.atoms))

    def kl_qp(self):
        return float(-np.sum(self.q * self.atoms))

    def _psi_q(self, lam):
        return float(logsumexp(np.log(self.q) + lam * self.atoms))

    def _psi_p(self, lam):
        return float(logsumexp(np.log(self.p) + lam * self.atoms))

    def tilted_masses(self, lam: float) -> np.ndarray:
        t = np.log(self.q) + lam * self.atoms
        return np.exp(t - logsumexp(t))

    def _psi_q_dd(self, lam):
        w = self.tilted_masses(lam)
        a = self.atoms
        mean = float(w @ a)
        return float(w @ (a - mean) ** 2)

    @property
    def llr_bound(self) -> float:
        return float(np.max(np.abs(self.atoms)))

    def sample(self, measure, rng, size=None):
        masses = self.p if Measure(measure) is Measure.P else self.q
        cdf = np.cumsum(masses)
        idx = np.searchsorted(cdf, rng.random(size), side="right")
        return np.minimum(idx, len(masses) - 1).astype(np.int32)

    def sample_llr_sum(self, n, size, rng, lam=0.0):
        counts = rng.multinomial(n, self.tilted_masses(lam), size=size)
        return counts @ self.atoms

    def to_dict(self):
        return {"kind": "finite", "p": list(self.p_masses), "q": list(self.q_masses)}


def pair_from_dict(d: dict[str, Any]) -> DistPair:
    kind = d.get("kind")
    if kind == "bernoulli":
        return Bernoulli(float(d["p"]), float(d["q"]))
    if kind == "gaussian":
        return Gaussian(float(d["mu"]))
    if kind == "finite":
        return FiniteSupport(tuple(d["p"]), tuple(d["q"]))
    raise DomainError(f"unknown pair kind {kind!r}")


def parse_pair(text: str | dict) -> DistPair:
    """Build a pair from its JSON descriptor (string or already-decoded dict)."""
    return pair_from_dict(json.loads(text) if isinstance(text, str) else text)


# functional aliases

def llr(pair: DistPair, x):
    return pair.llr(x)


def kl_pq(pair: DistPair) -> float:
    return pair.kl_pq()


def kl_qp(pair: DistPair) -> float:
    return pair.kl_qp()


def psi_q(pair: DistPair, lam: float) -> float:
    return pair.psi_q(lam)


def psi_p(pair: DistPair, lam: float) -> float:
    return pair.psi_p(lam)


def sample(pair: DistPair, measure: Measure | str, rng: np.random.Generator, size=None):
    return pair.sample(measure, rng, size)
