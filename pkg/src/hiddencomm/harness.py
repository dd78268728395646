"""Monte Carlo driver: trial batteries, parameter sweeps and bound checks.

Per-trial randomness comes from ``SeedSequence(master_seed, spawn_key=(i, s))``
with ``s = 0`` for the instance and ``s = 1`` for the estimator, so trial i
sees the same instance whatever the method, the thread count or the order in
which trials finish.  Sweeps reuse those streams at every grid point
(common random numbers), which keeps curves across a grid smooth.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from scipy import stats

from . import __version__
from .cleanup import CleanupConfig, clean_up_llr
from .dists import Bernoulli, DistPair, DomainError, Gaussian, pair_from_dict
from .estimators import estimate
from .ldp import (TailEstimate, binom_lower_tail_bound, binom_upper_tail_bound,
                  chernoff_tail_upper, estimate_q_tail, ld_lower_bound, wilson_interval)
from .model import DiagMode, llr_matrix, sample_instance
from .thresholds import (bernoulli_p_for_weak_ratio, gauss_mu_critical,
                         gaussian_mu_for_weak_ratio, threshold_report)

log = logging.getLogger(__name__)

THREADS_ENV = "HIDDENCOMM_THREADS"
GIT_DESCRIBE = "unversioned"
PIPELINES = ("exhaustive", "local", "degree", "cleanup")


class TrialError(RuntimeError):
    pass


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def trial_rng(master_seed: int, trial: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(trial, stream)))


@dataclass(frozen=True)
class PointSpec:
    pair: DistPair
    n: int
    K: int
    method: str = "exhaustive"
    diag_mode: DiagMode = DiagMode.ZERO
    cleanup: CleanupConfig | None = None
    estimator_options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in PIPELINES:
            raise ValueError(f"method must be one of {PIPELINES}")


@dataclass(frozen=True)
class TrialOutcome:
    symdiff: int
    score: float
    weak_exact: bool | None = None  # cleanup only: every block estimate equals C*_k


def run_one(point: PointSpec, master_seed: int, trial: int) -> TrialOutcome:
    inst = sample_instance(point.n, point.K, point.pair, trial_rng(master_seed, trial, 0),
                           point.diag_mode)
    lmat = llr_matrix(inst)
    rng = trial_rng(master_seed, trial, 1)
    weak_exact = None
    if point.method == "cleanup":
        cfg = point.cleanup or CleanupConfig()
        res = clean_up_llr(lmat, point.K, cfg, rng, truth=inst.community)
        est = res.estimate
        weak_exact = all(d == 0 for d in res.block_symdiff)
    else:
        est = estimate(lmat, point.K, point.method, rng, **point.estimator_options)
    # accounting always against the ground truth, never the estimator's own report
    sd = len(set(inst.community.tolist()) ^ set(est.community_hat.tolist()))
    return TrialOutcome(symdiff=sd, score=est.score, weak_exact=weak_exact)


@dataclass(frozen=True)
class TrialStats:
    trials: int
    exact_successes: int
    mean_hamming_frac: float
    mean_symdiff: float
    wilson_ci: tuple
    hamming_ci: tuple
    symdiffs: tuple
    weak_step_successes: int | None = None

    @property
    def exact_rate(self) -> float:
        return self.exact_successes / self.trials

    @property
    def weak_step_exact_rate(self) -> float | None:
        if self.weak_step_successes is None:
            return None
        return self.weak_step_successes / self.trials


def aggregate(symdiffs, K: int, level: float = 0.95, weak_exact=None) -> TrialStats:
    sd = np.asarray(symdiffs, dtype=np.int64)
    t = len(sd)
    succ = int(np.count_nonzero(sd == 0))
    frac = sd / K
    mean = float(frac.mean())
    se = float(frac.std(ddof=1) / math.sqrt(t)) if t > 1 else 0.0
    z = float(stats.norm.ppf(0.5 + level / 2))
    return TrialStats(trials=t, exact_successes=succ, mean_hamming_frac=mean,
                      mean_symdiff=float(sd.mean()), wilson_ci=wilson_interval(succ, t, level),
                      hamming_ci=(mean - z * se, mean + z * se), symdiffs=tuple(int(x) for x in sd),
                      weak_step_successes=(None if weak_exact is None
                                           else int(sum(bool(w) for w in weak_exact))))


def run_trials(point: PointSpec, trials: int, master_seed: int,
               threads: int | None = None) -> TrialStats:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    threads = threads or default_threads()

    def job(i):
        try:
            return run_one(point, master_seed, i)
        except Exception as exc:
            raise TrialError(f"trial {i}: {exc}") from exc

    if threads == 1:
        outcomes = [job(i) for i in range(trials)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(job, range(trials)))
    weak = [o.weak_exact for o in outcomes] if point.method == "cleanup" else None
    return aggregate([o.symdiff for o in outcomes], point.K, weak_exact=weak)


# ------------------------------------------------------------------- sweeps

def _grid_values(spec) -> list[float]:
    if isinstance(spec, dict):
        return [float(v) for v in np.linspace(spec["start"], spec["stop"], int(spec["num"]))]
    if isinstance(spec, (list, tuple)):
        return [float(v) for v in spec]
    return [float(spec)]


@dataclass
class SweepConfig:
    pair: dict
    n: list
    k_rule: dict
    grid: dict = field(default_factory=dict)
    trials: int = 100
    method: str = "exhaustive"
    cleanup: dict | None = None
    master_seed: int = 0
    diag_mode: str = "zero"
    estimator_options: dict = field(default_factory=dict)
    timing: bool = False

    def __post_init__(self):
        if not self.n:
            raise ValueError("n grid must be nonempty")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if len(self.grid) > 2:
            raise ValueError("at most two swept parameters")
        for k, v in self.grid.items():
            if not _grid_values(v):
                raise ValueError(f"grid for {k!r} is empty")

    @classmethod
    def from_dict(cls, d: dict) -> "SweepConfig":
        d = dict(d)
        if isinstance(d.get("n"), (int, float)):
            d["n"] = [d["n"]]
        return cls(**d)

    def as_dict(self) -> dict:
        return asdict(self)


def k_for(n: int, rule: dict) -> int:
    kind = rule.get("rule", "fixed")
    if kind == "fixed":
        return int(rule["K"])
    if kind == "rho":
        return max(2, int(round(rule["rho"] * n)))
    if kind == "rho_log":
        s = float(rule.get("s", 1.0))
        return max(2, int(round(rule["rho"] * n / math.log(n) ** (s - 1))))
    raise ValueError(f"unknown K rule {kind!r}")


def point_pair(template: dict, n: int, K: int, params: dict, s: float = 1.0,
               diag_mode: str = "zero") -> DistPair:
    """Apply swept parameters to a pair template.

    Recognised keys: mu, mu_sq, mu_sq_rel (multiple of mu_+^2), p, q,
    weak_ratio (solves for p given q, or for mu), and a, b
    (p = a log^s n / n, q = b log^s n / n).
    """
    d = dict(template)
    kind = d.get("kind")
    scale = math.log(n) ** s / n
    for key, v in params.items():
        if key == "mu":
            d["mu"] = v
        elif key == "mu_sq":
            d["mu"] = math.sqrt(v)
        elif key == "mu_sq_rel":
            d["mu"] = math.sqrt(v * gauss_mu_critical(n, K)[0])
        elif key in ("p", "q"):
            d[key] = v
        elif key == "a":
            d["p"] = v * scale
        elif key == "b":
            d["q"] = v * scale
        elif key != "weak_ratio":
            raise ValueError(f"unknown swept parameter {key!r}")
    if "weak_ratio" in params:
        r = params["weak_ratio"]
        if kind == "bernoulli":
            d["p"] = bernoulli_p_for_weak_ratio(n, K, float(d["q"]), r, diag_mode)
        elif kind == "gaussian":
            d["mu"] = gaussian_mu_for_weak_ratio(n, K, r, diag_mode)
        else:
            raise ValueError("weak_ratio sweeps need a bernoulli or gaussian template")
    return pair_from_dict(d)


SWEEP_COLUMNS = [
    "point", "n", "K", "pair", "method",
    "kd", "weak_ratio", "exact_ratio", "weak_verdict", "exact_verdict",
    "trials", "exact_successes", "exact_rate", "wilson_low", "wilson_high",
    "mean_hamming_frac", "hamming_ci_low", "hamming_ci_high", "mean_symdiff",
    "weak_step_exact_rate", "error",
]


def phase_diagram(sweep: SweepConfig, threads: int | None = None) -> list[dict]:
    """One row per (n, grid point); failures land in the ``error`` column."""
    names = sorted(sweep.grid)
    axes = [_grid_values(sweep.grid[k]) for k in names]
    combos = [dict(zip(names, vals)) for vals in
              (np.array(np.meshgrid(*axes, indexing="ij")).reshape(len(axes), -1).T
               if axes else [()])]
    combos = [{k: float(v) for k, v in c.items()} for c in combos]
    s = float(sweep.k_rule.get("s", 1.0))
    cleanup = CleanupConfig(**sweep.cleanup) if sweep.cleanup else None
    rows = []
    idx = 0
    for n in sweep.n:
        n = int(n)
        K = k_for(n, sweep.k_rule)
        for params in combos:
            row: dict[str, Any] = {c: None for c in SWEEP_COLUMNS}
            row.update(point=idx, n=n, K=K, method=sweep.method)
            for k in names:
                row[k] = params[k]
            t0 = time.perf_counter()
            try:
                pair = point_pair(sweep.pair, n, K, params, s, sweep.diag_mode)
                row["pair"] = pair.describe()
                rep = threshold_report(n, K, pair, sweep.diag_mode)
                row.update(kd=rep.kd, weak_ratio=rep.weak_ratio, exact_ratio=rep.exact_ratio,
                           weak_verdict=rep.verdicts["weak"], exact_verdict=rep.verdicts["exact"])
                point = PointSpec(pair=pair, n=n, K=K, method=sweep.method,
                                  diag_mode=DiagMode(sweep.diag_mode), cleanup=cleanup,
                                  estimator_options=dict(sweep.estimator_options))
                st = run_trials(point, sweep.trials, sweep.master_seed, threads)
                row.update(trials=st.trials, exact_successes=st.exact_successes,
                           exact_rate=st.exact_rate, wilson_low=st.wilson_ci[0],
                           wilson_high=st.wilson_ci[1], mean_hamming_frac=st.mean_hamming_frac,
                           hamming_ci_low=st.hamming_ci[0], hamming_ci_high=st.hamming_ci[1],
                           mean_symdiff=st.mean_symdiff,
                           weak_step_exact_rate=st.weak_step_exact_rate)
            except Exception as exc:  # a bad point must not stop the sweep
                row["error"] = f"{type(exc).__name__}: {exc}"
            elapsed = time.perf_counter() - t0
            log.info("point %d (n=%d, K=%d, %s) took %.3fs", idx, n, K, params, elapsed)
            if sweep.timing:
                row["seconds"] = elapsed
            rows.append(row)
            idx += 1
    return rows


# -------------------------------------------------------------- CSV format

def output_header(config: dict, master_seed: int | None) -> dict:
    return {"tool": "hiddencomm", "version": __version__, "git_describe": GIT_DESCRIBE,
            "master_seed": master_seed, "config": config}


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def _parse_cell(s: str):
    if s == "":
        return None
    if s in ("true", "false"):
        return s == "true"
    for cast in (int, float):
        try:
            return cast(s)
        except ValueError:
            pass
    return s


def table_to_csv(rows: list[dict], header: dict) -> str:
    cols: list[str] = []
    for r in rows:
        for k in r:
            if k not in cols:
                cols.append(k)
    buf = io.StringIO()
    buf.write("# " + json.dumps(header, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([_cell(r.get(c)) for c in cols])
    return buf.getvalue()


def write_table(path: str | Path, rows: list[dict], header: dict) -> None:
    Path(path).write_text(table_to_csv(rows, header), encoding="utf-8")


def read_table(path_or_text: str | Path) -> tuple[dict, list[dict]]:
    """Inverse of ``table_to_csv``: (header, rows) with numbers restored."""
    p = Path(path_or_text) if not str(path_or_text).startswith("#") else None
    text = p.read_text(encoding="utf-8") if p is not None else str(path_or_text)
    first, rest = text.split("\n", 1)
    header = json.loads(first[2:])
    reader = csv.reader(io.StringIO(rest))
    cols = next(reader)
    rows = [{c: _parse_cell(v) for c, v in zip(cols, line)} for line in reader if line]
    return header, rows


# ----------------------------------------------------------- bound checks

@dataclass(frozen=True)
class BoundsReport:
    pair: str
    n: int
    gamma: float
    delta: float
    lower: float
    upper: float
    tail: TailEstimate
    holds: bool

    @property
    def vacuous_lower(self) -> bool:
        return self.lower == 0.0

    def row(self) -> dict:
        return {"pair": self.pair, "n": self.n, "gamma": self.gamma, "delta": self.delta,
                "lower": self.lower, "mc_estimate": self.tail.estimate,
                "ci_low": self.tail.ci_low, "ci_high": self.tail.ci_high,
                "upper": self.upper, "method": self.tail.method, "reps": self.tail.reps,
                "holds": self.holds}


def verify_bounds(pair: DistPair, n_samples: int, gamma: float, delta: float,
                  replicates: int, rng: np.random.Generator | int | None = None,
                  method: str = "tilted", level: float = 0.99) -> BoundsReport:
    """Monte Carlo Q[sum L >= n gamma] with a ``level`` CI, checked against both analytic bounds.

    ``holds`` is True when the whole interval sits inside [lower, upper].
    """
    rng = np.random.default_rng(rng)
    lower = ld_lower_bound(pair, n_samples, gamma, delta)
    upper = chernoff_tail_upper(pair, n_samples, gamma)
    tail = estimate_q_tail(pair, n_samples, gamma, replicates, rng, method=method, level=level)
    holds = lower <= tail.ci_low and tail.ci_high <= upper
    return BoundsReport(pair=pair.describe(), n=n_samples, gamma=gamma, delta=delta,
                        lower=lower, upper=upper, tail=tail, holds=holds)


@dataclass(frozen=True)
class BinomCheck:
    n: int
    p: float
    eta: float
    exact_upper: float
    bound_upper: float
    exact_lower: float
    bound_lower: float

    @property
    def holds(self) -> bool:
        return self.exact_upper <= self.bound_upper and self.exact_lower <= self.bound_lower


def verify_binomial_bounds(n: int, p: float, eta: float) -> BinomCheck:
    """Exact binomial tails at (1 +/- eta) n p next to their quadratic Chernoff bounds."""
    hi = math.ceil((1 + eta) * n * p - 1e-9)
    lo = math.floor((1 - eta) * n * p + 1e-9)
    return BinomCheck(n=n, p=p, eta=eta,
                      exact_upper=float(stats.binom.sf(hi - 1, n, p)),
                      bound_upper=binom_upper_tail_bound(n, p, eta),
                      exact_lower=float(stats.binom.cdf(lo, n, p)),
                      bound_lower=binom_lower_tail_bound(n, p, eta))


__all__ = [
    "PointSpec", "TrialStats", "SweepConfig", "run_trials", "run_one", "phase_diagram",
    "verify_bounds", "verify_binomial_bounds", "read_table", "write_table", "table_to_csv",
    "point_pair", "k_for", "aggregate", "trial_rng", "Bernoulli", "Gaussian", "DomainError",
]
