"""Weak recovery plus voting cleanup with successive withholding.

The index set is split at random into about 1/delta blocks.  For each block
the weak estimator runs on the matrix with that block withheld, with target
size ceil(K(1 - delta)); every withheld index is then scored by its total
LLR into that estimate, and the K best-scored indices overall are returned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dists import DistPair, DomainError
from .estimators import METHODS, Estimate, e_stat, estimate
from .model import Instance, LlrMatrix, llr_matrix


class ContractViolation(ValueError):
    pass


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class CleanupConfig:
    delta: float = 1.0 / 3.0
    weak_method: str = "exhaustive"
    partition_seed: int | None = None
    estimator_options: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise DomainError(f"delta must lie in (0, 1), got {self.delta}")
        if self.weak_method not in METHODS:
            raise ConfigurationError(f"weak_method must be one of {METHODS}")


@dataclass(frozen=True, eq=False)
class Partition:
    blocks: tuple
    rounded: bool


def partition(n: int, delta: float, seed=None) -> Partition:
    """Uniformly random partition of range(n) into round(1/delta) blocks.

    Block sizes are n*delta when both 1/delta and n*delta are integers;
    otherwise they differ by at most one (``rounded`` is set).
    ``seed`` may be an int, a SeedSequence or a Generator.
    """
    if not 0.0 < delta < 1.0:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    m = max(1, round(1.0 / delta))
    if m > n:
        raise DomainError(f"{m} blocks cannot partition {n} indices")
    integral = abs(1.0 / delta - m) < 1e-9 and abs(n * delta - round(n * delta)) < 1e-9
    perm = np.random.default_rng(seed).permutation(n)
    blocks = tuple(np.sort(b).astype(np.int64) for b in np.array_split(perm, m))
    return Partition(blocks=blocks, rounded=not integral)


def vote_scores(lmat: LlrMatrix, chat_k, s_k) -> dict[int, float]:
    """r_i = sum_{j in chat_k} L_ij for every withheld i in s_k."""
    chat = np.asarray(sorted(set(int(x) for x in chat_k)), dtype=np.int64)
    s = np.asarray(sorted(set(int(x) for x in s_k)), dtype=np.int64)
    if np.intersect1d(chat, s).size:
        raise ContractViolation("estimate and withheld block overlap")
    if chat.size == 0:
        return {int(i): 0.0 for i in s}
    r = lmat.l_values[np.ix_(s, chat)].sum(axis=1)
    return {int(i): float(v) for i, v in zip(s, r)}


@dataclass(frozen=True, eq=False)
class CleanupResult:
    estimate: Estimate
    partition: Partition
    block_estimates: tuple  # per block, sorted global indices of C-hat_k
    votes: np.ndarray  # r_i for every index
    target_size: int
    voting_threshold: float
    block_symdiff: tuple | None = None  # |C-hat_k symdiff C*_k| when ground truth is known


def weak_target_size(K: int, delta: float) -> int:
    return math.ceil(K * (1.0 - delta) - 1e-9)


def clean_up_llr(lmat: LlrMatrix, K: int, config: CleanupConfig,
                 rng: np.random.Generator | None = None,
                 truth=None) -> CleanupResult:
    n = lmat.n
    rng = rng if rng is not None else np.random.default_rng(0)
    part_seed = config.partition_seed if config.partition_seed is not None else rng
    part = partition(n, config.delta, part_seed)
    k_weak = weak_target_size(K, config.delta)
    votes = np.zeros(n)
    chats = []
    symdiffs = [] if truth is not None else None
    truth_set = set(int(x) for x in truth) if truth is not None else None
    for block in part.blocks:
        rest = np.setdiff1d(np.arange(n), block)
        if k_weak > len(rest) or k_weak < 1:
            raise ConfigurationError(f"reduced set of size {len(rest)} cannot host a "
                                     f"community of size {k_weak}")
        sub = lmat.submatrix(rest)
        est = estimate(sub, k_weak, config.weak_method, rng, **config.estimator_options)
        chat = rest[est.community_hat]
        chats.append(chat)
        for i, r in vote_scores(lmat, chat, block).items():
            votes[i] = r
        if truth_set is not None:
            star_k = truth_set.difference(int(x) for x in block)
            symdiffs.append(len(star_k.symmetric_difference(int(x) for x in chat)))
    top = np.sort(np.argsort(-votes, kind="stable")[:K]).astype(np.int64)
    est = Estimate(community_hat=top, score=e_stat(lmat, top, top), method="cleanup")
    gamma = math.log(n / K) / K if K < n else 0.0
    return CleanupResult(estimate=est, partition=part, block_estimates=tuple(chats),
                         votes=votes, target_size=k_weak,
                         voting_threshold=K * (1.0 - config.delta) * gamma,
                         block_symdiff=tuple(symdiffs) if symdiffs is not None else None)


def clean_up(instance: Instance, K: int, pair: DistPair | None, config: CleanupConfig,
             rng: np.random.Generator | None = None) -> CleanupResult:
    lmat = llr_matrix(instance, pair)
    truth = instance.community if len(instance.community) else None
    return clean_up_llr(lmat, K, config, rng, truth=truth)
