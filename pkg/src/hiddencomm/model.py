"""Hidden community instances and their LLR matrices.

Indices are 0-based in memory and 1-based in every file format.

Instance files are UTF-8 text: a first line ``# {json header}`` followed by
either ``n`` CSV rows of the observation matrix (``payload: "csv"``) or, for
``payload: "binary"``, the raw little-endian bytes of the matrix in C order
with the dtype named in the header.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .dists import DistPair, DomainError, Measure, pair_from_dict


class DiagMode(str, Enum):
    ZERO = "zero"
    INFORMATIVE = "informative"


@dataclass(frozen=True, eq=False)
class Instance:
    n: int
    K: int
    a_values: np.ndarray
    community: np.ndarray  # sorted 0-based indices
    diag_mode: DiagMode = DiagMode.ZERO
    pair: DistPair | None = None
    seed: int | None = None

    @property
    def indicator(self) -> np.ndarray:
        xi = np.zeros(self.n, dtype=bool)
        xi[self.community] = True
        return xi


@dataclass(frozen=True, eq=False)
class LlrMatrix:
    n: int
    l_values: np.ndarray
    diag_mode: DiagMode = DiagMode.ZERO

    @classmethod
    def from_array(cls, values, diag_mode: DiagMode | str = DiagMode.ZERO) -> "LlrMatrix":
        arr = np.ascontiguousarray(values, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise DomainError("LLR matrix must be square")
        mode = DiagMode(diag_mode)
        if mode is DiagMode.ZERO and np.any(np.diag(arr) != 0):
            arr = arr.copy()
            np.fill_diagonal(arr, 0.0)
        return cls(n=arr.shape[0], l_values=arr, diag_mode=mode)

    def submatrix(self, idx) -> "LlrMatrix":
        idx = np.asarray(idx, dtype=np.int64)
        return LlrMatrix(n=len(idx), l_values=np.ascontiguousarray(self.l_values[np.ix_(idx, idx)]),
                         diag_mode=self.diag_mode)


def random_subset(n: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform size-k subset of range(n) by a partial Fisher-Yates shuffle (sorted)."""
    perm = np.arange(n)
    for i in range(k):
        j = int(rng.integers(i, n))
        perm[i], perm[j] = perm[j], perm[i]
    return np.sort(perm[:k])


def sample_instance(n: int, K: int, pair: DistPair, rng: np.random.Generator,
                    diag_mode: DiagMode | str = DiagMode.ZERO,
                    seed: int | None = None) -> Instance:
    """Draw C* uniformly among size-K subsets, then A_ij ~ P inside C* x C* and Q elsewhere."""
    if not (2 <= K <= n):
        raise DomainError(f"need 2 <= K <= n, got n={n}, K={K}")
    mode = DiagMode(diag_mode)
    community = random_subset(n, K, rng)
    a = np.asarray(pair.sample(Measure.Q, rng, size=(n, n)))
    a[np.ix_(community, community)] = pair.sample(Measure.P, rng, size=(K, K))
    a = np.triu(a, 1)
    a = a + a.T
    if mode is DiagMode.INFORMATIVE:
        np.fill_diagonal(a, pair.sample(Measure.Q, rng, size=n))
        a[community, community] = pair.sample(Measure.P, rng, size=K)
    return Instance(n=n, K=K, a_values=a, community=community, diag_mode=mode,
                    pair=pair, seed=seed)


def llr_matrix(instance: Instance, pair: DistPair | None = None) -> LlrMatrix:
    pair = pair if pair is not None else instance.pair
    if pair is None:
        raise DomainError("instance carries no pair; pass one explicitly")
    lv = np.asarray(pair.llr(instance.a_values), dtype=np.float64)
    if instance.diag_mode is DiagMode.ZERO:
        np.fill_diagonal(lv, 0.0)
    return LlrMatrix(n=instance.n, l_values=np.ascontiguousarray(lv), diag_mode=instance.diag_mode)


def edge_list(instance: Instance) -> list[tuple[int, int]]:
    """1-based (i, j), i < j, for every nonzero off-diagonal entry of a Bernoulli instance."""
    i, j = np.nonzero(np.triu(instance.a_values, 1))
    return [(int(a) + 1, int(b) + 1) for a, b in zip(i, j)]


def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(int(v))


def instance_header(instance: Instance, payload: str = "csv", meta: dict | None = None) -> dict:
    h = {
        "n": instance.n,
        "K": instance.K,
        "pair": instance.pair.to_dict() if instance.pair is not None else None,
        "diag_mode": instance.diag_mode.value,
        "seed": instance.seed,
        "community": [int(c) + 1 for c in instance.community],
        "payload": payload,
        "dtype": np.dtype(instance.a_values.dtype).str,
    }
    if meta:
        h["meta"] = meta
    return h


def write_instance(instance: Instance, path: str | Path, payload: str = "csv",
                   meta: dict | None = None) -> None:
    if payload not in ("csv", "binary"):
        raise ValueError(f"unknown payload {payload!r}")
    header = "# " + json.dumps(instance_header(instance, payload, meta), sort_keys=True) + "\n"
    path = Path(path)
    if payload == "csv":
        a = instance.a_values
        rows = [",".join(_fmt(v) for v in row) for row in a]
        path.write_text(header + "\n".join(rows) + "\n", encoding="utf-8")
    else:
        arr = np.ascontiguousarray(instance.a_values)
        data = arr.astype(arr.dtype.newbyteorder("<"), copy=False).tobytes(order="C")
        path.write_bytes(header.encode("utf-8") + data)


def read_instance(path: str | Path) -> Instance:
    raw = Path(path).read_bytes()
    nl = raw.index(b"\n")
    first = raw[:nl].decode("utf-8")
    if not first.startswith("# "):
        raise ValueError(f"{path}: missing JSON header line")
    h = json.loads(first[2:])
    n = int(h["n"])
    dtype = np.dtype(h["dtype"])
    body = raw[nl + 1:]
    if h["payload"] == "binary":
        a = np.frombuffer(body, dtype=dtype.newbyteorder("<")).reshape(n, n).astype(dtype.newbyteorder("="))
    else:
        rows = [line for line in body.decode("utf-8").splitlines() if line]
        a = np.array([[float(x) for x in line.split(",")] for line in rows]).astype(dtype)
    if a.shape != (n, n):
        raise ValueError(f"{path}: payload shape {a.shape} != ({n}, {n})")
    pair = pair_from_dict(h["pair"]) if h.get("pair") else None
    community = np.array(sorted(int(c) - 1 for c in h.get("community") or []), dtype=np.int64)
    return Instance(n=n, K=int(h["K"]), a_values=a, community=community,
                    diag_mode=DiagMode(h["diag_mode"]), pair=pair, seed=h.get("seed"))
