import itertools

import numpy as np
import pytest

from hiddencomm import _kernels as k


def sym(n, rng, diag=False, ties=False):
    a = rng.integers(-3, 4, size=(n, n)).astype(float) if ties else rng.normal(size=(n, n))
    a = np.triu(a, 1)
    a = a + a.T
    if diag:
        np.fill_diagonal(a, rng.normal(size=n))
    return a


def naive_best(L, t, diag):
    """Full recomputation for every subset; lexicographically first maximum."""
    best, best_s = None, -np.inf
    for c in itertools.combinations(range(L.shape[0]), t):
        s = k.seq_score_numpy(L, np.array(c), diag)
        if s > best_s:
            best, best_s = np.array(c), s
    return best, best_s


class TestSeqScore:
    def test_flavours_agree(self, rng):
        L = sym(15, rng, diag=True)
        idx = np.array([1, 4, 7, 9, 14])
        for diag in (False, True):
            assert k.seq_score_numpy(L, idx, diag) == k.seq_score_numba(L, idx, 5, diag)


class TestExhaustive:
    @pytest.mark.parametrize("n,t", [(6, 2), (7, 3), (9, 4), (10, 5), (8, 7), (11, 6)])
    def test_against_naive(self, n, t):
        rng = np.random.default_rng(n * 10 + t)
        for diag in (False, True):
            L = sym(n, rng, diag=diag)
            ref, ref_s = naive_best(L, t, diag)
            for fn in (k.exhaustive_numba, k.exhaustive_numpy):
                best, s = fn(L, t, diag, 1e-9)
                np.testing.assert_array_equal(np.sort(best), ref)
                assert s == ref_s

    def test_ties_lexicographic(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            L = sym(9, rng, ties=True)
            ref, ref_s = naive_best(L, 3, False)
            best, s = k.exhaustive_numba(L, 3, False, 1e-9)
            np.testing.assert_array_equal(np.sort(best), ref)
            assert s == ref_s

    def test_constant_matrix_picks_first(self):
        L = np.ones((7, 7))
        np.fill_diagonal(L, 0)
        best, _ = k.exhaustive_numba(L, 3, False, 1e-9)
        assert sorted(best.tolist()) == [0, 1, 2]

    def test_dispatch(self, kernel_path, rng):
        L = sym(10, rng)
        best, s = k.exhaustive(L, 4, False, 1e-9)
        ref, ref_s = naive_best(L, 4, False)
        np.testing.assert_array_equal(np.sort(best), ref)


class TestLocalSearch:
    def test_flavours_agree(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            n, t = 30, 6
            L = sym(n, rng, diag=bool(rng.integers(2)))
            init = np.sort(rng.choice(n, t, replace=False))
            a, ia = k.local_search_numba(L, init, 1000, 1e-10)
            b, ib = k.local_search_numpy(L, init, 1000, 1e-10)
            np.testing.assert_array_equal(np.sort(a), np.sort(b))
            assert ia == ib

    def test_local_optimum(self):
        rng = np.random.default_rng(4)
        n, t = 25, 5
        L = sym(n, rng)
        out, _ = k.local_search_numba(L, np.arange(t), 1000, 1e-10)
        base = k.seq_score_numpy(L, np.sort(out), False)
        for i in out:
            for j in set(range(n)) - set(out.tolist()):
                alt = np.sort(np.array([x for x in out if x != i] + [j]))
                assert k.seq_score_numpy(L, alt, False) <= base + 1e-9

    def test_max_iters(self):
        rng = np.random.default_rng(5)
        L = sym(20, rng)
        _, it = k.local_search_numba(L, np.arange(4), 1, 1e-10)
        assert it <= 1


class TestFlag:
    @pytest.mark.parametrize("value,expected", [("1", "False"), ("0", "True"), ("", "True")])
    def test_env_flag(self, value, expected):
        import os
        import subprocess
        import sys
        env = dict(os.environ, HIDDENCOMM_DISABLE_NUMBA=value)
        out = subprocess.run([sys.executable, "-c",
                              "from hiddencomm import _kernels; print(_kernels.USE_NUMBA)"],
                             env=env, capture_output=True, text=True, check=True).stdout.strip()
        assert out == expected
