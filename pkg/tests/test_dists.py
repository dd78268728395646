import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from hiddencomm.dists import (Bernoulli, DomainError, FiniteSupport, Gaussian, Measure,
                              bern_kl, pair_from_dict, parse_pair)

PAIRS = [Gaussian(0.5), Gaussian(2.0), Bernoulli(0.5, 0.25), Bernoulli(0.2, 0.6),
         FiniteSupport((0.2, 0.3, 0.5), (0.4, 0.4, 0.2))]

probs = st.floats(min_value=0.02, max_value=0.98)


def psi_q_oracle(pair, lam):
    """log E_Q[exp(lam L)] by brute force over the support or by quadrature."""
    if isinstance(pair, Gaussian):
        f = lambda x: math.exp(lam * pair.llr(x)) * stats.norm.pdf(x)
        return math.log(integrate.quad(f, -30, 30, limit=200)[0])
    if isinstance(pair, Bernoulli):
        return math.log(pair.q * math.exp(lam * pair.l1) + (1 - pair.q) * math.exp(lam * pair.l0))
    ls = np.log(pair.p / pair.q)
    return math.log(float(np.sum(pair.q * np.exp(lam * ls))))


def psi_p_oracle(pair, lam):
    """Computed under P directly, not through the psi_Q shift."""
    if isinstance(pair, Gaussian):
        f = lambda x: math.exp(lam * pair.llr(x)) * stats.norm.pdf(x, loc=pair.mu)
        return math.log(integrate.quad(f, -30, 30, limit=200)[0])
    if isinstance(pair, Bernoulli):
        return math.log(pair.p * math.exp(lam * pair.l1) + (1 - pair.p) * math.exp(lam * pair.l0))
    ls = np.log(pair.p / pair.q)
    return math.log(float(np.sum(pair.p * np.exp(lam * ls))))


class TestConstruction:
    @pytest.mark.parametrize("p,q", [(0.0, 0.5), (0.5, 1.0), (0.3, 0.3), (1.2, 0.1)])
    def test_bad_bernoulli(self, p, q):
        with pytest.raises(DomainError):
            Bernoulli(p, q)

    def test_bad_gaussian(self):
        with pytest.raises(DomainError):
            Gaussian(0.0)

    def test_bad_finite(self):
        with pytest.raises(DomainError):
            FiniteSupport((0.5, 0.5), (1.0, 0.0))
        with pytest.raises(DomainError):
            FiniteSupport((0.5, 0.6), (0.5, 0.5))

    def test_round_trip(self):
        for pair in PAIRS:
            assert pair_from_dict(pair.to_dict()) == pair
            assert parse_pair(pair.describe()) == pair

    def test_unknown_kind(self):
        with pytest.raises((DomainError, ValueError)):
            parse_pair('{"kind": "poisson", "lam": 1}')


class TestLlr:
    def test_gaussian_llr(self):
        g = Gaussian(2.0)
        assert g.llr(1.0) == pytest.approx(2.0 * 1.0 - 2.0)
        x = np.linspace(-3, 3, 7)
        np.testing.assert_allclose(g.llr(x), stats.norm.logpdf(x, 2.0) - stats.norm.logpdf(x))

    def test_bernoulli_llr(self):
        b = Bernoulli(0.5, 0.25)
        assert b.llr(1) == pytest.approx(math.log(2))
        assert b.llr(0) == pytest.approx(math.log(0.5 / 0.75))
        with pytest.raises(DomainError):
            b.llr(0.5)

    def test_finite_llr_out_of_support(self):
        f = FiniteSupport((0.2, 0.8), (0.5, 0.5))
        assert f.llr(1) == pytest.approx(math.log(1.6))
        with pytest.raises(DomainError):
            f.llr(2)


class TestDivergences:
    def test_gaussian_kl(self):
        assert Gaussian(1.5).kl_pq() == pytest.approx(1.125)
        assert Gaussian(1.5).kl_qp() == pytest.approx(1.125)

    def test_bernoulli_kl(self):
        b = Bernoulli(0.5, 0.25)
        assert b.kl_pq() == pytest.approx(0.5 * math.log(2) + 0.5 * math.log(0.5 / 0.75))
        assert b.kl_qp() == pytest.approx(bern_kl(0.25, 0.5))

    @given(p=probs, q=probs)
    def test_kl_nonneg(self, p, q):
        if abs(p - q) < 1e-6:
            return
        b = Bernoulli(p, q)
        assert b.kl_pq() > 0 and b.kl_qp() > 0


class TestLogMgf:
    @pytest.mark.parametrize("pair", PAIRS, ids=str)
    def test_endpoints(self, pair):
        assert pair.psi_q(0.0) == pytest.approx(0.0, abs=1e-12)
        assert pair.psi_q(1.0) == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("pair", PAIRS, ids=str)
    @pytest.mark.parametrize("lam", [-1.5, -0.5, 0.3, 0.7, 1.5])
    def test_against_oracles(self, pair, lam):
        assert pair.psi_q(lam) == pytest.approx(psi_q_oracle(pair, lam), rel=1e-7, abs=1e-9)
        assert pair.psi_p(lam) == pytest.approx(psi_p_oracle(pair, lam), rel=1e-7, abs=1e-9)

    @pytest.mark.parametrize("pair", PAIRS, ids=str)
    def test_derivatives_at_endpoints(self, pair):
        h = 1e-6
        d0 = (pair.psi_q(h) - pair.psi_q(-h)) / (2 * h)
        d1 = (pair.psi_q(1 + h) - pair.psi_q(1 - h)) / (2 * h)
        assert d0 == pytest.approx(-pair.kl_qp(), rel=1e-5)
        assert d1 == pytest.approx(pair.kl_pq(), rel=1e-5)

    @pytest.mark.parametrize("pair", PAIRS, ids=str)
    def test_second_derivative_matches_fd(self, pair):
        h = 1e-4
        for lam in (-0.8, 0.0, 0.4, 1.0):
            fd = (pair.psi_q(lam + h) - 2 * pair.psi_q(lam) + pair.psi_q(lam - h)) / h**2
            assert pair.psi_q_dd(lam) == pytest.approx(fd, rel=1e-4)

    def test_range_enforced(self):
        with pytest.raises(DomainError):
            Gaussian(1.0).psi_q(2.5)

    @settings(max_examples=60)
    @given(p=probs, q=probs, a=st.floats(-1, 1), b=st.floats(-1, 1), t=st.floats(0, 1))
    def test_convex(self, p, q, a, b, t):
        if abs(p - q) < 1e-3:
            return
        pair = Bernoulli(p, q)
        mid = pair.psi_q(t * a + (1 - t) * b)
        assert mid <= t * pair.psi_q(a) + (1 - t) * pair.psi_q(b) + 1e-10

    @settings(max_examples=60)
    @given(p=probs, q=probs, lam=st.floats(-1, 1))
    def test_p_shift(self, p, q, lam):
        if abs(p - q) < 1e-3:
            return
        pair = Bernoulli(p, q)
        assert pair.psi_p(lam) == pytest.approx(pair.psi_q(lam + 1), abs=1e-10)


class TestSampling:
    def test_measures(self, rng):
        g = Gaussian(1.0)
        assert abs(g.sample(Measure.P, rng, size=20000).mean() - 1.0) < 0.05
        assert abs(g.sample("Q", rng, size=20000).mean()) < 0.05
        b = Bernoulli(0.7, 0.2)
        assert abs(b.sample(Measure.P, rng, size=20000).mean() - 0.7) < 0.02
        f = FiniteSupport((0.1, 0.9), (0.6, 0.4))
        assert abs(f.sample(Measure.Q, rng, size=20000).mean() - 0.4) < 0.02

    def test_seeded(self):
        b = Bernoulli(0.7, 0.2)
        a1 = b.sample(Measure.P, np.random.default_rng(5), size=50)
        a2 = b.sample(Measure.P, np.random.default_rng(5), size=50)
        np.testing.assert_array_equal(a1, a2)

    @pytest.mark.parametrize("pair", PAIRS, ids=str)
    def test_llr_sum_mean_under_tilt(self, pair, rng):
        # mean of the sum under Q_lam is n psi_Q'(lam)
        n, lam, h = 20, 0.3, 1e-6
        s = pair.sample_llr_sum(n, 40000, rng, lam)
        slope = (pair.psi_q(lam + h) - pair.psi_q(lam - h)) / (2 * h)
        sd = math.sqrt(n * pair.psi_q_dd(lam) / 40000)
        assert abs(s.mean() - n * slope) < 5 * sd
