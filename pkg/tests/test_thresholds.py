import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hiddencomm.dists import Bernoulli, DomainError, Gaussian, bern_kl
from hiddencomm.ldp import rate_e_q
from hiddencomm.thresholds import (Verdict, bern_tau_star, bernoulli_p_for_weak_ratio, cap_i,
                                   exact_margin, gauss_exact_margin, gauss_mu_critical,
                                   gaussian_mu_for_weak_ratio, regime_exact_ratio, tau0,
                                   threshold_report, weak_margin)


class TestWeak:
    def test_gaussian_value(self):
        w = weak_margin(10**4, 100, Gaussian(0.6))
        assert w.weak_ratio == pytest.approx(99 * 0.18 / math.log(100))
        assert w.verdict is Verdict.SUFFICIENT

    def test_informative_factor(self):
        w = weak_margin(1000, 10, Gaussian(1.0), "informative")
        assert w.factor == 11

    def test_boundary(self):
        n, K = 1000, 10
        mu = gaussian_mu_for_weak_ratio(n, K, 2.0)
        assert weak_margin(n, K, Gaussian(mu)).weak_ratio == pytest.approx(2.0)
        assert weak_margin(n, K, Gaussian(mu * 0.99)).verdict is Verdict.FAILS

    def test_solve_bernoulli(self):
        p = bernoulli_p_for_weak_ratio(500, 50, 0.1, 3.0)
        assert weak_margin(500, 50, Bernoulli(p, 0.1)).weak_ratio == pytest.approx(3.0, rel=1e-9)

    def test_bad_nk(self):
        with pytest.raises(DomainError):
            weak_margin(10, 10, Gaussian(1.0))


class TestExact:
    def test_gaussian_critical_root(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            n = int(rng.integers(100, 10**6))
            K = int(rng.integers(2, n // 2))
            plus, minus = gauss_mu_critical(n, K)
            g = Gaussian(math.sqrt(plus))
            assert rate_e_q(g, math.log(n / K) / K).e_q == pytest.approx(math.log(n) / K, rel=1e-9)
            assert gauss_exact_margin(n, K, math.sqrt(plus)) == pytest.approx(1.0, abs=1e-9)

    def test_mu_values(self):
        plus, minus = gauss_mu_critical(10**4, 100)
        assert plus == pytest.approx(0.02 * (math.sqrt(math.log(1e4)) + math.sqrt(math.log(100))) ** 2)
        assert minus == pytest.approx(0.02 * (math.sqrt(math.log(1e4)) - math.sqrt(math.log(100))) ** 2)

    def test_gaussian_margins_cross_one_together(self):
        # different parametrisations of the same condition: both cross 1 at mu_+
        n, K = 5000, 40
        plus = gauss_mu_critical(n, K)[0]
        for rel in (0.5, 0.9, 0.99, 1.01, 1.1, 3.0):
            mu = math.sqrt(rel * plus)
            a = exact_margin(n, K, Gaussian(mu)).exact_ratio
            b = gauss_exact_margin(n, K, mu)
            assert (a > 1) == (b > 1) == (rel > 1)

    def test_bernoulli_ratio_matches_tau(self):
        n, K = 10**4, 100
        for p, q in [(0.3, 0.1), (0.5, 0.2), (0.4, 0.15)]:
            e = exact_margin(n, K, Bernoulli(p, q))
            t = bern_tau_star(n, K, p, q)
            assert t.in_range and not e.gamma_clamped
            assert e.exact_ratio == pytest.approx(t.ratio, rel=1e-7)

    def test_clamped_when_gamma_exceeds_divergence(self):
        e = exact_margin(10**4, 100, Bernoulli(0.12, 0.1))
        assert e.gamma_clamped
        assert not bern_tau_star(10**4, 100, 0.12, 0.1).in_range

    def test_tau_star_in_range(self):
        t = bern_tau_star(10**4, 100, 0.3, 0.1)
        assert t.in_range and 0.1 < t.tau_star < 0.3
        assert t.ratio == pytest.approx(100 * bern_kl(t.tau_star, 0.1) / math.log(1e4))


class TestRegime:
    def test_tau0(self):
        assert tau0(3, 1) == pytest.approx(2 / math.log(3))

    def test_cap_i(self):
        assert cap_i(1.0, 1.0) == pytest.approx(0.0)
        t = tau0(3, 1)
        assert cap_i(1, t) == pytest.approx(1 - t * math.log(math.e / t))

    @settings(max_examples=50)
    @given(a=st.floats(0.1, 20), b=st.floats(0.1, 20))
    def test_tau0_between(self, a, b):
        if abs(a - b) < 1e-3:
            return
        t = tau0(a, b)
        assert min(a, b) < t < max(a, b)
        # I(a, tau0) = I(b, tau0) at the balancing point
        assert cap_i(a, t) == pytest.approx(cap_i(b, t), rel=1e-9, abs=1e-12)

    def test_regime_ratio(self):
        assert regime_exact_ratio(0.5, 3, 1) == pytest.approx(0.5 * cap_i(1, tau0(3, 1)))


class TestReport:
    def test_bernoulli_extras(self):
        rep = threshold_report(10**4, 100, Bernoulli(0.3, 0.1))
        assert set(rep.verdicts) == {"weak", "exact"}
        assert "tau_star" in rep.extras and "regime_exact_ratio" in rep.extras
        assert rep.as_dict()["n"] == 10**4

    def test_gaussian_extras(self):
        rep = threshold_report(10**4, 100, Gaussian(0.6))
        assert rep.extras["gauss_exact_ratio"] == pytest.approx(gauss_exact_margin(10**4, 100, 0.6))
        assert rep.extras["gauss_exact_verdict"] == rep.verdicts["exact"]

    def test_verdict_ordering(self):
        n, K = 10**4, 100
        plus, minus = gauss_mu_critical(n, K)
        assert threshold_report(n, K, Gaussian(math.sqrt(1.2 * plus))).verdicts["exact"] == "SUFFICIENT"
        assert threshold_report(n, K, Gaussian(math.sqrt(0.8 * plus))).verdicts["exact"] == "FAILS"


class TestRegimeConvergence:
    """K d(tau*||q)/log n approaches rho I(b, tau0) only at rate 1/log n."""

    @staticmethod
    def gap(n, rho=0.5, a=3.0, b=1.0):
        K = int(rho * n)
        s = math.log(n) / n
        ts = bern_tau_star(n, K, a * s, b * s)
        direct = K * bern_kl(ts.tau_star, b * s) / math.log(n)
        return direct, ts.tau_star / s

    def test_gap_shrinks(self):
        target = regime_exact_ratio(0.5, 3.0, 1.0)
        gaps = [abs(self.gap(n)[0] - target) / target for n in (10**4, 10**6, 10**9, 10**12)]
        assert all(x > y for x, y in zip(gaps, gaps[1:]))

    def test_poisson_form_at_actual_tau(self):
        # the I-formula is accurate once evaluated at tau* itself rather than tau0
        for n in (10**6, 10**9):
            direct, t = self.gap(n)
            assert direct == pytest.approx(0.5 * cap_i(1.0, t), rel=1e-3)
