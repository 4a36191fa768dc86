"""Consumption curve evaluation, regime classification, risk-tolerance band.

Frozen high-precision values (40-digit arithmetic) for beta = 25/9,
lambda = 1, T = 1:
    c(0)        = 2.501294573933245
    int_0^T c   = 1.860969350357791
"""
import math

import numpy as np
import pytest

from merton_arena import (
    ConsumptionPolicy,
    OutOfDomain,
    Regime,
    classify_regime,
    consumption_rate,
    cumulative_consumption,
    delta_band,
    regime_report,
)

C0_REF = 2.501294573933245
INT_REF = 1.860969350357791


def random_policies(rng, count):
    for _ in range(count):
        yield ConsumptionPolicy(
            beta=float(rng.uniform(-4.0, 4.0)),
            lam=float(rng.uniform(0.1, 4.0)),
            horizon=float(rng.uniform(0.25, 2.0)),
        )


class TestConsumptionRate:
    def test_zero_beta_start(self):
        pol = ConsumptionPolicy(0.0, 1.0, 1.0)
        assert pol.rate(0.0) == 0.5

    def test_terminal_value_is_lambda(self):
        rng = np.random.default_rng(0)
        for pol in random_policies(rng, 50):
            assert pol.rate(pol.horizon) == pytest.approx(pol.lam, abs=1e-14)

    def test_frozen_high_precision_value(self):
        pol = ConsumptionPolicy(25.0 / 9.0, 1.0, 1.0)
        assert pol.rate(0.0) == pytest.approx(C0_REF, rel=1e-14)

    def test_positive_everywhere(self):
        rng = np.random.default_rng(1)
        for pol in random_policies(rng, 100):
            t = np.linspace(0.0, pol.horizon, 101)
            assert np.all(pol.rate(t) > 0.0)

    def test_out_of_domain(self):
        pol = ConsumptionPolicy(1.0, 1.0, 1.0)
        with pytest.raises(OutOfDomain):
            pol.rate(-0.01)
        with pytest.raises(OutOfDomain):
            pol.rate(1.01)

    def test_module_function_alias(self):
        pol = ConsumptionPolicy(0.0, 2.0, 1.0)
        assert consumption_rate(pol, 1.0) == 2.0


class TestCumulativeConsumption:
    def test_zero_beta(self):
        pol = ConsumptionPolicy(0.0, 1.0, 1.0)
        assert pol.cumulative(0.0) == pytest.approx(math.log(2.0), abs=1e-15)

    def test_zero_at_horizon(self):
        rng = np.random.default_rng(2)
        for pol in random_policies(rng, 50):
            assert pol.cumulative(pol.horizon) == 0.0

    def test_frozen_high_precision_value(self):
        pol = ConsumptionPolicy(25.0 / 9.0, 1.0, 1.0)
        assert pol.cumulative(0.0) == pytest.approx(INT_REF, rel=1e-14)

    def test_module_function_alias(self):
        pol = ConsumptionPolicy(0.0, 1.0, 2.0)
        assert cumulative_consumption(pol, 0.0) == pytest.approx(math.log(3.0), abs=1e-14)


class TestCurveIdentities:
    def test_growth_identity(self):
        # c(t) exp(int_t^T c) = lambda e^(beta (T-t)) across the domain
        rng = np.random.default_rng(3)
        for pol in random_policies(rng, 200):
            t = np.linspace(0.0, pol.horizon, 37)
            lhs = pol.rate(t) * np.exp(pol.cumulative(t))
            rhs = pol.lam * np.exp(pol.beta * (pol.horizon - t))
            assert np.max(np.abs(lhs / rhs - 1.0)) <= 1e-10

    def test_fundamental_theorem(self):
        # d/dt [-cumulative](t) = c(t), checked by central differences
        rng = np.random.default_rng(4)
        h = 1e-5
        for pol in random_policies(rng, 100):
            t = np.linspace(0.0, pol.horizon - h, 23)
            deriv = (pol.cumulative(t) - pol.cumulative(t + h)) / h
            assert np.max(np.abs(deriv - pol.rate(t + h / 2.0))) <= 1e-6

    def test_branch_continuity(self):
        t = np.linspace(0.0, 1.0, 201)
        near = ConsumptionPolicy(1e-13, 1.3, 1.0)
        exact = ConsumptionPolicy(0.0, 1.3, 1.0)
        assert np.max(np.abs(near.rate(t) - exact.rate(t))) <= 1e-9
        assert np.max(np.abs(near.cumulative(t) - exact.cumulative(t))) <= 1e-9

    def test_monotonicity_matches_sign(self):
        rng = np.random.default_rng(5)
        for pol in random_policies(rng, 1000):
            t = np.sort(rng.uniform(0.0, pol.horizon, size=(100, 2)), axis=1)
            t1, t2 = t[:, 0], t[:, 1]
            change = pol.rate(t2) - pol.rate(t1)
            sign = np.sign(pol.lam - pol.beta)
            keep = t2 > t1
            assert np.all(np.sign(change[keep]) == sign)


class TestClassifyRegime:
    def test_decreasing(self):
        assert classify_regime(25.0 / 9.0, 1.0) is Regime.DECREASING

    def test_increasing(self):
        assert classify_regime(0.0, 1.0) is Regime.INCREASING

    def test_constant(self):
        assert classify_regime(1.0, 1.0) is Regime.CONSTANT

    def test_tolerance_boundary(self):
        lam = 1.0
        assert classify_regime(lam + 5e-13, lam) is Regime.CONSTANT
        assert classify_regime(lam + 5e-12, lam) is Regime.DECREASING
        assert classify_regime(lam - 5e-12, lam) is Regime.INCREASING

    def test_lambda_must_be_positive(self):
        with pytest.raises(ValueError):
            classify_regime(0.0, 0.0)


class TestDeltaBand:
    def test_merton_band(self):
        band = delta_band(5.0, 1.0, 0.0, 0.52)
        assert band is not None
        lo, hi = band
        assert lo == pytest.approx(0.08768943743823394, abs=1e-12)
        assert hi == pytest.approx(0.9123105625617661, abs=1e-12)
        # endpoints solve beta(delta) = 12.5 delta (1 - delta) = 1
        for d in band:
            assert 12.5 * d * (1.0 - d) == pytest.approx(1.0, abs=1e-12)

    def test_high_volatility_empty(self):
        assert delta_band(1.0, 1.0, 0.3, 0.52) is None
        # 8 sigma^2 lands a hair above mu^2 = 16 here; >= must return None
        assert delta_band(4.0, math.sqrt(2.0), 0.3, 0.52) is None

    def test_critical_competition_empty(self):
        assert delta_band(5.0, 1.0, 0.52, 0.52) is None

    def test_ordering_both_sides_of_critical(self):
        lo, hi = delta_band(5.0, 1.0, 0.3, 0.52)
        assert lo < hi < 1.0
        lo, hi = delta_band(5.0, 1.0, 0.9, 0.52)
        assert 1.0 < lo < hi

    def test_band_matches_regime_classification(self):
        # single-stock equilibrium: decreasing exactly inside the band
        mu, sigma, tc = 5.0, 1.0, 0.52
        for theta in (0.0, 0.2, 0.75, 1.0):
            band = delta_band(mu, sigma, theta, tc)
            x = theta / tc
            for delta in np.linspace(0.02, 6.0, 121):
                deff = (1.0 - x) * delta + x
                beta = mu**2 / (2.0 * sigma**2) * deff * (1.0 - deff)
                regime = classify_regime(beta, 1.0)
                inside = band is not None and band[0] < delta < band[1]
                near_edge = band is not None and min(
                    abs(delta - band[0]), abs(delta - band[1])) < 1e-9
                if near_edge:
                    continue
                assert (regime is Regime.DECREASING) == inside


class TestRegimeReport:
    def test_fields(self):
        rep = regime_report(beta=2.0, lam=1.0, mu=5.0, sigma=1.0, theta=0.0,
                            theta_crit=0.52)
        assert rep.regime is Regime.DECREASING
        assert rep.band is not None
        assert rep.condition_8s2_gt_m2 is False

    def test_high_volatility_flag(self):
        rep = regime_report(beta=0.2, lam=1.0, mu=1.0, sigma=1.0, theta=0.0,
                            theta_crit=0.52)
        assert rep.band is None
        assert rep.condition_8s2_gt_m2 is True


class TestPolicyValidation:
    def test_lambda_positive(self):
        with pytest.raises(ValueError):
            ConsumptionPolicy(0.0, 0.0, 1.0)

    def test_horizon_positive(self):
        with pytest.raises(ValueError):
            ConsumptionPolicy(0.0, 1.0, -1.0)
