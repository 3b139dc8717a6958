import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from curvflow.conditions import (
    ConditionReport,
    ParameterSet,
    RadiusOverflowError,
    bound_budget,
    contraction_exponents,
    delta_interval,
    nu,
    rho_radius,
    sufficient_conditions,
    wdeg_lower_bound,
)


def make_params(**kw):
    base = dict(n=2, mu=2.0, deg=9, wdeg=3, epsilon=0.25, gamma=1.0, delta=1.5, h=0.25)
    base.update(kw)
    return ParameterSet(**base)


class TestNu:
    def test_worked_example(self):
        assert nu(2, 3) == pytest.approx(2.0, abs=1e-14)

    def test_direct_arithmetic(self):
        assert nu(3, 3) == pytest.approx(1.5, abs=1e-14)
        assert nu(2, 2) == pytest.approx(1.5 - 3.5 + 8.0 / 3.0, abs=1e-14)

    def test_rejects_bad_mu(self):
        with pytest.raises(ValueError):
            nu(1.5, 3)


class TestDeltaInterval:
    def test_worked_example(self):
        assert delta_interval(2, 3) == pytest.approx((1.0, 2.0), abs=1e-14)

    def test_mu_above_three(self):
        lo, hi = delta_interval(4, 4)
        assert lo == 2.0
        assert hi == pytest.approx(0.75 - 3.5 + 16.0 / 3.0, abs=1e-14)

    def test_empty(self):
        assert delta_interval(2, 2) is None

    @given(mu=st.floats(2.0, 8.0), wdeg=st.integers(1, 8))
    @settings(max_examples=200, deadline=None)
    def test_monotone_in_wdeg(self, mu, wdeg):
        small = delta_interval(mu, wdeg)
        large = delta_interval(mu, wdeg + 1)
        if small is not None:
            assert large is not None
            assert large[0] == small[0]
            assert large[1] > small[1]


class TestWdegLowerBound:
    def test_examples(self):
        assert wdeg_lower_bound(2) == pytest.approx(2.25, abs=1e-14)
        assert wdeg_lower_bound(4) == pytest.approx(0.75 * (5.5 - 0.75), abs=1e-14)
        assert wdeg_lower_bound(1e6) == pytest.approx(0.75 * 5.5, rel=1e-5)

    @given(mu=st.floats(2.0, 50.0), wdeg=st.integers(1, 12))
    @settings(max_examples=200, deadline=None)
    def test_threshold_matches_interval(self, mu, wdeg):
        # the bound is exactly the w-threshold for a nonempty delta interval
        if wdeg > wdeg_lower_bound(mu):
            assert delta_interval(mu, wdeg) is not None
        else:
            assert delta_interval(mu, wdeg) is None


class TestContractionExponents:
    def test_ambient_dimension_three_mu2(self):
        p = make_params(mu=2.0, delta=1.5)
        assert contraction_exponents(p) == pytest.approx([1.5, 8.5, 0.5, 15.5, 7.5])

    def test_ambient_dimension_three_mu4(self):
        p = make_params(mu=4.0, delta=2.2)
        assert contraction_exponents(p) == pytest.approx([4.15, 9.7, 1.7, 15.25, 7.25])

    def test_third_entry_collapse_at_mu_eq_dim(self):
        # with mu = n+1 the min() term vanishes: third entry is delta+1-(n+1)/2
        for n, delta in [(1, 0.3), (2, 0.8), (3, 1.1)]:
            p = make_params(n=n, mu=float(n + 1), delta=delta)
            third = contraction_exponents(p)[2]
            assert third == pytest.approx(delta + 1.0 - (n + 1) / 2.0, abs=1e-14)

    def test_exponent_positivity_inside_interval(self):
        rng = np.random.default_rng(42)
        count = 0
        while count < 100:
            mu = rng.uniform(2.0, 6.0)
            wdeg = int(rng.integers(3, 7))
            iv = delta_interval(mu, wdeg)
            if iv is None:
                continue
            delta = rng.uniform(iv[0], iv[1])
            deg = int(max(9, 2 * wdeg + 1))
            p = make_params(mu=mu, wdeg=wdeg, deg=deg, delta=delta, h=rng.uniform(0.01, 0.99))
            assert all(e > 0 for e in contraction_exponents(p)), p
            count += 1


class TestRho:
    def test_examples(self):
        assert rho_radius(1.0, 1.0, 0.5, 1.0) == pytest.approx(math.e * 0.5, rel=1e-12)
        assert rho_radius(1.0, 1.0, 0.123, 0.0) == pytest.approx(math.e, rel=1e-12)
        assert rho_radius(0.5, 2.0, 0.1, 2.0) == pytest.approx(math.exp(4.0) * 0.01, rel=1e-12)

    def test_overflow_guard(self):
        with pytest.raises(RadiusOverflowError, match="radius overflows"):
            rho_radius(0.01, 2.0, 0.5, 1.0)

    @given(
        eps=st.floats(0.05, 2.0),
        h=st.floats(0.01, 0.9),
        factor=st.floats(1.01, 2.0),
    )
    @settings(max_examples=200, deadline=None)
    def test_monotonicity(self, eps, h, factor):
        base = rho_radius(eps, 1.0, h, 1.5)
        assert rho_radius(eps, 1.0, min(h * factor, 0.99), 1.5) > base
        assert rho_radius(eps * factor, 1.0, h, 1.5) < base


class TestSufficientConditions:
    def test_all_true_at_worked_example(self):
        rep = sufficient_conditions(make_params(delta=1.5))
        assert all(rep.sufficient_ok.values())
        assert rep.delta_interval == pytest.approx((1.0, 2.0))
        assert rep.rho == pytest.approx(math.exp(4.0) * 0.25**1.5, rel=1e-12)

    def test_delta_beyond_interval_fails_ball_conditions(self):
        rep = sufficient_conditions(make_params(delta=2.5))
        assert not rep.sufficient_ok["ball_a"]
        assert not rep.sufficient_ok["ball_b"]
        assert not rep.sufficient_ok["all"]

    def test_wdeg_degree_check(self):
        rep = sufficient_conditions(make_params(mu=4.0, deg=6, wdeg=4, delta=2.2))
        assert not rep.sufficient_ok["wdeg_degree"]

    def test_contraction_flag_matches_exponents(self):
        for delta in (0.2, 1.5, 3.0):
            p = make_params(delta=delta)
            rep = sufficient_conditions(p)
            assert rep.sufficient_ok["contraction"] == all(
                e > 0 for e in contraction_exponents(p)
            )

    def test_pure_function(self):
        p = make_params()
        a = sufficient_conditions(p)
        b = sufficient_conditions(p)
        assert a.to_dict() == b.to_dict()

    def test_overflow_reported_not_raised(self):
        rep = sufficient_conditions(make_params(epsilon=0.001, gamma=1.5))
        assert rep.rho is None
        assert rep.rho_overflow

    def test_report_interval_consistency(self):
        rep = sufficient_conditions(make_params(wdeg=2))
        assert rep.delta_interval is None


class TestBoundBudget:
    def test_spec_point(self):
        p = make_params(h=0.5)
        i1, i2, i3, a, b = bound_budget(p, rho=0.1, u_norm=1.0)
        assert i1 == pytest.approx(0.5**-0.5 * 0.1, rel=1e-12)
        assert i3 == pytest.approx(0.5**0.5, rel=1e-12)
        assert i2 == pytest.approx(0.5**8, rel=1e-12)

    def test_homogeneity_at_zero(self):
        p = make_params(h=0.5)
        i1, i2, i3, a, b = bound_budget(p, rho=0.0, u_norm=0.0)
        assert i1 == 0.0 and i2 == 0.0 and a == 0.0 and b == 0.0
        assert i3 > 0.0

    def test_b_is_first_factor_structure(self):
        # B = (I1+I2) I3 coincides with A's summands stripped of the h^-1 factors
        rng = np.random.default_rng(3)
        for _ in range(20):
            p = make_params(h=float(rng.uniform(0.05, 0.9)))
            rho = float(rng.uniform(0.0, 1.0))
            un = float(rng.uniform(0.0, 2.0))
            i1, i2, i3, a, b = bound_budget(p, rho, un)
            assert b == pytest.approx((i1 + i2) * i3, rel=1e-12)
            expected_a = (i1 + i2) / p.h * (i1 + i2 + p.h + 1.0) * i3 + (i1 + i2) / p.h * i3
            assert a == pytest.approx(expected_a, rel=1e-12)


class TestParameterSet:
    def test_validation(self):
        with pytest.raises(ValueError):
            make_params(mu=1.0)
        with pytest.raises(ValueError):
            make_params(deg=2)
        with pytest.raises(ValueError):
            make_params(epsilon=0.0)
        with pytest.raises(ValueError):
            make_params(n=-1)

    def test_out_of_theory_sets_constructible(self):
        # wdeg > deg/2 must be representable; the check reports it instead
        p = make_params(deg=6, wdeg=4, mu=4.0, delta=2.2)
        assert not sufficient_conditions(p).sufficient_ok["wdeg_degree"]
