import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stable_supremum import StableParams, parse_real
from stable_supremum.coefficients import coeff_b
from stable_supremum.density import (
    CONVERGED,
    NOT_CONVERGED,
    cdf,
    convergent_side,
    density,
    quantile,
    series_sum,
    sup_density_t,
    survival,
    total_mass,
)
from stable_supremum.errors import DomainError, HypothesisError

# 40-digit mpmath sums of the convergent double series (frozen)
REF_UPPER = {1.0: 0.35981877986707189, 2.0: 0.12740810781192216, 3.0: 0.045565507175396931226}
REF_LOWER = {2.0: 0.052595963632044436628, 5.0: 0.012841095739102114397, 30.0: 0.00066254147973359097157}


class TestReferenceValues:
    @pytest.mark.parametrize("x", sorted(REF_UPPER))
    def test_upper(self, upper, x):
        r = density(upper, x, 1e-12)
        assert r.status == CONVERGED
        assert r.value == pytest.approx(REF_UPPER[x], rel=1e-10)

    @pytest.mark.parametrize("x", sorted(REF_LOWER))
    def test_lower(self, lower, x):
        r = density(lower, x, 1e-12)
        assert r.status == CONVERGED
        assert r.value == pytest.approx(REF_LOWER[x], rel=1e-10)

    @pytest.mark.parametrize("x", sorted(REF_UPPER))
    def test_error_estimate_is_honest(self, upper, x):
        r = density(upper, x, 1e-10)
        assert abs(r.value / REF_UPPER[x] - 1) <= max(10 * r.est_error, 1e-12)


class TestDensity:
    def test_tolerance_refinement(self, upper):
        a, b = density(upper, 1.0, 1e-10), density(upper, 1.0, 1e-13)
        assert a.status == b.status == CONVERGED
        assert a.value == pytest.approx(b.value, rel=1e-9)

    def test_cross_method_at_5(self, upper):
        c = density(upper, 5.0, 1e-10, "convergent")
        a = density(upper, 5.0, 1e-10, "asymptotic")
        assert c.status == CONVERGED and c.digits > 16
        assert c.value == pytest.approx(a.value, rel=1e-8)

    def test_scaling(self, upper):
        t, x = 2.0, 1.0
        s = t ** (-1 / upper.alpha)
        assert sup_density_t(upper, t, x, 1e-13) == pytest.approx(s * density(upper, s * x, 1e-13).value, rel=1e-12)

    def test_not_converged_is_status(self, upper):
        r = density(upper, 20.0, 1e-10, "convergent")
        assert r.status == NOT_CONVERGED and r.T_used >= 400

    def test_hypothesis_violation(self):
        p = StableParams(parse_real("cf:[1;2,4,512,%d]" % 2**4610), 0.5)
        with pytest.raises(HypothesisError):
            density(p, 1.0, 1e-10, "convergent")
        assert density(p, 1.0, 1e-6).mode == "asymptotic"

    @pytest.mark.parametrize("x", [0.0, -1.0, math.nan])
    def test_bad_x(self, upper, x):
        with pytest.raises(DomainError):
            density(upper, x)

    @pytest.mark.parametrize("eps", [1e-15, 0.1])
    def test_bad_eps(self, upper, eps):
        with pytest.raises(DomainError):
            density(upper, 1.0, eps)

    def test_bad_mode(self, upper):
        with pytest.raises(DomainError):
            density(upper, 1.0, 1e-10, "fast")

    def test_convergent_side(self, upper, lower):
        assert convergent_side(upper) == "small" and convergent_side(lower) == "large"

    @pytest.mark.parametrize("fixture", ["upper", "lower"])
    def test_positivity_log_grid(self, request, fixture):
        params = request.getfixturevalue(fixture)
        for x in np.geomspace(1e-3, 1e3, 49):
            r = density(params, float(x), 1e-8)
            assert r.status == CONVERGED, x
            assert r.value >= -1e-12 * abs(r.value) * (1 + r.est_error), x

    def test_leading_order_large_x(self, upper):
        b01 = float(coeff_b(upper, 0, 1))
        x = 1e4
        assert density(upper, x).value * x ** (1 + upper.alpha) == pytest.approx(b01, rel=1e-3)

    def test_result_dict(self, upper):
        d = density(upper, 1.0).as_dict()
        assert {"value", "status", "est_error", "T_used", "terms_used", "mode"} <= set(d)

    @given(st.floats(0.05, 4.0))
    def test_converges_on_small_side(self, x):
        p = StableParams("sqrt:2", 0.5)
        r = series_sum(p, x, "small", "density", "convergent", 1e-10)
        assert r.status == CONVERGED and r.value > 0


class TestCdf:
    @pytest.mark.parametrize("fixture", ["upper", "lower"])
    def test_axioms_on_grid(self, request, fixture):
        params = request.getfixturevalue(fixture)
        vals = [cdf(params, float(x), 1e-8).value for x in np.geomspace(1e-3, 1e3, 100)]
        assert all(0.0 <= v <= 1.0 for v in vals)
        assert all(b >= a for a, b in zip(vals, vals[1:]))

    def test_far_tail(self, upper):
        assert cdf(upper, 1e6).value == pytest.approx(1.0, abs=1e-6)

    def test_derivative(self, upper):
        h = 1e-4
        fd = (cdf(upper, 1 + h, 1e-13).value - cdf(upper, 1 - h, 1e-13).value) / (2 * h)
        assert fd == pytest.approx(density(upper, 1.0, 1e-13).value, abs=1e-6)

    def test_survival_complement(self, lower):
        assert cdf(lower, 3.0).value + survival(lower, 3.0).value == pytest.approx(1.0, abs=1e-14)

    @pytest.mark.parametrize("fixture", ["upper", "lower"])
    def test_total_mass(self, request, fixture):
        m = total_mass(request.getfixturevalue(fixture), 1e-10)
        assert abs(m.value - 1) <= 1e-8


class TestQuantile:
    @pytest.mark.parametrize("x0", [0.1, 1.0, 5.0])
    def test_round_trip(self, upper, x0):
        assert quantile(upper, cdf(upper, x0, 1e-12).value, 1e-12) == pytest.approx(x0, abs=1e-6)

    def test_median_and_monotone(self, upper):
        us = [0.01, 0.25, 0.5, 0.75, 0.99]
        xs = [quantile(upper, u) for u in us]
        assert xs[2] > 0 and all(b > a for a, b in zip(xs, xs[1:]))
        for u, x in zip(us, xs):
            assert abs(cdf(upper, x).value - u) <= 1e-10

    @pytest.mark.parametrize("u", [0.0, 1e-9, 1.0, 1.5])
    def test_range(self, upper, u):
        with pytest.raises(DomainError):
            quantile(upper, u)
