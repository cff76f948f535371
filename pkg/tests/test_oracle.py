import io
import math

import numpy as np
import pytest

from stable_supremum.coefficients import coeff_a, coeff_b
from stable_supremum.errors import DomainError, PoleProximityError, StripError
from stable_supremum.oracle import (
    McConfig,
    functional_eq_residual,
    mc_supremum_cdf,
    mellin_numeric,
    mellin_strip,
    pole_spec,
    residue_estimate,
    skewness_bridge,
    stable_increments,
)


def never_positive(n, rho):
    """Sparre Andersen: P(S_1 <= 0, ..., S_n <= 0) for a walk with P(S_k > 0) = rho."""
    return math.exp(math.lgamma(n + 1 - rho) - math.lgamma(1 - rho) - math.lgamma(n + 1))


class TestMellin:
    def test_total_mass(self, upper):
        p = mellin_numeric(upper, 1.0)
        assert abs(p.value - 1) <= 1e-8 and p.est_error < 1e-8 and not p.continued

    def test_strip(self, upper, lower):
        assert mellin_strip(upper) == pytest.approx((1 - math.sqrt(2) / 2, 1 + math.sqrt(2)))
        with pytest.raises(StripError):
            mellin_numeric(upper, 2.5)
        with pytest.raises(StripError):
            mellin_numeric(lower, 0.5)

    def test_finite_near_one(self, upper):
        for s in (0.99, 1.01):
            assert np.isfinite(mellin_numeric(upper, s).value)

    @pytest.mark.parametrize("edge", ["lower", "upper"])
    def test_error_grows_toward_edge(self, upper, edge):
        lo, hi = mellin_strip(upper)
        s = lo + 0.01 if edge == "lower" else hi - 0.01
        assert mellin_numeric(upper, s).est_error > mellin_numeric(upper, 1.0).est_error

    def test_moment_growth(self, upper):
        # E[S^(s-1)] is log-convex in real s
        vals = [mellin_numeric(upper, s).value.real for s in (0.6, 1.0, 1.4)]
        assert vals[1] ** 2 <= vals[0] * vals[2]

    @pytest.mark.parametrize("s", [0.8, 1.2, 1.2 + 0.5j, 0.8 + 0.5j, 1.0 + 0.3j])
    def test_functional_equation_upper(self, upper, s):
        assert functional_eq_residual(upper, s) <= 1e-5

    @pytest.mark.parametrize("s", [0.8, 1.2, 1.2 + 0.5j, 0.8 + 0.5j, 1.0 + 0.3j])
    def test_functional_equation_lower(self, lower, s):
        assert functional_eq_residual(lower, s, allow_continuation=True) <= 1e-5

    def test_functional_equation_tight_point(self, upper):
        assert functional_eq_residual(upper, 1.2) <= 1e-6

    def test_rejects_degenerate_point(self, upper):
        with pytest.raises(PoleProximityError):
            functional_eq_residual(upper, 1.0)

    def test_requires_both_points_in_strip(self, lower):
        with pytest.raises(StripError):
            functional_eq_residual(lower, 1.2)


class TestResidues:
    def test_leading_residue(self, upper):
        a00 = float(coeff_a(upper, 0, 0))
        assert residue_estimate(upper) == pytest.approx(a00, rel=1e-2)

    def test_first_order_structure(self, upper):
        a00 = float(coeff_a(upper, 0, 0))
        s0 = pole_spec(upper, "minus", 0, 0).location
        coarse = 0.1 * mellin_numeric(upper, s0 + 0.1).value.real
        assert 0.01 < abs(coarse / a00 - 1) < 1.0

    def test_negative_control(self, upper):
        a00 = float(coeff_a(upper, 0, 0))
        assert abs(residue_estimate(upper, offset=0.05) / a00 - 1) > 1e-2

    def test_pole_specs(self, upper):
        a = upper.alpha
        mp = pole_spec(upper, "minus", 2, 1)
        assert mp.location == pytest.approx(1 - a / 2 - 2 - a) and mp.residue_ref == coeff_a(upper, 2, 1)
        pp = pole_spec(upper, "plus", 1, 2)
        assert pp.location == pytest.approx(1 + 2 * a) and pp.residue_ref == -coeff_b(upper, 0, 2)
        with pytest.raises(DomainError):
            pole_spec(upper, "plus", 0, 1)
        with pytest.raises(DomainError):
            residue_estimate(upper, pole_spec(upper, "minus", 1, 0))


class TestMonteCarlo:
    def test_bridge_symmetric(self, upper):
        beta, scale = skewness_bridge(upper)
        assert beta == 0.0 and scale == pytest.approx(1.0)

    @pytest.mark.parametrize("fixture", ["upper", "lower"])
    def test_bridge_positivity(self, request, fixture):
        params = request.getfixturevalue(fixture)
        beta, _ = skewness_bridge(params)
        g = np.random.Generator(np.random.Philox(key=11))
        n = 200_000
        x = stable_increments(params.alpha, beta, g.uniform(-np.pi / 2, np.pi / 2, n), g.standard_exponential(n))
        p = np.mean(x > 0)
        assert abs(p - params.rho) <= 4 * math.sqrt(params.rho * (1 - params.rho) / n)

    @pytest.mark.parametrize("fixture", ["upper", "lower"])
    def test_mass_at_zero(self, request, fixture):
        params = request.getfixturevalue(fixture)
        cfg = McConfig(20_000, 200, 5, (1e-9,))
        r = mc_supremum_cdf(params, cfg, series=False)
        expect = never_positive(200, params.rho)
        assert abs(r.F_emp[0] - expect) <= 4 * math.sqrt(expect * (1 - expect) / 20_000)
        assert np.all(r.maxima >= 0)

    def test_determinism_and_workers(self, upper):
        cfg = McConfig(2000, 100, 123, (0.5, 1.0, 2.0))
        a = mc_supremum_cdf(upper, cfg, series=False)
        b = mc_supremum_cdf(upper, cfg, series=False)
        c = mc_supremum_cdf(upper, McConfig(2000, 100, 123, (0.5, 1.0, 2.0), workers=2), series=False)
        d = mc_supremum_cdf(upper, McConfig(2000, 100, 124, (0.5, 1.0, 2.0)), series=False)
        assert np.array_equal(a.maxima, b.maxima) and np.array_equal(a.maxima, c.maxima)
        assert not np.array_equal(a.maxima, d.maxima)

    def test_small_run_dominance(self, upper):
        r = mc_supremum_cdf(upper, McConfig(20_000, 500, 9, tuple(np.linspace(0.25, 4, 16))))
        assert r.dominance_ok(3) and r.sup_distance <= 0.03

    def test_csv(self, upper):
        r = mc_supremum_cdf(upper, McConfig(1000, 100, 1, (1.0,)))
        buf = io.StringIO()
        r.to_csv(buf)
        assert buf.getvalue().splitlines()[0] == "x,F_emp,stderr,F_series"

    @pytest.mark.parametrize("kw", [dict(paths=10), dict(steps=10), dict(seed=-1), dict(grid=())])
    def test_config_validation(self, kw):
        base = dict(paths=1000, steps=100, seed=1, grid=(1.0,))
        base.update(kw)
        with pytest.raises(DomainError):
            McConfig(**base)
