import math

import numpy as np
import pytest
from scipy import integrate

from boltzkit.grid import DistributionField, VelocityGrid, maxwellian
from boltzkit.weights import (
    ExpWeightSpec,
    WeightSeriesError,
    energy_norm_exp,
    energy_norm_xk,
    exp_weight,
    exp_weight_growth_bounds,
    exp_weight_table,
    log_exp_weight,
)
from boltzkit.grid import weighted_l2_norm


class TestSpecValidation:
    @pytest.mark.parametrize(
        "kwargs",
        [{"a": 0.0}, {"beta": 0.0}, {"beta": 2.0}, {"M": -1}, {"s": 1.0}, {"series_tol": 0.0}],
    )
    def test_invalid_rejected(self, kwargs):
        with pytest.raises(ValueError):
            ExpWeightSpec(**kwargs)


class TestExpWeight:
    def test_brute_force_series_oracle_at_origin(self):
        # a=0.5, beta=1, s=0.5, M=0 at v=0: terms (0.5)^{2k}/Gamma(4k+1)^{1/2};
        # first three are 1, 0.25/sqrt(24), 0.0625/sqrt(40320).  Frozen from a
        # 200-term 40-digit summation: 1.0513430085362218889.
        spec = ExpWeightSpec(a=0.5, beta=1.0, s=0.5, M=0)
        val = exp_weight(0.0, spec)
        assert val == pytest.approx(1.0513430085362218889, rel=1e-10)
        t1 = 0.25 / math.sqrt(24.0)
        t2 = 0.0625 / math.sqrt(40320.0)
        tail = val - 1.0 - t1 - t2
        assert 0.0 < tail < 1e-6

    def test_frozen_value_away_from_origin(self):
        # |v| = 5, same parameters; frozen from the 40-digit summation.
        spec = ExpWeightSpec(a=0.5, beta=1.0, s=0.5, M=0)
        assert exp_weight(25.0, spec) == pytest.approx(2.5501626821278183217, rel=1e-10)

    def test_dropping_first_term_shifts_by_exactly_one(self):
        # At v = 0 the k=0 term is a^0 <0>^0 / Gamma(1)^s = 1.
        m0 = ExpWeightSpec(a=0.5, beta=1.0, s=0.5, M=0)
        m1 = ExpWeightSpec(a=0.5, beta=1.0, s=0.5, M=1)
        assert exp_weight(0.0, m0) - exp_weight(0.0, m1) == pytest.approx(1.0, rel=1e-12)

    def test_monotone_in_speed(self):
        spec = ExpWeightSpec(a=0.4, beta=1.2, s=0.5)
        vals = [exp_weight(r * r, spec) for r in np.linspace(0, 10, 50)]
        assert all(b >= a for a, b in zip(vals, vals[1:]))

    def test_monotone_in_a(self):
        lo = ExpWeightSpec(a=0.3, beta=1.0, s=0.5)
        hi = ExpWeightSpec(a=0.6, beta=1.0, s=0.5)
        for r2 in (0.0, 4.0, 25.0, 100.0):
            assert exp_weight(r2, hi) >= exp_weight(r2, lo)

    def test_truncation_budget_stability(self):
        spec = ExpWeightSpec(a=0.5, beta=1.0, s=0.5, series_tol=1e-12)
        for r2 in (0.0, 10.0, 64.0, 120.0):
            if spec.a * (1 + r2) ** (spec.beta / 2) > 64.0:
                continue
            v_adaptive = log_exp_weight(r2, spec)
            v_long = log_exp_weight(r2, ExpWeightSpec(a=0.5, beta=1.0, s=0.5, series_tol=1e-30))
            assert abs(v_adaptive - v_long) <= 10.0 * spec.series_tol

    def test_m_truncation_monotone(self):
        for M in range(0, 4):
            lo = ExpWeightSpec(a=0.5, beta=1.0, s=0.5, M=M + 1)
            hi = ExpWeightSpec(a=0.5, beta=1.0, s=0.5, M=M)
            for r2 in (0.0, 9.0, 49.0):
                assert exp_weight(r2, hi) >= exp_weight(r2, lo)

    def test_term_cap_signalled(self):
        spec = ExpWeightSpec(a=5.0, beta=1.0, s=0.5)
        with pytest.raises(WeightSeriesError):
            log_exp_weight(1e4, spec, max_terms=10)


class TestGrowthBounds:
    def test_stretched_exponential_window(self):
        # ln(weight)/<v>^beta pinned within a factor ~1.5 over |v| in [5, 40].
        lo, hi = exp_weight_growth_bounds(ExpWeightSpec(a=0.5, beta=1.0, s=0.5), 40.0, v_min=5.0)
        assert lo > 0.0 and hi / lo <= 3.0

    def test_smaller_a_decays_relative_to_larger(self):
        # log ratio of the b < a weights against <v>^beta has negative slope
        # bounded away from zero.
        spec_a = ExpWeightSpec(a=0.6, beta=1.0, s=0.5)
        spec_b = ExpWeightSpec(a=0.3, beta=1.0, s=0.5)
        radii = np.linspace(5.0, 40.0, 100)
        x = (1 + radii**2) ** 0.5
        log_ratio = np.array(
            [log_exp_weight(r * r, spec_b) - log_exp_weight(r * r, spec_a) for r in radii]
        )
        slope = np.polyfit(x, log_ratio, 1)[0]
        assert slope < -1e-3

    def test_requires_meaningful_sweep(self):
        with pytest.raises(ValueError):
            exp_weight_growth_bounds(ExpWeightSpec(), 5.0)


class TestEnergyNorms:
    @pytest.fixture(scope="class")
    def g(self):
        return VelocityGrid(16, 8.0)

    @pytest.fixture(scope="class")
    def mu(self, g):
        return maxwellian(g)

    def test_xk_matches_weighted_l2(self, mu):
        for k in (0.0, 2.0, 8.0):
            assert energy_norm_xk(mu, k) == pytest.approx(weighted_l2_norm(mu, k), rel=1e-14)

    def test_xk_zero_field(self, g):
        z = DistributionField(g, np.zeros((16, 16, 16)))
        assert energy_norm_xk(z, 4.0) == 0.0

    def test_xk_increasing_in_k(self, mu):
        vals = [energy_norm_xk(mu, k) for k in (0.0, 4.0, 12.0, 24.0)]
        assert all(b > a for a, b in zip(vals, vals[1:]))

    def test_exp_norm_finite_for_maxwellian(self, mu):
        spec = ExpWeightSpec(a=0.5, beta=1.0, s=0.5)
        val = energy_norm_exp(mu, spec)
        assert math.isfinite(val) and val > 0

    def test_exp_norm_scales_linearly(self, mu):
        spec = ExpWeightSpec(a=0.5, beta=1.0, s=0.5)
        doubled = mu.with_values(-2.0 * mu.values)
        assert energy_norm_exp(doubled, spec) == pytest.approx(2.0 * energy_norm_exp(mu, spec), rel=1e-12)

    def test_exp_norm_against_radial_quadrature(self, g):
        # radial field exp(-r^2/3): 1-D oracle int 4 pi s^2 w(s) f(s)^2 ds
        spec = ExpWeightSpec(a=0.4, beta=1.0, s=0.5)
        f = DistributionField(g, np.exp(-g.speed_sq() / 3.0))
        grid_val = energy_norm_exp(f, spec)
        oracle, _ = integrate.quad(
            lambda s: 4 * math.pi * s**2 * exp_weight(s * s, spec) * math.exp(-2 * s * s / 3.0),
            0.0,
            14.0,
            limit=200,
        )
        assert grid_val == pytest.approx(math.sqrt(oracle), rel=1e-5)

    def test_weighted_equilibrium_moment_converges_in_radius(self):
        # Grow the truncation radius at fixed spacing; the error against the
        # 1-D radial reference must shrink (tail domination for beta < 2).
        spec = ExpWeightSpec(a=0.5, beta=1.5, s=0.5)
        norm = (2 * math.pi) ** -1.5
        ref, _ = integrate.quad(
            lambda s: 4 * math.pi * s * s * exp_weight(s * s, spec) * (norm * math.exp(-0.5 * s * s)) ** 2,
            0.0,
            25.0,
            limit=400,
        )
        ref = math.sqrt(ref)
        errs = [
            abs(energy_norm_exp(maxwellian(VelocityGrid(n, r)), spec) - ref)
            for r, n in ((4.0, 16), (8.0, 32), (16.0, 64))
        ]
        assert errs[1] <= errs[0] and errs[2] <= errs[0]
        assert errs[2] <= 1e-12

    def test_overflow_guard_names_radius(self, g):
        spec = ExpWeightSpec(a=50.0, beta=1.9, s=0.9)
        with pytest.raises(WeightSeriesError, match=r"\|v\| ="):
            exp_weight_table(g, spec)
