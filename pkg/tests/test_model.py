"""Parameter types, stationarity diagnostics, and simulation."""
import math

import numpy as np
import pytest

from garchsup import (ConfigError, GarchParams, InnovationDist,
                      ParameterSpace, ShockSpec, SimulationOverflowError,
                      companion_spectral_radius, lyapunov_exponent, simulate,
                      stationarity_check)
from garchsup.model import _fixed_point_sigma2


# ---------------------------------------------------------------------------
# GarchParams / ParameterSpace invariants


class TestGarchParams:
    def test_dimension_accessors(self):
        p = GarchParams(0.3, (0.4, 0.1), (0.5,))
        assert (p.r, p.s, p.d) == (2, 1, 4)
        assert p.persistence == pytest.approx(1.0)

    def test_array_roundtrip(self):
        p = GarchParams(0.3, (0.4,), (0.5,))
        q = GarchParams.from_array(p.as_array(), 1, 1)
        assert q == p

    @pytest.mark.parametrize("bad", [
        dict(alpha0=0.0, alphas=(0.4,), betas=(0.5,)),     # alpha0 floor
        dict(alpha0=-0.1, alphas=(0.4,), betas=(0.5,)),
        dict(alpha0=0.3, alphas=(-0.1,), betas=(0.5,)),    # negative coeff
        dict(alpha0=0.3, alphas=(0.4,), betas=(-0.2,)),
        dict(alpha0=0.3, alphas=(0.4,), betas=(0.6, 0.5)), # sum(betas) >= 1
    ])
    def test_invalid_parameters_rejected(self, bad):
        with pytest.raises(ConfigError):
            GarchParams(bad["alpha0"], bad["alphas"], bad["betas"])

    def test_space_membership(self, space11):
        assert space11.contains(GarchParams(0.3, (0.4,), (0.5,)))
        assert not space11.contains(GarchParams(0.3, (0.4, 0.2), (0.5,)))

    def test_space_validation(self):
        with pytest.raises(ConfigError):
            ParameterSpace(r=1, s=1, alpha_min=0.0)
        with pytest.raises(ConfigError):
            ParameterSpace(r=1, s=1, beta_sum_max=1.0)
        with pytest.raises(ConfigError):
            ParameterSpace(r=0, s=1)


class TestInnovationDist:
    def test_moments_normalized(self):
        """Every kind is mean 0 / variance 1 (law-level check by sampling)."""
        rng_seed = 7
        for dist in (InnovationDist("normal"), InnovationDist("student_t"),
                     InnovationDist("student_t", 5.0),
                     InnovationDist("rademacher")):
            z = dist.sample(np.random.default_rng(rng_seed), 200_000)
            assert abs(z.mean()) < 0.02
            assert z.var() == pytest.approx(1.0, abs=0.03)

    def test_student_t_df_guard(self):
        with pytest.raises(ConfigError):
            InnovationDist("student_t", 4.0)
        with pytest.raises(ConfigError):
            InnovationDist("normal", 7.0)
        with pytest.raises(ConfigError):
            InnovationDist("laplace")

    def test_mu4(self):
        assert InnovationDist("normal").mu4 == 3.0
        # Student-t mu4 = 3 (df-2)/(df-4), variance-normalized.
        assert InnovationDist("student_t", 8.0).mu4 == pytest.approx(4.5)
        assert InnovationDist("rademacher").mu4 == 1.0


class TestShockSpec:
    def test_defaults_to_null(self):
        spec = ShockSpec(GarchParams(0.3, (0.4,), (0.5,)))
        assert spec.magnitude == 0.0
        assert spec.shocked() == spec.base

    def test_shocked_point(self):
        spec = ShockSpec(GarchParams(0.3, (0.4,), (0.6,)), (0, 1, 1), 0.2,
                         0.5, 0.7)
        assert np.allclose(spec.shocked().as_array(),
                           [0.3, 0.6, 0.8], rtol=0, atol=1e-15)

    def test_invalid_interval(self):
        base = GarchParams(0.3, (0.4,), (0.5,))
        with pytest.raises(ConfigError):
            ShockSpec(base, (0, 1, 0), 0.1, 0.7, 0.5)  # tau1 >= tau2
        with pytest.raises(ConfigError):
            ShockSpec(base, (0, 1, 0), 0.1, 0.5, 1.2)  # outside [0,1]
        with pytest.raises(ConfigError):
            ShockSpec(base, (0, 1, 0), -0.1, 0.5, 0.7)

    def test_shocked_point_must_be_valid(self):
        base = GarchParams(0.3, (0.4,), (0.5,))
        # Shock pushing sum(betas) past 1 is rejected at construction.
        with pytest.raises(ConfigError):
            ShockSpec(base, (0, 0, 1), 0.6, 0.5, 0.7)
        # ... and one pushing alpha1 negative as well.
        with pytest.raises(ConfigError):
            ShockSpec(base, (0, -1, 0), 0.5, 0.5, 0.7)

    def test_validate_in_space(self, space11):
        spec = ShockSpec(GarchParams(0.3, (0.4,), (0.6,)), (0, 1, 1), 0.2,
                         0.5, 0.7)
        spec.validate_in(space11)  # persistence 1.4 is fine: only betas capped
        tight = ParameterSpace(r=1, s=1, beta_sum_max=0.7)
        with pytest.raises(ConfigError):
            spec.validate_in(tight)


# ---------------------------------------------------------------------------
# Lyapunov exponent


class TestLyapunov:
    def test_alpha1_zero_closed_form(self, normal):
        """With alpha1 = 0 the innovation drops out: gamma = log(beta1)."""
        got = lyapunov_exponent(GarchParams(0.3, (0.0,), (0.5,)), normal,
                                m=50_000, seed=1)
        assert got == pytest.approx(math.log(0.5), abs=1e-12)

    def test_jensen_negative_at_unit_mean(self, normal):
        """E log(a z^2 + b) < log E(a z^2 + b) = 0 when a + b = 1."""
        got = lyapunov_exponent(GarchParams(0.3, (0.5,), (0.5,)), normal,
                                m=100_000, seed=2)
        assert got < -0.05

    def test_monte_carlo_oracle_explosive_case(self, normal):
        """gamma for (0.3, 1.0, 0.25) vs an independent 10^6-draw average of
        log(z^2 + 0.25)."""
        rng = np.random.default_rng(991)
        draws = np.log(rng.standard_normal(1_000_000) ** 2 + 0.25)
        oracle, oracle_se = draws.mean(), draws.std(ddof=1) / 1000.0
        got = lyapunov_exponent(GarchParams(0.3, (1.0,), (0.25,)), normal,
                                m=1_000_000, seed=3)
        assert abs(got - oracle) < 3.0 * oracle_se * math.sqrt(2.0)

    def test_seed_invariance_within_tolerance(self, normal):
        p = GarchParams(0.3, (0.4,), (0.5,))
        checks = [stationarity_check(p, normal, m=100_000, seed=s)
                  for s in (10, 11)]
        spread = abs(checks[0].gamma - checks[1].gamma)
        band = 3.0 * (checks[0].se + checks[1].se)
        assert spread < band

    def test_general_order_matches_scalar_form(self, normal):
        """The companion-product estimate for r=s=1 parameters embedded in a
        GARCH(2,1) (extra coefficients zero) agrees with the scalar form."""
        scalar = lyapunov_exponent(GarchParams(0.3, (0.4,), (0.5,)), normal,
                                   m=60_000, seed=4)
        embedded = lyapunov_exponent(GarchParams(0.3, (0.4, 0.0), (0.5,)),
                                     normal, m=60_000, seed=4)
        assert embedded == pytest.approx(scalar, abs=0.02)

    def test_m_guard(self, normal):
        with pytest.raises(ConfigError):
            lyapunov_exponent(GarchParams(0.3, (0.4,), (0.5,)), normal,
                              m=5000)

    def test_stationarity_verdict(self, normal):
        assert stationarity_check(GarchParams(0.3, (0.4,), (0.5,)), normal,
                                  seed=5).stationary is True
        assert stationarity_check(GarchParams(0.3, (3.0,), (0.9,)), normal,
                                  seed=5).stationary is False


class TestCompanionRadius:
    def test_s1_is_beta(self):
        assert companion_spectral_radius(GarchParams(0.3, (0.4,), (0.6,))) \
            == pytest.approx(0.6)

    def test_s2_pure_lag2(self):
        # [[0, 0.25], [1, 0]] has eigenvalues +/- 0.5.
        got = companion_spectral_radius(GarchParams(0.3, (0.4,), (0.0, 0.25)))
        assert got == pytest.approx(0.5, abs=1e-12)

    def test_s2_quadratic_root_oracle(self):
        # Largest root of lambda^2 - 0.5 lambda - 0.3 by the formula.
        oracle = (0.5 + math.sqrt(0.25 + 1.2)) / 2.0
        got = companion_spectral_radius(GarchParams(0.3, (0.1,), (0.5, 0.3)))
        assert got == pytest.approx(oracle, abs=1e-12)

    def test_s0_domain_error(self):
        with pytest.raises(ConfigError):
            companion_spectral_radius(GarchParams(0.3, (0.4,), ()))


# ---------------------------------------------------------------------------
# Simulation


class TestSimulate:
    def test_zero_magnitude_bit_identical_to_plain(self, normal):
        base = GarchParams(0.3, (0.4,), (0.5,))
        shocked = ShockSpec(base, (0, 1, 1), 0.0, 0.5, 0.7)
        plain = ShockSpec(base)
        a = simulate(shocked, 500, normal, seed=42)
        b = simulate(plain, 500, normal, seed=42)
        assert np.array_equal(a.x, b.x)
        assert np.array_equal(a.sigma2, b.sigma2)

    def test_deterministic_fixed_point_with_unit_innovations(self):
        """zeta^2 = 1 (rademacher): sigma2 converges to alpha0/(1-a-b) = 3."""
        sample = simulate(ShockSpec(GarchParams(0.3, (0.4,), (0.5,))), 50,
                          InnovationDist("rademacher"), seed=0, burn_in=200)
        assert np.allclose(sample.sigma2, 3.0, atol=1e-10)
        assert np.allclose(sample.x ** 2, 3.0, atol=1e-10)

    def test_long_run_variance_oracle(self, normal):
        """Sample mean of X^2 at n = 10^5 within 3 SE of
        alpha0/(1 - alpha1 - beta1) = 3.0.  X^2 is strongly autocorrelated
        (persistence 0.9), so the SE comes from batch means: 100 blocks of
        1000 observations are effectively independent (correlation between
        block means decays like 0.9^gap)."""
        sample = simulate(ShockSpec(GarchParams(0.3, (0.4,), (0.5,))),
                          100_000, normal, seed=7)
        block_means = sample.x.reshape(100, 1000) ** 2
        block_means = block_means.mean(axis=1)
        se = block_means.std(ddof=1) / math.sqrt(len(block_means))
        assert abs(block_means.mean() - 3.0) < 3.0 * se

    def test_pure_function_of_inputs(self, normal):
        spec = ShockSpec(GarchParams(0.2, (0.3,), (0.6,)), (0, 1, 0), 0.1,
                         0.4, 0.6)
        a = simulate(spec, 300, normal, seed=9, burn_in=500)
        b = simulate(spec, 300, normal, seed=9, burn_in=500)
        assert np.array_equal(a.x, b.x)

    def test_shock_window_alignment(self):
        """The shocked segment is exactly floor(n tau1)+1 .. floor(n tau2),
        checked via the deterministic zeta^2 = 1 path."""
        base = GarchParams(0.3, (0.4,), (0.5,))
        n = 100
        spec = ShockSpec(base, (0, 1, 0), 0.2, 0.5, 0.7)
        sample = simulate(spec, n, InnovationDist("rademacher"), seed=0,
                          burn_in=200)
        # Base fixed point is 3.0; the first shocked observation (1-based
        # index 51, 0-based 50) applies the shocked recursion to history at
        # the fixed point: 0.3 + 0.6 * 3.0 + 0.5 * 3.0 = 3.6.
        assert sample.sigma2[49] == pytest.approx(3.0, abs=1e-9)
        assert sample.sigma2[50] == pytest.approx(3.6, abs=1e-9)
        # After the window the base recursion resumes and decays back
        # toward 3.0: sigma2[70] = 0.3 + 0.9 * sigma2[69].
        assert sample.sigma2[70] == pytest.approx(
            0.3 + 0.9 * sample.sigma2[69], abs=1e-9)

    def test_retained_innovations_satisfy_model_equation(self, normal):
        sample = simulate(ShockSpec(GarchParams(0.3, (0.4,), (0.5,))), 200,
                          normal, seed=3, keep_innovations=True)
        assert np.allclose(sample.x ** 2,
                           sample.innovations ** 2 * sample.sigma2,
                           rtol=1e-12)

    def test_overflow_reports_index(self, normal):
        """A far-outside-stationarity shock overflows and names the index."""
        base = GarchParams(0.3, (0.4,), (0.5,))
        spec = ShockSpec(base, (0, 1, 0), 400.0, 0.1, 1.0)
        with pytest.raises(SimulationOverflowError) as err:
            simulate(spec, 2000, normal, seed=1)
        n = 2000
        assert 0.1 * n <= err.value.index <= n

    def test_n_guard(self, normal):
        with pytest.raises(ConfigError):
            simulate(ShockSpec(GarchParams(0.3, (0.4,), (0.5,))), 2, normal)
        with pytest.raises(ConfigError):
            simulate(ShockSpec(GarchParams(0.3, (0.4,), (0.5,))), 100,
                     normal, burn_in=-1)

    def test_fixed_point_helper(self):
        assert _fixed_point_sigma2(GarchParams(0.3, (0.4,), (0.5,))) \
            == pytest.approx(3.0)
        # Integrated case falls back to alpha0 / (1 - sum betas).
        assert _fixed_point_sigma2(GarchParams(0.3, (0.5,), (0.5,))) \
            == pytest.approx(0.6)
