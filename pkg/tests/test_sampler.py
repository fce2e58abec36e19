"""Random-walk sampling, normalizing constants, and mixture draws.

Exponentially tilting a standard normal by theta gives N(theta, 1) with
log normalizer theta^2/2, so chain moments, normalizing integrals, and
likelihood ratios all have closed forms to check against. Components built
that way ("exact" below) make every downstream quantity analytic.
"""
import numpy as np
import pytest
from scipy import stats

from drmis.errors import ConfigError, EstimationError, SamplingError
from drmis.models import builtin_model
from drmis.surrogate import TrainingSet, fit, linear
from drmis.tilt import TiltComponent, tilted_log_density_unnorm
from drmis.allocation import MixtureIS, largest_remainder_counts
from drmis.sampler import (ADAPTIVE_QUADRATURE, ANCESTRAL, KDE_RATIO,
                           MONTE_CARLO, ORIGIN_POOLED, POOLED,
                           TRAPEZOID_ON_SAMPLES, MhConfig, WeightedSample,
                           WeightedSamples, draw_mixture, estimate_norm_const,
                           mh_sample)


def line_surrogate():
    """Fitted surrogate that reproduces h(x) = x on the real line."""
    x = np.linspace(-4.0, 4.0, 9)[:, None]
    return fit(linear(), TrainingSet(x, x.ravel()))


def exact_component(theta, level=0.5, norm_const=1.0, psi_shift=0.0,
                    surrogate=None):
    """Tilt of N(0,1) with the true log normalizer theta^2/2 baked in."""
    return TiltComponent(level=level, theta=theta,
                         psi_hat=0.5 * theta * theta + psi_shift,
                         norm_const=norm_const,
                         surrogate=line_surrogate() if surrogate is None
                         else surrogate)


def chain_mean_se(draws, chains):
    """Mean and an honest SE from per-chain means (round-major layout)."""
    per_chain = draws.ravel().reshape(-1, chains)
    means = per_chain.mean(axis=0)
    return float(means.mean()), float(means.std(ddof=1) / np.sqrt(chains))


class TestMhConfigValidation:
    @pytest.mark.parametrize("kwargs", [
        {"burn_in": -1},
        {"thinning": 0},
        {"chains": 0},
        {"target_accept": 0.0},
        {"target_accept": 1.0},
        {"step_scale": 0.0},
        {"step_scale": np.array([1.0, -2.0])},
        {"max_adapt_steps": -1},
    ])
    def test_rejects_bad_knobs(self, kwargs):
        with pytest.raises(ConfigError):
            MhConfig(**kwargs)


class TestMhSample:
    def test_standard_normal_moments(self):
        rng = np.random.default_rng(7)
        cfg = MhConfig(chains=20, burn_in=1000, thinning=5)
        res = mh_sample(lambda p: -0.5 * np.sum(p * p, axis=1),
                        np.zeros(1), 10_000, cfg, rng)
        assert res.draws.shape == (10_000, 1)
        mean, se = chain_mean_se(res.draws, 20)
        assert abs(mean) < 4 * se
        assert abs(np.var(res.draws) - 1.0) < 0.1
        # adapted scale should land in the efficient range for a 1-d target
        assert 0.5 < float(res.step_scale[0]) < 6.0
        assert 0.1 < res.acceptance_rate < 0.7

    def test_tilted_target_is_shifted_normal(self):
        model = builtin_model(1)
        comp = exact_component(2.0)
        rng = np.random.default_rng(8)
        cfg = MhConfig(chains=20, burn_in=1000, thinning=5)
        res = mh_sample(lambda p: tilted_log_density_unnorm(comp, model, p),
                        np.full(1, 2.0), 10_000, cfg, rng)
        mean, se = chain_mean_se(res.draws, 20)
        assert abs(mean - 2.0) < max(4 * se, 0.02)
        assert abs(np.var(res.draws) - 1.0) < 0.1

    def test_bounded_support_is_respected(self):
        model = builtin_model(5)
        rng = np.random.default_rng(9)
        cfg = MhConfig(chains=25, burn_in=500, thinning=4, step_scale=0.7)
        res = mh_sample(lambda p: model.base_log_density(p), np.full(1, 0.5),
                        10_000, cfg, rng, support_low=model.support_low,
                        support_high=model.support_high)
        d = res.draws.ravel()
        assert d.min() >= 0.0 and d.max() <= 1.0
        mean, se = chain_mean_se(res.draws, 25)
        assert abs(mean - 0.5) < max(4 * se, 0.01)
        assert abs(np.var(d) - 1.0 / 12.0) < 0.15 / 12.0

    def test_vector_step_scale_per_coordinate(self):
        rng = np.random.default_rng(10)
        cfg = MhConfig(chains=20, burn_in=800, thinning=5,
                       step_scale=np.array([1.0, 0.5]))

        def target(p):
            return -0.5 * (p[:, 0] ** 2 + p[:, 1] ** 2 / 0.25)

        res = mh_sample(target, np.zeros(2), 10_000, cfg, rng)
        assert res.step_scale.shape == (2,)
        v = np.var(res.draws, axis=0)
        assert abs(v[0] - 1.0) < 0.15
        assert abs(v[1] - 0.25) < 0.15 * 0.25

    def test_reversibility_of_stationary_flows(self):
        # for a reversible chain started in stationarity the pair
        # (X_t, X_{t+1}) is exchangeable, so flows between value bins must
        # balance up to counting noise
        rng = np.random.default_rng(11)
        cfg = MhConfig(chains=1, burn_in=500, thinning=1, step_scale=1.0,
                       max_adapt_steps=0)
        res = mh_sample(lambda p: -0.5 * np.sum(p * p, axis=1),
                        np.zeros(1), 60_000, cfg, rng)
        d = res.draws.ravel()
        edges = stats.norm.ppf([0.25, 0.5, 0.75])
        bins = np.digitize(d, edges)
        flows = np.zeros((4, 4))
        np.add.at(flows, (bins[:-1], bins[1:]), 1.0)
        for i in range(4):
            for j in range(i + 1, 4):
                gap = abs(flows[i, j] - flows[j, i])
                assert gap <= 5.0 * np.sqrt(flows[i, j] + flows[j, i]) + 5.0

    def test_single_init_point_broadcasts_to_chains(self):
        rng = np.random.default_rng(12)
        cfg = MhConfig(chains=32, burn_in=10, thinning=2)
        res = mh_sample(lambda p: -0.5 * np.sum(p * p, axis=1),
                        np.zeros(1), 64, cfg, rng)
        assert res.draws.shape == (64, 1)
        assert res.n_steps == 10 + 2 * 2

    def test_init_block_must_match_chain_count(self):
        cfg = MhConfig(chains=32)
        with pytest.raises(ConfigError, match="one point or one per chain"):
            mh_sample(lambda p: -0.5 * np.sum(p * p, axis=1),
                      np.zeros((5, 1)), 10, cfg, np.random.default_rng(0))

    def test_nonfinite_start_raises(self):
        cfg = MhConfig(chains=4, burn_in=10)
        with pytest.raises(SamplingError, match="not finite"):
            mh_sample(lambda p: np.full(p.shape[0], -np.inf),
                      np.zeros(1), 10, cfg, np.random.default_rng(0))

    def test_needs_at_least_one_draw(self):
        with pytest.raises(ConfigError, match="at least one draw"):
            mh_sample(lambda p: -0.5 * np.sum(p * p, axis=1),
                      np.zeros(1), 0, MhConfig(), np.random.default_rng(0))

    def test_low_acceptance_warns_and_is_recorded(self):
        # an absurd proposal scale with adaptation disabled pins the
        # acceptance rate near zero
        rng = np.random.default_rng(13)
        cfg = MhConfig(chains=4, burn_in=100, thinning=1, step_scale=5000.0,
                       max_adapt_steps=0)
        with pytest.warns(RuntimeWarning, match="acceptance rate"):
            res = mh_sample(lambda p: -0.5 * np.sum(p * p, axis=1),
                            np.zeros(1), 400, cfg, rng)
        assert res.warnings and "below" in res.warnings[0]
        assert res.acceptance_rate < 0.01

    def test_same_seed_same_draws(self):
        cfg = MhConfig(chains=8, burn_in=200, thinning=3)
        runs = [mh_sample(lambda p: -0.5 * np.sum(p * p, axis=1),
                          np.zeros(1), 1000, cfg, np.random.default_rng(99))
                for _ in range(2)]
        assert np.array_equal(runs[0].draws, runs[1].draws)


class TestNormConst:
    def test_quadrature_exact_components_give_unit_constant(self):
        model = builtin_model(1)
        for theta in (0.0, 1.0):
            c = estimate_norm_const(exact_component(theta), model,
                                    ADAPTIVE_QUADRATURE)
            assert abs(c - 1.0) < 1e-6

    def test_monte_carlo_null_tilt_is_exact(self):
        # theta = 0 makes the integrand ratio identically one, so the MC
        # average is 1 to the last bit regardless of the draw
        model = builtin_model(1)
        c = estimate_norm_const(exact_component(0.0), model, MONTE_CARLO,
                                n_draws=1000, rng=np.random.default_rng(1))
        assert c == pytest.approx(1.0, abs=1e-12)

    def test_monte_carlo_exact_tilt_within_noise(self):
        model = builtin_model(1)
        # Var[exp(x - 1/2)] = e(e-1), so the SE at 1e6 draws is ~2.2e-3
        c = estimate_norm_const(exact_component(1.0), model, MONTE_CARLO,
                                n_draws=1_000_000,
                                rng=np.random.default_rng(3))
        assert abs(c - 1.0) < 0.01

    def test_trapezoid_on_samples_hits_method_floor(self):
        # composite trapezoid on an irregular random grid carries a
        # second-order error per interval that does not average away; at
        # 4000 N(0,1) points the observed error is ~1e-4, so the tolerance
        # reflects the method, not the implementation
        model = builtin_model(1)
        xs = np.random.default_rng(4).standard_normal(4000)
        c = estimate_norm_const(exact_component(0.0), model,
                                TRAPEZOID_ON_SAMPLES, samples=xs)
        assert abs(c - 1.0) < 1e-3

    @pytest.mark.parametrize("robust", [False, True])
    def test_kde_ratio_hits_method_floor(self, robust):
        # the KDE denominator carries smoothing bias, so percent-level
        # agreement is the honest expectation here
        model = builtin_model(1)
        xs = np.random.default_rng(5).standard_normal(4000)[:, None]
        c = estimate_norm_const(exact_component(0.0), model, KDE_RATIO,
                                samples=xs, eval_points=200,
                                rng=np.random.default_rng(6), robust=robust)
        assert abs(c - 1.0) < 0.05

    def test_log_normalizer_shift_scales_the_constant(self):
        # subtracting delta from the stored log normalizer multiplies the
        # integrand, and hence the constant, by exp(delta)
        model = builtin_model(1)
        base = estimate_norm_const(exact_component(1.0), model,
                                   ADAPTIVE_QUADRATURE)
        shifted = estimate_norm_const(exact_component(1.0, psi_shift=-0.3),
                                      model, ADAPTIVE_QUADRATURE)
        assert shifted / base == pytest.approx(np.exp(0.3), rel=1e-9)

    def test_quadrature_agrees_with_monte_carlo_on_fitted_surrogate(self):
        # a noisy fitted surrogate has no closed-form constant; the two
        # independent routes must still agree
        model = builtin_model(1)
        rng = np.random.default_rng(11)
        x = rng.standard_normal(400)[:, None]
        y = x.ravel() + 0.05 * rng.standard_normal(400)
        sur = fit(linear(), TrainingSet(x, y))
        comp = TiltComponent(level=0.9, theta=1.5, psi_hat=0.0, surrogate=sur)
        c_quad = estimate_norm_const(comp, model, ADAPTIVE_QUADRATURE)
        c_mc = estimate_norm_const(comp, model, MONTE_CARLO,
                                   n_draws=1_000_000,
                                   rng=np.random.default_rng(12))
        assert c_mc == pytest.approx(c_quad, rel=0.015)

    def test_mixture_constant_combines_component_constants(self):
        # integral of sum p_i (unnormalized component i) is sum p_i c_i;
        # with c = (1, 2) and p = (0.3, 0.7) that is 1.7
        model = builtin_model(1)
        mix = MixtureIS((exact_component(0.0),
                         exact_component(1.0, psi_shift=-np.log(2.0))),
                        np.array([0.3, 0.7]))
        c = estimate_norm_const(mix, model, ADAPTIVE_QUADRATURE)
        assert abs(c - 1.7) < 1e-6

    def test_2d_quadrature_null_tilt(self):
        model = builtin_model(2)
        rng = np.random.default_rng(14)
        x = rng.standard_normal((40, 2))
        sur = fit(linear(), TrainingSet(x, x.sum(axis=1)))
        comp = TiltComponent(level=0.5, theta=0.0, psi_hat=0.0, surrogate=sur)
        c = estimate_norm_const(comp, model, ADAPTIVE_QUADRATURE)
        assert abs(c - 1.0) < 1e-6

    def test_dimension_and_input_guards(self):
        comp4 = TiltComponent(level=0.5, theta=0.0, psi_hat=0.0,
                              surrogate=line_surrogate())
        with pytest.raises(ConfigError, match="d <= 2"):
            estimate_norm_const(comp4, builtin_model(4),
                                ADAPTIVE_QUADRATURE)
        model2 = builtin_model(2)
        with pytest.raises(ConfigError, match="d = 1"):
            estimate_norm_const(comp4, model2, TRAPEZOID_ON_SAMPLES,
                                samples=np.zeros((50, 2)))
        model1 = builtin_model(1)
        with pytest.raises(ConfigError, match="sample grid"):
            estimate_norm_const(exact_component(0.0), model1,
                                TRAPEZOID_ON_SAMPLES)
        with pytest.raises(ConfigError, match="mixture sample"):
            estimate_norm_const(exact_component(0.0), model1, KDE_RATIO)
        with pytest.raises(ConfigError, match="reasonably sized"):
            estimate_norm_const(exact_component(0.0), model1, KDE_RATIO,
                                samples=np.zeros((5, 1)))
        with pytest.raises(ConfigError, match="unknown"):
            estimate_norm_const(exact_component(0.0), model1, "simpson")

    def test_degenerate_kde_sample_is_flagged(self):
        model = builtin_model(1)
        with pytest.raises(EstimationError, match="bandwidth degenerate"):
            estimate_norm_const(exact_component(0.0), model, KDE_RATIO,
                                samples=np.zeros((100, 1)))

    def test_vanishing_constant_is_flagged(self):
        # a huge stored log normalizer drives the integrand to numerical
        # zero; the estimate must refuse rather than return 0
        model = builtin_model(1)
        comp = exact_component(0.0, psi_shift=1e6)
        with pytest.raises(EstimationError):
            estimate_norm_const(comp, model, MONTE_CARLO, n_draws=100,
                                rng=np.random.default_rng(0))


class TestDrawMixture:
    def test_null_tilt_reproduces_base_law(self):
        model = builtin_model(1)
        mix = MixtureIS((exact_component(0.0),), np.array([1.0]))
        cfg = MhConfig(chains=32, burn_in=1500, thinning=5)
        out = draw_mixture(mix, model, 100_000, cfg,
                           np.random.default_rng(21))
        assert len(out) == 100_000
        assert out.strategy == ANCESTRAL
        assert np.all(out.origin == 0)
        # null tilt: the likelihood ratio is identically one
        assert np.allclose(out.w, 1.0, atol=1e-12)
        d = stats.kstest(out.x.ravel(), stats.norm.cdf).statistic
        assert d < 0.01
        assert np.array_equal(out.y, model.evaluate(out.x))

    def test_exact_tilt_weights_match_closed_form(self):
        model = builtin_model(1)
        mix = MixtureIS((exact_component(1.0),), np.array([1.0]))
        cfg = MhConfig(chains=32, burn_in=1000, thinning=5)
        out = draw_mixture(mix, model, 20_000, cfg, np.random.default_rng(22))
        x = out.x.ravel()
        assert out.w == pytest.approx(np.exp(0.5 - x), rel=1e-10)
        assert abs(x.mean() - 1.0) < 0.05
        assert 0.2 * len(out) < out.n_effective < len(out)

    def test_tail_tilts_concentrate_draws_in_the_tail(self):
        # components aimed at upper-tail levels should put most of the
        # response mass far beyond where base sampling would land: at least
        # half the draws above the 0.90 base quantile (base rate 10%) and
        # nearly all above the base median
        model = builtin_model(1)
        levels = 1.0 - 0.05 * (np.arange(1, 21) / 20.0)
        comps = tuple(exact_component(stats.norm.ppf(u), level=u)
                      for u in levels)
        mix = MixtureIS(comps, np.full(20, 1.0 / 20.0))
        cfg = MhConfig(chains=8, burn_in=800, thinning=5)
        out = draw_mixture(mix, model, 20_000, cfg, np.random.default_rng(23))
        y = out.y
        assert np.mean(y > stats.norm.ppf(0.90)) >= 0.5
        assert np.mean(y > 0.0) >= 0.95

    def test_zero_weight_component_is_invisible(self):
        model = builtin_model(1)
        cfg = MhConfig(chains=16, burn_in=400, thinning=3)
        pair = MixtureIS((exact_component(1.0), exact_component(2.5)),
                         np.array([1.0, 0.0]))
        single = MixtureIS((exact_component(1.0),), np.array([1.0]))
        a = draw_mixture(pair, model, 4000, cfg, np.random.default_rng(5))
        b = draw_mixture(single, model, 4000, cfg, np.random.default_rng(5))
        assert np.array_equal(a.x, b.x)
        assert np.array_equal(a.w, b.w)

    def test_budget_split_follows_mass_correction(self):
        # sampling mass is p_i c_i: constants (1, 4) with equal p turn into
        # draw fractions (0.2, 0.8), apportioned by largest remainder
        model = builtin_model(1)
        mix = MixtureIS((exact_component(0.0, level=0.3),
                         exact_component(0.0, level=0.7, norm_const=4.0)),
                        np.array([0.5, 0.5]))
        cfg = MhConfig(chains=8, burn_in=300, thinning=3)
        out = draw_mixture(mix, model, 997, cfg, np.random.default_rng(31))
        want = largest_remainder_counts(np.array([0.2, 0.8]), 997)
        got = np.bincount(out.origin, minlength=2)
        assert np.array_equal(got, want)
        assert np.array_equal(out.diagnostics["counts"], want)

    def test_weights_average_to_one_across_runs(self):
        # E_mixture[w] = 1 when the component constants are exact; check the
        # grand mean over independent runs against the spread of run means
        model = builtin_model(1)
        mix = MixtureIS((exact_component(0.8, level=0.4),
                         exact_component(1.6, level=0.8)),
                        np.array([0.4, 0.6]))
        cfg = MhConfig(chains=16, burn_in=800, thinning=4)
        means = [draw_mixture(mix, model, 6000, cfg,
                              np.random.default_rng(100 + r)).w.mean()
                 for r in range(10)]
        means = np.array(means)
        se = means.std(ddof=1) / np.sqrt(means.size)
        assert abs(means.mean() - 1.0) < 4 * se

    def test_pooled_strategy_draws_from_the_blended_target(self):
        model = builtin_model(1)
        mix = MixtureIS((exact_component(0.8, level=0.4),
                         exact_component(1.6, level=0.8)),
                        np.array([0.4, 0.6]))
        cfg = MhConfig(chains=16, burn_in=1000, thinning=5)
        out = draw_mixture(mix, model, 20_000, cfg, np.random.default_rng(41),
                           strategy=POOLED)
        assert out.strategy == POOLED
        assert np.all(out.origin == ORIGIN_POOLED)
        assert np.all(out.w > 0) and np.all(np.isfinite(out.w))
        # blended mean is 0.4*0.8 + 0.6*1.6 = 1.28; allow for correlation
        assert abs(out.x.mean() - 1.28) < 0.08
        assert abs(out.w.mean() - 1.0) < 0.05

    def test_pivot_points_seed_the_chains(self):
        model = builtin_model(1)
        rng = np.random.default_rng(51)
        px = rng.standard_normal(500)[:, None]
        pivots = WeightedSamples(px, px.ravel(), np.ones(500))
        mix = MixtureIS((exact_component(1.0),), np.array([1.0]))
        cfg = MhConfig(chains=8, burn_in=600, thinning=4)
        out = draw_mixture(mix, model, 5000, cfg, rng, pivots=pivots)
        assert abs(out.x.mean() - 1.0) < 0.2

    def test_out_of_support_pivots_are_rejected(self):
        model = builtin_model(5)
        x = np.linspace(0.05, 0.95, 10)[:, None]
        sur = fit(linear(), TrainingSet(x, x.ravel()))
        comp = TiltComponent(level=0.5, theta=0.5, psi_hat=0.1, surrogate=sur)
        bad = np.full((40, 1), -5.0)
        pivots = WeightedSamples(bad, bad.ravel(), np.ones(40))
        mix = MixtureIS((comp,), np.array([1.0]))
        with pytest.raises(SamplingError, match="zero target density"):
            draw_mixture(mix, model, 100, MhConfig(chains=4, burn_in=50),
                         np.random.default_rng(0), pivots=pivots)

    def test_stuck_component_chain_fails_diagnostics(self):
        model = builtin_model(1)
        mix = MixtureIS((exact_component(0.0),), np.array([1.0]))
        cfg = MhConfig(chains=4, burn_in=50, thinning=1, step_scale=5000.0,
                       max_adapt_steps=0)
        with pytest.raises(SamplingError, match="diagnostics"):
            draw_mixture(mix, model, 500, cfg, np.random.default_rng(61))

    def test_same_seed_bitwise_reproducible(self):
        model = builtin_model(1)
        mix = MixtureIS((exact_component(0.5, level=0.4),
                         exact_component(1.2, level=0.8)),
                        np.array([0.5, 0.5]))
        cfg = MhConfig(chains=8, burn_in=300, thinning=3)
        a = draw_mixture(mix, model, 2000, cfg, np.random.default_rng(77))
        b = draw_mixture(mix, model, 2000, cfg, np.random.default_rng(77))
        for field in ("x", "y", "w", "origin"):
            assert np.array_equal(getattr(a, field), getattr(b, field))

    def test_argument_guards(self):
        model = builtin_model(1)
        mix = MixtureIS((exact_component(0.0),), np.array([1.0]))
        with pytest.raises(ConfigError, match="at least one draw"):
            draw_mixture(mix, model, 0, MhConfig(), np.random.default_rng(0))
        with pytest.raises(ConfigError, match="strategy"):
            draw_mixture(mix, model, 10, MhConfig(), np.random.default_rng(0),
                         strategy="stratified")
        naked = TiltComponent(level=0.5, theta=0.0, psi_hat=0.0)
        with pytest.raises(ConfigError, match="surrogate"):
            draw_mixture(MixtureIS((naked,), np.array([1.0])), model, 10,
                         MhConfig(burn_in=10), np.random.default_rng(0))


class TestWeightedSamples:
    def test_validation(self):
        x = np.zeros((3, 1))
        with pytest.raises(ConfigError, match="one weight per draw"):
            WeightedSamples(x, np.zeros(3), np.ones(2))
        with pytest.raises(ConfigError, match="finite and non-negative"):
            WeightedSamples(x, np.zeros(3), np.array([1.0, -1.0, 1.0]))
        with pytest.raises(ConfigError, match="finite and non-negative"):
            WeightedSamples(x, np.zeros(3), np.array([1.0, np.inf, 1.0]))
        with pytest.raises(ConfigError, match="one response per draw"):
            WeightedSamples(x, np.zeros(2), np.ones(3))
        with pytest.raises(ConfigError, match="one origin per draw"):
            WeightedSamples(x, np.zeros(3), np.ones(3), origin=np.zeros(2))

    def test_item_access_and_iteration(self):
        x = np.arange(3.0)[:, None]
        batch = WeightedSamples(x, x.ravel() * 2, np.array([1.0, 2.0, 3.0]),
                                origin=np.array([0, 1, 1]))
        assert len(batch) == 3
        items = list(batch)
        assert all(isinstance(s, WeightedSample) for s in items)
        assert items[1].y == 2.0 and items[1].w == 2.0 and items[1].origin == 1
        np.testing.assert_array_equal(items[2].x, [2.0])

    def test_responses_can_arrive_later(self):
        x = np.arange(4.0)[:, None]
        batch = WeightedSamples(x, None, np.ones(4))
        assert batch[0].y is None
        filled = batch.with_responses(x.ravel() ** 2)
        assert filled[3].y == 9.0
        np.testing.assert_array_equal(filled.x, batch.x)

    def test_subset_keeps_rows_aligned(self):
        x = np.arange(5.0)[:, None]
        batch = WeightedSamples(x, x.ravel(), np.arange(1.0, 6.0),
                                origin=np.arange(5))
        sub = batch.subset(batch.x.ravel() > 1.5)
        assert len(sub) == 3
        np.testing.assert_array_equal(sub.y, [2.0, 3.0, 4.0])
        np.testing.assert_array_equal(sub.w, [3.0, 4.0, 5.0])
        np.testing.assert_array_equal(sub.origin, [2, 3, 4])

    def test_effective_sample_size(self):
        x = np.zeros((4, 1))
        assert WeightedSamples(x, None, np.ones(4)).n_effective == 4.0
        lop = WeightedSamples(x, None, np.array([1.0, 0.0, 0.0, 0.0]))
        assert lop.n_effective == 1.0
        assert WeightedSamples(x, None, np.zeros(4)).n_effective == 0.0
