"""Allocation coefficients, square-root budget split, variance comparison."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, optimize, stats

from drmis.allocation import (INDIVIDUAL, MIXTURE, AllocationPlan, allocate,
                              compare_variances, estimate_coeffs, kde_density,
                              largest_remainder_counts)
from drmis.distortion import (avar, estimation_levels, g_increments,
                              make_partition)
from drmis.errors import AllocationError, ConfigError
from drmis.tilt import TiltComponent


def exact_setup(m=4, alpha=0.05):
    """Model-(1) style exact-tilt scene: normal base, identity response.

    Tilting N(0,1) toward mean q uses theta = q, psi = theta^2/2; the dead
    top cell keeps a zero tilt.
    """
    g = avar(alpha)
    part = make_partition(g, m)
    levels = estimation_levels(g, part)
    dg = g_increments(g, part)
    thetas = np.where(dg > 0, stats.norm.ppf(np.where(dg > 0, levels, 0.5)), 0.0)
    tilts = tuple(TiltComponent(u, t, t * t / 2.0)
                  for u, t in zip(levels, thetas))
    return g, part, levels, dg, thetas, tilts


def aux_c_quadrature(theta, q):
    """E_F[dF/dF_theta 1{X > q}] for the exact normal tilt, by quadrature."""
    psi = theta * theta / 2.0
    val, _ = integrate.quad(
        lambda x: np.exp(psi - theta * x) * stats.norm.pdf(x), q, 40.0)
    return val


class TestAllocate:
    def test_symmetric_coeffs(self):
        plan = allocate(np.array([1.0, 1.0, 1.0, 1.0]), 100)
        np.testing.assert_array_equal(plan.counts, [25, 25, 25, 25])
        np.testing.assert_allclose(plan.weights, 0.25, atol=1e-15)

    def test_sqrt_proportionality(self):
        plan = allocate(np.array([4.0, 1.0]), 30)
        np.testing.assert_array_equal(plan.counts, [20, 10])

    def test_matches_constrained_minimizer(self):
        # oracle: SLSQP minimization of sum c_i / n_i over the simplex n >= 0,
        # sum n = N; compare achieved objective values within 0.1%
        rng = np.random.default_rng(5150)
        n_total = 10_000
        for _ in range(10):
            c = rng.uniform(0.05, 20.0, size=rng.integers(2, 8))
            plan = allocate(c, n_total)

            def objective(n):
                return float(np.sum(c / np.maximum(n, 1e-9)))

            res = optimize.minimize(
                objective, np.full(c.size, n_total / c.size),
                constraints=[{"type": "eq",
                              "fun": lambda n: n.sum() - n_total}],
                bounds=[(1e-6, n_total)] * c.size, method="SLSQP",
                options={"maxiter": 500, "ftol": 1e-12})
            assert res.success
            assert objective(plan.counts) <= 1.001 * res.fun

    def test_integer_optimality_under_perturbations(self):
        rng = np.random.default_rng(88)
        c = rng.uniform(0.1, 5.0, 6)
        n_total = 500
        plan = allocate(c, n_total)
        counts = plan.counts.astype(float)
        base_obj = np.sum(c / counts)
        slack = np.max(c / (counts * np.maximum(counts - 1, 1)))
        for _ in range(50):
            i, j = rng.choice(6, size=2, replace=False)
            moved = counts.copy()
            moved[i] += 1
            moved[j] -= 1
            if moved[j] <= 0:
                continue
            assert base_obj <= np.sum(c / moved) + slack

    def test_zero_coefficients_preserved(self):
        plan = allocate(np.array([1.0, 0.0, 4.0]), 90)
        assert plan.weights[1] == 0.0
        assert plan.counts[1] == 0
        assert plan.counts.sum() == 90

    def test_all_zero_uniform_fallback_with_warning(self):
        with pytest.warns(RuntimeWarning, match="uniform"):
            plan = allocate(np.zeros(4), 10)
        np.testing.assert_allclose(plan.weights, 0.25)
        assert plan.counts.sum() == 10

    def test_validation(self):
        with pytest.raises(ConfigError):
            allocate(np.array([1.0, -0.1]), 10)
        with pytest.raises(ConfigError):
            allocate(np.array([np.inf, 1.0]), 10)
        with pytest.raises(ConfigError):
            allocate(np.array([1.0, 1.0]), 0)
        with pytest.raises(ConfigError):
            AllocationPlan(np.ones(3), np.array([0.5, 0.4, 0.2]))


class TestLargestRemainder:
    def test_hand_case(self):
        counts = largest_remainder_counts(np.array([0.5, 0.3, 0.2]), 7)
        np.testing.assert_array_equal(counts, [4, 2, 1])

    def test_sums_exactly(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            k = rng.integers(1, 12)
            w = rng.dirichlet(np.ones(k))
            n = int(rng.integers(1, 5000))
            counts = largest_remainder_counts(w, n)
            assert counts.sum() == n
            assert np.all(counts >= 0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(1e-6, 1e4), min_size=2, max_size=8),
       st.floats(1e-3, 1e3))
def test_allocate_scaling_invariance(coeffs, lam):
    c = np.array(coeffs)
    a = allocate(c, 977)
    b = allocate(lam * c, 977)
    np.testing.assert_allclose(a.weights, b.weights, atol=1e-12)
    np.testing.assert_array_equal(a.counts, b.counts)


class TestEstimateCoeffs:
    def test_zero_tilt_reduces_to_bahadur_numerator(self):
        # unit likelihood ratios: coefficient ~ (a - a^2) * dg / G'(q)
        g, part, levels, dg, _, _ = exact_setup()
        zero_tilts = tuple(TiltComponent(u, 0.0, 0.0) for u in levels)
        rng = np.random.default_rng(42)
        y = rng.standard_normal(100_000)
        coeffs = estimate_coeffs((y, y, np.ones(y.size)), zero_tilts, g, part,
                                 gprime_est=lambda q: stats.norm.pdf(q))
        for i in range(levels.size):
            if dg[i] <= 0:
                assert coeffs[i] == 0.0
                continue
            a = 1.0 - levels[i]
            expect = (a - a * a) * dg[i] / stats.norm.pdf(stats.norm.ppf(levels[i]))
            assert coeffs[i] == pytest.approx(expect, rel=0.10)

    def test_matches_quadrature_definition(self):
        # full coefficient definition under exact tilts, quadrature oracle
        g, part, levels, dg, thetas, tilts = exact_setup()
        rng = np.random.default_rng(23)
        y = rng.standard_normal(100_000)
        coeffs = estimate_coeffs((y, y, np.ones(y.size)), tilts, g, part,
                                 gprime_est=lambda q: stats.norm.pdf(q))
        for i in range(levels.size):
            if dg[i] <= 0:
                continue
            q = stats.norm.ppf(levels[i])
            a = 1.0 - levels[i]
            aux = aux_c_quadrature(thetas[i], q)
            expect = (aux - a * a) / stats.norm.pdf(q) * dg[i]
            assert coeffs[i] == pytest.approx(expect, rel=0.10)

    def test_noise_negative_floored_not_negative(self):
        g, part, levels, dg, _, tilts = exact_setup()
        rng = np.random.default_rng(3)
        y = rng.standard_normal(2000)
        coeffs = estimate_coeffs((y, y, np.ones(y.size)), tilts, g, part)
        assert np.all(coeffs >= 0.0)
        assert np.all(coeffs[dg > 0] > 0.0)

    def test_vanished_density_names_level(self):
        g, part, levels, dg, _, tilts = exact_setup()
        y = np.random.default_rng(0).standard_normal(5000)
        with pytest.raises(AllocationError, match="level"):
            estimate_coeffs((y, y, np.ones(y.size)), tilts, g, part,
                            gprime_est=lambda q: 0.0)

    def test_component_count_checked(self):
        g, part, levels, _, _, tilts = exact_setup()
        y = np.random.default_rng(0).standard_normal(100)
        with pytest.raises(ConfigError):
            estimate_coeffs((y, y, np.ones(y.size)), tilts[:-1], g, part)

    def test_targets_override_quantiles(self):
        g, part, levels, dg, _, tilts = exact_setup()
        rng = np.random.default_rng(11)
        y = rng.standard_normal(50_000)
        targets = np.where(dg > 0, stats.norm.ppf(np.where(dg > 0, levels, 0.5)),
                           0.0)
        coeffs = estimate_coeffs((y, y, np.ones(y.size)), tilts, g, part,
                                 gprime_est=lambda q: stats.norm.pdf(q),
                                 targets=targets)
        assert np.all(np.isfinite(coeffs))
        with pytest.raises(ConfigError):
            estimate_coeffs((y, y, np.ones(y.size)), tilts, g, part,
                            targets=targets[:-1])


class TestKdeDensity:
    def test_close_to_true_density_at_center(self):
        y = np.random.default_rng(15).standard_normal(50_000)
        dens = kde_density(y)
        assert dens(0.0) == pytest.approx(stats.norm.pdf(0.0), rel=0.1)


class TestCompareVariances:
    def test_single_level_tie_is_mixture(self):
        y = np.random.default_rng(1).standard_normal(500)
        w = np.ones(500)
        choice = compare_variances(0.05, (y, w), (y, w), 1.0)
        assert choice == MIXTURE

    def test_zero_weight_level_is_individual(self):
        y = np.random.default_rng(2).standard_normal(100)
        assert compare_variances(0.1, (y, np.ones(100)), (y, np.ones(100)),
                                 0.0) == INDIVIDUAL

    def test_nonfinite_defaults_to_mixture_with_warning(self):
        y = np.array([0.0, 1.0, 2.0])
        bad_w = np.array([1.0, np.inf, 1.0])
        with pytest.warns(RuntimeWarning, match="non-finite"):
            choice = compare_variances(0.3, (y, bad_w), (y, np.ones(3)), 0.5)
        assert choice == MIXTURE

    def test_matches_quadrature_verdict(self):
        # iid draws from each exact tilt and from the mixture; the oracle
        # evaluates both §-style expectations by quadrature at the exact
        # quantile and must agree wherever its margin is unambiguous
        g, part, levels, dg, thetas, tilts = exact_setup()
        live = np.nonzero(dg > 0)[0]
        coeffs_quad = np.zeros(levels.size)
        for i in live:
            q = stats.norm.ppf(levels[i])
            a = 1.0 - levels[i]
            coeffs_quad[i] = (aux_c_quadrature(thetas[i], q) - a * a) \
                / stats.norm.pdf(q) * dg[i]
        p = allocate(coeffs_quad, 10_000).weights

        def mixture_lr(x):
            den = sum(p[j] * np.exp(thetas[j] * x - thetas[j] ** 2 / 2.0)
                      for j in live)
            return 1.0 / den

        rng = np.random.default_rng(314)
        n = 50_000
        decisive = 0
        for i in live:
            x_ind = rng.standard_normal(n) + thetas[i]
            w_ind = np.exp(thetas[i] ** 2 / 2.0 - thetas[i] * x_ind)
            origins = rng.choice(levels.size, size=n, p=p)
            x_mix = rng.standard_normal(n) + thetas[origins]
            w_mix = mixture_lr(x_mix)
            a = 1.0 - levels[i]
            q = stats.norm.ppf(levels[i])
            ind_quad = aux_c_quadrature(thetas[i], q) - a * a
            mix_tail, _ = integrate.quad(
                lambda t: mixture_lr(t) * stats.norm.pdf(t), q, 40.0)
            mix_quad = p[i] * (mix_tail - a * a)
            # decisiveness gauged against the MC standard errors
            se_ind = np.std(w_ind**2 * (x_ind > q), ddof=1) / np.sqrt(n)
            se_mix = p[i] * np.std(w_mix**2 * (x_mix > q), ddof=1) / np.sqrt(n)
            if abs(ind_quad - mix_quad) < 4 * (se_ind + se_mix):
                continue
            decisive += 1
            expect = INDIVIDUAL if ind_quad < mix_quad else MIXTURE
            got = compare_variances(a, (x_ind, w_ind), (x_mix, w_mix),
                                    float(p[i]))
            assert got == expect, f"level {levels[i]}"
        assert decisive >= 2

    def test_validation(self):
        y = np.ones(3)
        with pytest.raises(ConfigError):
            compare_variances(1.5, (y, y), (y, y), 0.5)
        with pytest.raises(ConfigError):
            compare_variances(0.5, (np.array([]), np.array([])), (y, y), 0.5)
