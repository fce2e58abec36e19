"""Distortion functions, partitions, and the discretized risk-measure sum."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from drmis.distortion import (INVERSE_G, UNIFORM_ON_ALPHA, DistortionSpec,
                              Partition, avar, drm_from_quantiles,
                              estimation_levels, eval_distortion,
                              g_increments, make_partition, power_tail,
                              reference_drm, tabulated, var_at)
from drmis.errors import ConfigError, DomainError, EstimationError
from drmis.models import builtin_model


def all_specs():
    return (power_tail(0.05, 0.5), power_tail(0.05, 1.0),
            power_tail(0.002, 2.0), avar(0.1), var_at(0.05),
            tabulated(((0.0, 0.0), (0.3, 0.6), (1.0, 1.0))))


class TestEvalDistortion:
    def test_power_tail_linear_segment(self):
        assert eval_distortion(power_tail(0.05, 1.0), 0.025) == pytest.approx(0.5)

    def test_power_tail_square_segment(self):
        assert eval_distortion(power_tail(0.05, 2.0), 0.025) == pytest.approx(0.25)

    def test_normalization_at_one(self):
        for g in all_specs():
            assert eval_distortion(g, 1.0) == 1.0
            assert eval_distortion(g, 0.0) == 0.0

    def test_gamma_one_equals_avar(self):
        grid = np.linspace(0, 1, 401)
        a = eval_distortion(power_tail(0.1, 1.0), grid)
        b = eval_distortion(avar(0.1), grid)
        np.testing.assert_allclose(a, b, atol=1e-15)

    def test_monotone_on_grid(self):
        grid = np.linspace(0, 1, 1001)
        for g in all_specs():
            vals = eval_distortion(g, grid)
            assert np.all(np.diff(vals) >= -1e-12)

    def test_concave_for_gamma_below_one(self):
        grid = np.linspace(0, 1, 501)
        for gamma in (0.3, 0.5, 1.0):
            g = power_tail(0.05, gamma)
            v = eval_distortion(g, grid)
            mid = eval_distortion(g, (grid[:-1] + grid[1:]) / 2)
            assert np.all(mid >= (v[:-1] + v[1:]) / 2 - 1e-12)

    def test_var_is_a_step(self):
        # jump convention is 1{u > alpha}: the level itself still maps to 0
        g = var_at(0.05)
        assert eval_distortion(g, 0.049) == 0.0
        assert eval_distortion(g, 0.05) == 0.0
        assert eval_distortion(g, 0.051) == 1.0
        assert eval_distortion(g, 0.9) == 1.0

    def test_tabulated_interpolates(self):
        knots = ((0.0, 0.0), (0.4, 0.5), (1.0, 1.0))
        g = tabulated(knots)
        for u, gu in knots:
            assert eval_distortion(g, u) == pytest.approx(gu)
        assert eval_distortion(g, 0.2) == pytest.approx(
            np.interp(0.2, [0, 0.4, 1], [0, 0.5, 1]))

    def test_domain_errors(self):
        g = avar(0.1)
        with pytest.raises(DomainError):
            eval_distortion(g, -0.01)
        with pytest.raises(DomainError):
            eval_distortion(g, 1.01)

    def test_bad_specs_rejected(self):
        with pytest.raises(ConfigError):
            power_tail(0.0, 1.0)
        with pytest.raises(ConfigError):
            power_tail(0.05, -1.0)
        with pytest.raises(ConfigError):
            tabulated(((0.0, 0.0), (0.5, 0.9), (0.4, 0.95), (1.0, 1.0)))
        with pytest.raises(ConfigError):
            tabulated(((0.1, 0.0), (1.0, 1.0)))


class TestMakePartition:
    def test_uniform_on_alpha_arithmetic(self):
        part = make_partition(power_tail(0.05, 1.0), 5, UNIFORM_ON_ALPHA)
        np.testing.assert_allclose(
            part.levels, [0.0, 0.01, 0.02, 0.03, 0.04, 0.05, 1.0], atol=1e-15)

    def test_single_cell(self):
        part = make_partition(avar(0.1), 1, UNIFORM_ON_ALPHA)
        np.testing.assert_allclose(part.levels, [0.0, 0.1, 1.0], atol=1e-15)

    def test_inverse_g_against_bisection_oracle(self):
        # oracle: invert g(u) = u / alpha on [0, alpha] by plain bisection
        g = avar(0.1)

        def inv(t):
            lo, hi = 0.0, 1.0
            for _ in range(80):
                mid = (lo + hi) / 2
                if eval_distortion(g, mid) < t:
                    lo = mid
                else:
                    hi = mid
            return hi

        part = make_partition(g, 4, INVERSE_G)
        expect = [inv(i / 5) for i in range(5)] + [1.0]
        np.testing.assert_allclose(part.levels, expect, atol=1e-12)
        np.testing.assert_allclose(
            part.levels, [0.0, 0.02, 0.04, 0.06, 0.08, 1.0], atol=1e-9)

    def test_partition_invariants(self):
        part = make_partition(power_tail(0.01, 2.0), 30, INVERSE_G)
        assert part.levels[-1] == 1.0
        assert np.all(np.diff(part.levels) > 0)
        assert part.m == 30
        with pytest.raises(ConfigError):
            make_partition(avar(0.1), 0)

    def test_partition_type_checks(self):
        with pytest.raises(ConfigError):
            Partition(np.array([0.0, 0.5, 0.5, 1.0]))
        with pytest.raises(ConfigError):
            Partition(np.array([0.0, 0.9]))


class TestIncrementsAndLevels:
    def test_increments_sum_to_one(self):
        cases = [(s, g) for s in (UNIFORM_ON_ALPHA, INVERSE_G)
                 for g in (power_tail(0.002, 0.5), avar(0.05))]
        cases.append((UNIFORM_ON_ALPHA, var_at(0.01)))  # steps are not invertible
        for scheme, g in cases:
            part = make_partition(g, 50, scheme)
            dg = g_increments(g, part)
            assert dg.min() >= -1e-15
            assert abs(dg.sum() - 1.0) < 1e-12

    def test_inverse_g_rejects_step(self):
        with pytest.raises(ConfigError):
            make_partition(var_at(0.01), 50, INVERSE_G)

    def test_levels_right_endpoint_convention(self):
        g = avar(0.1)
        part = make_partition(g, 2)  # boundaries 0, 0.05, 0.1, 1
        levels = estimation_levels(g, part)
        np.testing.assert_allclose(levels, [1 - 0.05, 1 - 0.1, 0.0], atol=1e-15)

    def test_var_left_endpoint_convention(self):
        g = var_at(0.1)
        part = make_partition(g, 2)
        levels = estimation_levels(g, part)
        # a VaR jump must be read at the left endpoint: quantile at 1 - alpha
        dg = g_increments(g, part)
        (j,) = np.nonzero(dg)
        assert levels[j[0]] == pytest.approx(1 - 0.1)


class TestDrmFromQuantiles:
    def test_constant_inputs_return_constant(self):
        g = power_tail(0.05, 0.5)
        part = make_partition(g, 20)
        q = np.full(part.n_cells, 7.31)
        assert drm_from_quantiles(q, g, part) == pytest.approx(7.31)

    def test_var_collapses_to_single_level(self):
        g = var_at(0.05)
        part = make_partition(g, 10)
        dg = g_increments(g, part)
        (j,) = np.nonzero(dg)
        q = np.arange(part.n_cells, dtype=float)
        assert drm_from_quantiles(q, g, part) == pytest.approx(float(q[j[0]]))

    def test_normal_quantiles_match_table_value(self):
        # exact standard-normal quantiles through the discretization
        g = avar(0.002)
        part = make_partition(g, 50)
        levels = estimation_levels(g, part)
        dg = g_increments(g, part)
        q = np.zeros(levels.size)
        live = dg > 0
        q[live] = stats.norm.ppf(levels[live])
        assert drm_from_quantiles(q, g, part) == pytest.approx(3.16, abs=0.02)

    def test_monotone_in_each_entry(self):
        g = power_tail(0.05, 2.0)
        part = make_partition(g, 8)
        dg = g_increments(g, part)
        rng = np.random.default_rng(0)
        q = rng.normal(size=part.n_cells)
        base = drm_from_quantiles(q, g, part)
        for i in np.nonzero(dg > 0)[0]:
            bumped = q.copy()
            bumped[i] += 0.5
            assert drm_from_quantiles(bumped, g, part) > base

    def test_nonfinite_entry_names_level(self):
        g = avar(0.1)
        part = make_partition(g, 4)
        q = np.ones(part.n_cells)
        q[2] = np.inf
        with pytest.raises(EstimationError, match="level"):
            drm_from_quantiles(q, g, part)

    def test_shape_mismatch(self):
        g = avar(0.1)
        part = make_partition(g, 4)
        with pytest.raises(EstimationError, match="shape"):
            drm_from_quantiles(np.ones(3), g, part)


class TestReferenceDrm:
    def test_degenerate_constant_model(self):
        class Const:
            dim = 1

            def sample_base(self, rng, n=None):
                return rng.standard_normal((n or 1, 1))

            def evaluate(self, x):
                return np.full(np.atleast_2d(x).shape[0], 7.0)

        g = avar(0.05)
        part = make_partition(g, 5)
        assert reference_drm(Const(), g, part, 2000, seed=0) == pytest.approx(7.0)

    def test_statistical_agreement_with_analytic(self):
        model = builtin_model(1)
        g = avar(0.01)
        part = make_partition(g, 20)
        levels = estimation_levels(g, part)
        dg = g_increments(g, part)
        q = np.zeros(levels.size)
        q[dg > 0] = stats.norm.ppf(levels[dg > 0])
        exact = drm_from_quantiles(q, g, part)
        est = reference_drm(model, g, part, 400_000, seed=11)
        assert est == pytest.approx(exact, rel=0.01)

    def test_seeded_repeatability(self):
        model = builtin_model(6)
        g = avar(0.05)
        part = make_partition(g, 10)
        a = reference_drm(model, g, part, 50_000, seed=5)
        b = reference_drm(model, g, part, 50_000, seed=5)
        assert a == b


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.floats(0.001, 0.999), st.floats(0.001, 0.999)),
                min_size=1, max_size=6))
def test_tabulated_monotone_rebuild(pairs):
    us = np.sort(np.unique([p[0] for p in pairs]))
    gs = np.sort(np.unique([p[1] for p in pairs]))[: us.size]
    us = us[: gs.size]
    knots = [(0.0, 0.0)] + list(zip(us.tolist(), gs.tolist())) + [(1.0, 1.0)]
    g = tabulated(knots)
    grid = np.linspace(0, 1, 101)
    vals = eval_distortion(g, grid)
    assert np.all(np.diff(vals) >= -1e-12)
    assert vals[0] == 0.0 and vals[-1] == 1.0
