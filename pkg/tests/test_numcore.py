"""Deterministic numerics kernel: linear algebra guards, seeded Monte Carlo
primitives, adaptive quadrature."""

import math

import numpy as np
import pytest

from mmsekit.errors import (
    NonFiniteSample,
    NotSymmetric,
    RankDeficient,
    ToleranceNotMet,
)
from mmsekit.numcore import (
    CI_MULTIPLIER,
    RANK_TOLERANCE,
    McEstimate,
    derive_seed,
    integrate_1d,
    left_pseudo_inverse,
    mc_mean,
    mc_variance,
    smallest_eigenvalue,
    smallest_singular_value,
)


class TestMcEstimate:
    def test_fields_round_trip(self):
        est = McEstimate(1.5, 0.1, 100, 7)
        assert (est.value, est.std_error, est.n_samples, est.seed) == (1.5, 0.1, 100, 7)

    def test_rejects_non_finite_value(self):
        with pytest.raises(NonFiniteSample):
            McEstimate(math.nan, 0.1, 100, 7)
        with pytest.raises(NonFiniteSample):
            McEstimate(math.inf, 0.1, 100, 7)

    def test_rejects_negative_std_error(self):
        with pytest.raises(ValueError):
            McEstimate(1.0, -0.1, 100, 7)

    def test_rejects_tiny_sample_count(self):
        with pytest.raises(ValueError):
            McEstimate(1.0, 0.1, 1, 7)

    def test_frozen(self):
        est = McEstimate(1.0, 0.1, 100, 7)
        with pytest.raises(AttributeError):
            est.value = 2.0


class TestLeftPseudoInverse:
    def test_stacked_ones_averages(self):
        out = left_pseudo_inverse([[1.0], [1.0]])
        np.testing.assert_allclose(out, [[0.5, 0.5]])

    def test_left_inverse_property_random_matrices(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            k = rng.integers(1, 6)
            d = rng.integers(1, k + 1)
            a = rng.standard_normal((k, d))
            pinv = left_pseudo_inverse(a)
            np.testing.assert_allclose(pinv @ a, np.eye(d), atol=1e-10)

    def test_square_inverse(self):
        a = [[2.0, 0.0], [0.0, 4.0]]
        np.testing.assert_allclose(
            left_pseudo_inverse(a), [[0.5, 0.0], [0.0, 0.25]], atol=1e-14
        )

    def test_rank_deficient_raises(self):
        with pytest.raises(RankDeficient):
            left_pseudo_inverse([[1.0, 1.0], [1.0, 1.0]])

    def test_rank_tolerance_is_relative(self):
        # singular values 1 and 1e-8: small but above 1e-10 relative cutoff
        a = np.diag([1.0, 1e-8])
        pinv = left_pseudo_inverse(a)
        np.testing.assert_allclose(pinv @ a, np.eye(2), atol=1e-8)
        with pytest.raises(RankDeficient):
            left_pseudo_inverse(np.diag([1.0, 1e-11 * RANK_TOLERANCE * 1e10]))

    def test_wide_matrix_rejected(self):
        # more columns than rows can never have full column rank
        with pytest.raises(ValueError):
            left_pseudo_inverse([[1.0, 2.0]])


class TestSingularAndEigen:
    def test_smallest_singular_value_inequality(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            a = rng.standard_normal((4, 3))
            s = smallest_singular_value(a)
            x = rng.standard_normal(3)
            assert s * np.linalg.norm(x) <= np.linalg.norm(a @ x) + 1e-12

    def test_smallest_singular_value_diagonal(self):
        assert smallest_singular_value(np.diag([3.0, 0.5])) == pytest.approx(0.5)

    def test_smallest_eigenvalue_symmetric(self):
        m = np.array([[2.0, 1.0], [1.0, 2.0]])
        assert smallest_eigenvalue(m) == pytest.approx(1.0)

    def test_smallest_eigenvalue_rejects_asymmetric(self):
        with pytest.raises(NotSymmetric):
            smallest_eigenvalue([[1.0, 2.0], [0.0, 1.0]])


class TestDeriveSeed:
    def test_deterministic(self):
        assert derive_seed(42, 1, 2) == derive_seed(42, 1, 2)

    def test_distinct_paths_distinct_seeds(self):
        seeds = {
            derive_seed(42),
            derive_seed(42, 0),
            derive_seed(42, 1),
            derive_seed(42, 0, 0),
            derive_seed(42, 0, 1),
            derive_seed(43, 0),
        }
        assert len(seeds) == 6

    def test_uint64_range(self):
        s = derive_seed(7, 3, 1, 4)
        assert 0 <= s < 2**64


def _gauss_sampler(mu, sigma):
    return lambda rng, m: mu + sigma * rng.standard_normal(m)


class TestMcMean:
    def test_deterministic_given_seed_and_workers(self):
        f = lambda v: v
        for workers in (1, 3):
            a = mc_mean(f, _gauss_sampler(0.0, 1.0), 999, seed=5, workers=workers)
            b = mc_mean(f, _gauss_sampler(0.0, 1.0), 999, seed=5, workers=workers)
            assert a == b

    def test_different_seeds_differ(self):
        f = lambda v: v
        a = mc_mean(f, _gauss_sampler(0.0, 1.0), 100, seed=5)
        b = mc_mean(f, _gauss_sampler(0.0, 1.0), 100, seed=6)
        assert a.value != b.value

    def test_unbiased_within_four_se_over_many_seeded_trials(self):
        # Pinned master seed verified once: every trial mean lies within
        # 4 of its own standard errors of the true mean.
        mu, sigma, n_trials, n = 0.7, 1.3, 10_000, 256
        f = lambda v: v
        worst = 0.0
        for trial in range(n_trials):
            est = mc_mean(f, _gauss_sampler(mu, sigma), n, seed=derive_seed(424242, trial))
            z = abs(est.value - mu) / est.std_error
            worst = max(worst, z)
        assert worst <= 4.0, f"worst z-score {worst}"

    def test_std_error_matches_population_scale(self):
        est = mc_mean(lambda v: v, _gauss_sampler(0.0, 2.0), 40_000, seed=3)
        assert est.std_error == pytest.approx(2.0 / math.sqrt(40_000), rel=0.05)

    def test_rejects_non_finite_values(self):
        with np.errstate(divide="ignore"), pytest.raises(NonFiniteSample):
            mc_mean(lambda v: v / 0.0, _gauss_sampler(1.0, 0.1), 100, seed=1)

    def test_rejects_wrong_shape(self):
        with pytest.raises(ValueError):
            mc_mean(lambda v: v[:-1], _gauss_sampler(0.0, 1.0), 100, seed=1)

    def test_rejects_n_below_two(self):
        with pytest.raises(ValueError):
            mc_mean(lambda v: v, _gauss_sampler(0.0, 1.0), 1, seed=1)

    def test_constant_integrand_zero_error(self):
        est = mc_mean(lambda v: np.ones_like(v), _gauss_sampler(0.0, 1.0), 50, seed=1)
        assert est.value == 1.0
        assert est.std_error == 0.0


class TestMcVariance:
    def test_deterministic_given_seed_and_workers(self):
        f = lambda v: v
        a = mc_variance(f, _gauss_sampler(0.0, 1.5), 2001, seed=9, workers=4)
        b = mc_variance(f, _gauss_sampler(0.0, 1.5), 2001, seed=9, workers=4)
        assert a == b

    def test_recovers_known_variance(self):
        est = mc_variance(lambda v: v, _gauss_sampler(5.0, 2.0), 50_000, seed=11)
        assert abs(est.value - 4.0) <= CI_MULTIPLIER * est.std_error
        # Var(S^2) for Gaussian data is 2 sigma^4 (n-1)/n^2
        theory = math.sqrt(2 * 16.0 / 50_000)
        assert est.std_error == pytest.approx(theory, rel=0.1)

    def test_shift_stability_for_large_offsets(self):
        # power sums around the first draw keep cancellation harmless
        est = mc_variance(lambda v: v, _gauss_sampler(1e8, 1.0), 20_000, seed=13)
        assert abs(est.value - 1.0) <= 5 * est.std_error

    def test_constant_values_zero_variance(self):
        est = mc_variance(
            lambda v: np.full_like(v, 3.0), _gauss_sampler(0.0, 1.0), 100, seed=1
        )
        assert est.value == 0.0
        assert est.std_error == 0.0


class TestIntegrate1d:
    def test_gaussian_density_normalizes(self):
        f = lambda y: np.exp(-0.5 * y * y) / math.sqrt(2 * math.pi)
        assert integrate_1d(f, -np.inf, np.inf) == pytest.approx(1.0, abs=1e-10)

    def test_finite_interval(self):
        assert integrate_1d(lambda y: y * y, 0.0, 1.0) == pytest.approx(1.0 / 3.0, abs=1e-12)

    def test_tolerance_not_met_raises(self):
        # oscillatory integrand defeats the subdivision budget
        f = lambda y: np.cos(y * y * 50.0)
        with pytest.raises(ToleranceNotMet):
            integrate_1d(f, -np.inf, np.inf, abs_tol=1e-12, rel_tol=1e-12)

    def test_scalar_and_array_integrands(self):
        # quad feeds scalars; the wrapper must accept vectorized integrands
        f = lambda y: np.exp(-np.abs(y))
        assert integrate_1d(f, -np.inf, np.inf) == pytest.approx(2.0, abs=1e-9)
