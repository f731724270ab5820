"""Channel factorizations, prior laws, and the joint-model container."""

import math

import numpy as np
import pytest

from mmsekit.errors import DomainError, NotPSD, PriorHasNoDensity
from mmsekit.expfamily import (
    GAUSSIAN_EXPERIMENT_COVARIANCE,
    BpskPrior,
    ClosedForm,
    GammaPrior,
    GammaVarianceChannel,
    GaussianChannel,
    GaussianPrior,
    JointModel,
    MonteCarlo,
    PointMassPrior,
    SparsePrior,
    prior_moments,
    sample_joint,
)
from mmsekit.numcore import integrate_1d


def _numeric_jacobian(channel, y, h=1e-6):
    k, d = channel.output_dim, channel.input_dim
    y0 = np.atleast_1d(np.asarray(y, dtype=float))
    jac = np.empty((k, d))
    for i in range(k):
        hi, lo = y0.copy(), y0.copy()
        step = h * (1.0 + abs(y0[i]))
        hi[i] += step
        lo[i] -= step
        up = np.atleast_1d(channel.sufficient_stat(hi if k > 1 else float(hi[0])))
        dn = np.atleast_1d(channel.sufficient_stat(lo if k > 1 else float(lo[0])))
        jac[i] = (up - dn) / (2 * step)
    return jac


CHANNELS = [
    GaussianChannel(0.7),
    GaussianChannel(2.5, dim=3),
    GammaVarianceChannel(),
]


class TestJacobianAgainstNumericDifferentiation:
    @pytest.mark.parametrize("channel", CHANNELS, ids=lambda c: f"{type(c).__name__}-k{c.output_dim}")
    def test_jacobian_matches_numeric(self, channel):
        rng = np.random.default_rng(3)
        for _ in range(20):
            y = rng.standard_normal(channel.output_dim) * 2.0 + 0.1
            y_in = float(y[0]) if channel.output_dim == 1 else y
            jac = channel.jacobian_stat(y_in)
            jac = np.asarray(jac).reshape(channel.output_dim, channel.input_dim)
            num = _numeric_jacobian(channel, y)
            np.testing.assert_allclose(jac, num, rtol=1e-6, atol=1e-8)

    def test_jacobian_layout_row_is_observation_axis(self):
        # gradient layout: J[i, j] = d T_j / d y_i, so J @ x gives the
        # y-gradient of <x, T(y)>
        ch = GaussianChannel(2.0, dim=2)
        jac = ch.jacobian_stat(np.array([0.3, -0.4]))
        np.testing.assert_allclose(jac, np.eye(2) / 2.0)
        assert jac.shape == (2, 2)

    def test_batched_jacobian_shape(self):
        ch = GammaVarianceChannel()
        ys = np.linspace(-2, 2, 7)
        assert ch.jacobian_stat(ys).shape == (7, 1, 1)
        np.testing.assert_allclose(ch.jacobian_stat(ys)[:, 0, 0], -2.0 * ys)


class TestConditionalDensities:
    @pytest.mark.parametrize("s2", [0.3, 1.0, 4.0])
    def test_gaussian_channel_factorization_matches_direct_density(self, s2):
        ch = GaussianChannel(s2)
        rng = np.random.default_rng(4)
        x = rng.standard_normal(1000)
        y = rng.standard_normal(1000)
        direct = -0.5 * math.log(2 * math.pi * s2) - (y - x) ** 2 / (2 * s2)
        np.testing.assert_allclose(ch.log_cond_pdf(x, y), direct, atol=1e-12)

    def test_gaussian_vector_factorization(self):
        ch = GaussianChannel(1.5, dim=3)
        rng = np.random.default_rng(5)
        x = rng.standard_normal((200, 3))
        y = rng.standard_normal((200, 3))
        direct = -1.5 * math.log(2 * math.pi * 1.5) - np.sum((y - x) ** 2, axis=-1) / 3.0
        np.testing.assert_allclose(ch.log_cond_pdf(x, y), direct, atol=1e-12)

    def test_gamma_variance_channel_matches_direct_density(self):
        # Y | X=x is N(0, 1/(2x)): log density sqrt(x/pi) e^{-x y^2}
        ch = GammaVarianceChannel()
        rng = np.random.default_rng(6)
        x = rng.gamma(2.0, 1.0, size=1000) + 0.05
        y = rng.standard_normal(1000)
        direct = 0.5 * np.log(x / math.pi) - x * y * y
        np.testing.assert_allclose(ch.log_cond_pdf(x, y), direct, atol=1e-12)

    @pytest.mark.parametrize(
        "channel,xs",
        [
            (GaussianChannel(0.6), [-1.2, 0.0, 0.7, 2.3, -0.4, 1.1, 3.0, -2.2, 0.2, 0.9]),
            (GammaVarianceChannel(), [0.2, 0.5, 0.9, 1.3, 1.8, 2.4, 3.1, 4.0, 5.5, 7.0]),
        ],
        ids=["gaussian", "gamma-variance"],
    )
    def test_scalar_channels_normalize(self, channel, xs):
        for x in xs:
            total = integrate_1d(
                lambda y: np.exp(channel.log_cond_pdf(x, y)),
                -np.inf,
                np.inf,
                abs_tol=1e-10,
                rel_tol=1e-10,
            )
            assert total == pytest.approx(1.0, abs=1e-8)

    def test_gamma_variance_rejects_nonpositive_x(self):
        ch = GammaVarianceChannel()
        with pytest.raises(DomainError):
            ch.log_cond_pdf(0.0, 1.0)
        with pytest.raises(DomainError):
            ch.log_cond_pdf(-1.0, 1.0)

    def test_score_matches_numeric_derivative(self):
        for ch, x in [(GaussianChannel(0.8), 0.6), (GammaVarianceChannel(), 1.4)]:
            for y in (-1.7, 0.3, 2.1):
                h = 1e-6
                num = (
                    float(ch.log_cond_pdf(x, y + h)) - float(ch.log_cond_pdf(x, y - h))
                ) / (2 * h)
                assert float(ch.grad_y_log_cond(x, y)) == pytest.approx(num, abs=1e-5)


class TestChannelSampling:
    def test_gaussian_sampler_moments(self):
        ch = GaussianChannel(2.0)
        rng = np.random.default_rng(7)
        y = ch.sample_given_x(1.5, rng, size=200_000)
        assert np.mean(y) == pytest.approx(1.5, abs=0.02)
        assert np.var(y) == pytest.approx(2.0, abs=0.03)

    def test_gamma_variance_sampler_moments(self):
        ch = GammaVarianceChannel()
        rng = np.random.default_rng(8)
        y = ch.sample_given_x(2.0, rng, size=200_000)
        assert np.mean(y) == pytest.approx(0.0, abs=0.01)
        assert np.var(y) == pytest.approx(0.25, abs=0.01)

    def test_batched_x_sampling_shape(self):
        ch = GaussianChannel(1.0, dim=2)
        rng = np.random.default_rng(9)
        x = rng.standard_normal((50, 2))
        y = ch.sample_given_x(x, rng)
        assert y.shape == (50, 2)

    def test_size_with_batched_x_rejected(self):
        ch = GaussianChannel(1.0)
        rng = np.random.default_rng(10)
        with pytest.raises(ValueError):
            ch.sample_given_x(np.array([0.0, 1.0]), rng, size=5)


class TestPriors:
    def test_gaussian_prior_moments(self):
        prior = GaussianPrior([[2.0]], mean=[0.5])
        rng = np.random.default_rng(11)
        x = prior.sample(rng, 100_000)
        assert x.shape == (100_000,)
        assert np.mean(x) == pytest.approx(0.5, abs=0.02)
        assert np.var(x) == pytest.approx(2.0, abs=0.05)
        assert prior.trace_covariance == pytest.approx(2.0)

    def test_gaussian_prior_vector_sampling(self):
        prior = GaussianPrior(GAUSSIAN_EXPERIMENT_COVARIANCE)
        rng = np.random.default_rng(12)
        x = prior.sample(rng, 200_000)
        assert x.shape == (200_000, 6)
        emp = np.cov(x.T)
        np.testing.assert_allclose(emp, np.asarray(GAUSSIAN_EXPERIMENT_COVARIANCE), atol=0.15)

    def test_gaussian_prior_log_density_matches_quadratic_form(self):
        cov = np.array([[2.0, 0.3], [0.3, 1.0]])
        prior = GaussianPrior(cov)
        rng = np.random.default_rng(13)
        x = rng.standard_normal((100, 2))
        prec = np.linalg.inv(cov)
        direct = -0.5 * np.einsum("ni,ij,nj->n", x, prec, x) - 0.5 * np.log(
            (2 * math.pi) ** 2 * np.linalg.det(cov)
        )
        np.testing.assert_allclose(prior.log_density(x), direct, atol=1e-10)

    def test_gaussian_prior_rejects_non_pd(self):
        with pytest.raises(NotPSD):
            GaussianPrior([[1.0, 2.0], [2.0, 1.0]])

    def test_experiment_covariance_frozen_and_symmetric(self):
        cov = np.asarray(GAUSSIAN_EXPERIMENT_COVARIANCE)
        assert cov.shape == (6, 6)
        np.testing.assert_array_equal(cov, cov.T)
        assert np.trace(cov) == pytest.approx(44.43)
        with pytest.raises(ValueError):
            GAUSSIAN_EXPERIMENT_COVARIANCE[0, 0] = 0.0

    def test_bpsk_prior(self):
        prior = BpskPrior()
        rng = np.random.default_rng(14)
        x = prior.sample(rng, 100_000)
        assert set(np.unique(x)) == {-1.0, 1.0}
        assert abs(np.mean(x)) < 0.02
        assert prior.trace_covariance == 1.0
        assert prior.mean == 0.0
        with pytest.raises(PriorHasNoDensity):
            prior.log_density(0.5)

    def test_sparse_prior(self):
        prior = SparsePrior(0.4)
        rng = np.random.default_rng(15)
        x = prior.sample(rng, 400_000)
        zero_frac = np.mean(x == 0.0)
        assert zero_frac == pytest.approx(0.6, abs=0.005)
        assert np.var(x) == pytest.approx(0.4, abs=0.01)
        assert prior.trace_covariance == pytest.approx(0.4)
        with pytest.raises(PriorHasNoDensity):
            prior.log_density(0.0)

    @pytest.mark.parametrize("alpha", [0.0, 1.0, -0.2, 1.5])
    def test_sparse_prior_rejects_bad_alpha(self, alpha):
        with pytest.raises(ValueError):
            SparsePrior(alpha)

    def test_gamma_prior(self):
        prior = GammaPrior(2.0, 3.0)
        rng = np.random.default_rng(16)
        x = prior.sample(rng, 200_000)
        assert np.all(x > 0)
        assert np.mean(x) == pytest.approx(2.0 / 3.0, abs=0.01)
        assert np.var(x) == pytest.approx(2.0 / 9.0, abs=0.01)
        assert prior.trace_covariance == pytest.approx(2.0 / 9.0)
        # log density: alpha log beta - lgamma(alpha) + (alpha-1) log x - beta x
        val = float(prior.log_density(1.0))
        assert val == pytest.approx(2 * math.log(3) + math.log(1.0) - 3.0 - math.lgamma(2.0))
        assert prior.log_density(-1.0) == -math.inf

    def test_point_mass_prior(self):
        prior = PointMassPrior(0.75)
        rng = np.random.default_rng(17)
        x = prior.sample(rng, 100)
        np.testing.assert_array_equal(x, np.full(100, 0.75))
        assert prior.trace_covariance == 0.0
        assert prior.mean == 0.75

    def test_prior_moments_helper(self):
        mean, trace = prior_moments(GammaPrior(2.0, 3.0))
        assert mean == pytest.approx(2.0 / 3.0)
        assert trace == pytest.approx(2.0 / 9.0)


class TestJointModel:
    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValueError):
            JointModel(GaussianPrior(GAUSSIAN_EXPERIMENT_COVARIANCE), GaussianChannel(1.0))

    def test_sample_joint_shapes_scalar(self):
        joint = JointModel(BpskPrior(), GaussianChannel(1.0))
        rng = np.random.default_rng(18)
        x, y = sample_joint(joint, rng, 64)
        assert x.shape == (64,)
        assert y.shape == (64,)

    def test_sample_joint_shapes_vector(self):
        joint = JointModel(
            GaussianPrior(GAUSSIAN_EXPERIMENT_COVARIANCE), GaussianChannel(1.0, dim=6)
        )
        rng = np.random.default_rng(19)
        x, y = sample_joint(joint, rng, 32)
        assert x.shape == (32, 6)
        assert y.shape == (32, 6)

    def test_sample_joint_deterministic(self):
        joint = JointModel(SparsePrior(0.4), GaussianChannel(0.8))
        x1, y1 = sample_joint(joint, np.random.default_rng(20), 100)
        x2, y2 = sample_joint(joint, np.random.default_rng(20), 100)
        np.testing.assert_array_equal(x1, x2)
        np.testing.assert_array_equal(y1, y2)

    def test_strategies_are_value_objects(self):
        assert ClosedForm() == ClosedForm()
        assert MonteCarlo(1000, 3) == MonteCarlo(1000, 3)
        joint = JointModel(BpskPrior(), GaussianChannel(1.0), MonteCarlo(1000, 3))
        assert joint.marginal_strategy.n_marginal == 1000
