"""Exponential-family channels and input priors.

A channel is a conditional law with density

    f(y | x) = h(y) * exp(<x, T(y)> - phi(x))

exposed through exactly the ingredients the estimators consume: ``log_h``,
the sufficient statistic ``T``, its y-Jacobian, the log-partition ``phi``,
a conditional sampler, and the assembled ``log_cond_pdf``.

Shape conventions
-----------------
Scalar models (``dim == 1``) use plain floats or arrays of shape ``(...)``;
vector models use arrays with an explicit trailing axis ``(..., dim)``.
All density-like methods broadcast over leading batch axes.  Jacobians are
always matrix-shaped ``(..., k, d)``, with ``k`` the observation dimension
and ``d`` the input dimension; the Jacobian follows the gradient layout
``J[i, j] = dT_j / dy_i`` so that ``grad_y <x, T(y)> = J @ x``.

Channels and priors are immutable after construction and never own random
state; samplers take an explicit ``numpy.random.Generator``.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy.special import gammaln

from . import numcore
from .errors import DomainError, NotPSD, PriorHasNoDensity

__all__ = [
    "ChannelModel",
    "GaussianChannel",
    "GammaVarianceChannel",
    "PriorModel",
    "GaussianPrior",
    "BpskPrior",
    "SparsePrior",
    "GammaPrior",
    "PointMassPrior",
    "ClosedForm",
    "MonteCarlo",
    "JointModel",
    "sample_joint",
    "prior_moments",
    "GAUSSIAN_EXPERIMENT_COVARIANCE",
]


def _as_float_array(a) -> np.ndarray:
    return np.asarray(a, dtype=float)


class ChannelModel(ABC):
    """Abstract exponential-family conditional law.

    Subclasses fix ``input_dim`` (the dimension d of x), ``output_dim``
    (the dimension k of y) and implement the factor functions.  Generic
    fallbacks are provided for the derived quantities used by estimators
    (score of the conditional law, pseudo-inverse application, Hessians);
    concrete channels override them with closed forms where available.
    """

    input_dim: int
    output_dim: int

    # ----- factor functions -------------------------------------------------

    @abstractmethod
    def log_h(self, y) -> np.ndarray:
        """log of the base measure h at y; shape = batch shape of y."""

    @abstractmethod
    def grad_log_h(self, y) -> np.ndarray:
        """Gradient of log h in y; same shape convention as y."""

    @abstractmethod
    def sufficient_stat(self, y) -> np.ndarray:
        """T(y); scalar models return shape (...), vector models (..., d)."""

    @abstractmethod
    def jacobian_stat(self, y) -> np.ndarray:
        """Jacobian of T in y, shape (..., k, d), gradient layout."""

    @abstractmethod
    def log_partition(self, x) -> np.ndarray:
        """phi(x); shape = batch shape of x."""

    @abstractmethod
    def sample_given_x(self, x, rng: np.random.Generator, size: Optional[int] = None):
        """Draw Y | X=x.

        With ``size=None``, one draw per entry of a (possibly batched) x.
        With an integer ``size``, x must be a single point and the result
        carries a new leading axis of length ``size``.
        """

    def contains(self, x) -> np.ndarray:
        """Domain membership mask for x (default: all finite x)."""
        arr = _as_float_array(x)
        if self.input_dim == 1:
            return np.isfinite(arr)
        return np.all(np.isfinite(arr), axis=-1)

    # ----- assembled quantities ---------------------------------------------

    def _check_domain(self, x) -> np.ndarray:
        arr = _as_float_array(x)
        ok = self.contains(arr)
        if not np.all(ok):
            raise DomainError(
                f"{type(self).__name__}: input outside the channel domain"
            )
        return arr

    def _inner_xt(self, x, t) -> np.ndarray:
        if self.input_dim == 1:
            return _as_float_array(x) * t
        return np.sum(_as_float_array(x) * t, axis=-1)

    def log_cond_pdf(self, x, y) -> np.ndarray:
        """log f(y | x) = log h(y) + <x, T(y)> - phi(x), broadcasting."""
        x = self._check_domain(x)
        return self.log_h(y) + self._inner_xt(x, self.sufficient_stat(y)) - self.log_partition(x)

    def grad_y_log_cond(self, x, y) -> np.ndarray:
        """Score in y of the conditional law: J_y T(y) @ x + grad log h(y)."""
        x = self._check_domain(x)
        jac = self.jacobian_stat(y)
        if self.input_dim == 1 and self.output_dim == 1:
            lin = jac[..., 0, 0] * x
        else:
            lin = np.einsum("...kd,...d->...k", jac, np.broadcast_to(x, jac.shape[:-2] + (self.input_dim,)))
        return lin + self.grad_log_h(y)

    def rank_deficient_mask(self, y) -> np.ndarray:
        """Mask of y points where J_y T(y) loses full column rank."""
        jac = self.jacobian_stat(y)
        batch = jac.shape[:-2]
        flat = jac.reshape((-1,) + jac.shape[-2:])
        out = np.empty(flat.shape[0], dtype=bool)
        for i, j in enumerate(flat):
            sv = np.linalg.svd(j, compute_uv=False)
            out[i] = sv[-1] <= numcore.RANK_TOLERANCE * sv[0]
        return out.reshape(batch)

    def apply_pinv_jacobian(self, y, v) -> np.ndarray:
        """Apply the left pseudo-inverse of J_y T(y) to a k-vector field v.

        Callers must exclude rank-deficient points first (see
        ``rank_deficient_mask``); the generic path raises RankDeficient on
        such points.
        """
        jac = self.jacobian_stat(y)
        batch = jac.shape[:-2]
        v_arr = _as_float_array(v)
        if self.output_dim == 1 and v_arr.shape == batch:
            v_arr = v_arr[..., None]
        v_arr = np.broadcast_to(v_arr, batch + (self.output_dim,))
        flat_j = jac.reshape((-1,) + jac.shape[-2:])
        flat_v = v_arr.reshape(-1, self.output_dim)
        out = np.empty((flat_j.shape[0], self.input_dim))
        for i in range(flat_j.shape[0]):
            out[i] = numcore.left_pseudo_inverse(flat_j[i]) @ flat_v[i]
        out = out.reshape(batch + (self.input_dim,))
        if self.input_dim == 1:
            return out[..., 0]
        return out

    def hessian_neg_log_cond(self, x, y, step: float = 1e-4) -> np.ndarray:
        """Hessian in y of -log f(y | x) at a single point, shape (k, k).

        Generic path: central finite differences of the analytic score.
        Exact for channels whose log-density is quadratic in y.
        """
        k = self.output_dim
        if k == 1:
            y0 = float(_as_float_array(y))
            e = step * (1.0 + abs(y0))
            gp = float(self.grad_y_log_cond(x, y0 + e))
            gm = float(self.grad_y_log_cond(x, y0 - e))
            return np.array([[-(gp - gm) / (2 * e)]])
        y0 = _as_float_array(y).reshape(k)
        hess = np.empty((k, k))
        for j in range(k):
            e = step * (1.0 + abs(y0[j]))
            yp = y0.copy()
            ym = y0.copy()
            yp[j] += e
            ym[j] -= e
            col = -(self.grad_y_log_cond(x, yp) - self.grad_y_log_cond(x, ym)) / (2 * e)
            hess[:, j] = col
        return 0.5 * (hess + hess.T)


class GaussianChannel(ChannelModel):
    """Additive white Gaussian noise: Y = X + N with N ~ N(0, noise_variance I).

    Factorization: T(y) = y / noise_variance, phi(x) = ||x||^2 / (2 noise_variance),
    and h is the centered Gaussian density, so J_y T = I / noise_variance.
    """

    def __init__(self, noise_variance: float, dim: int = 1):
        if not noise_variance > 0:
            raise ValueError(f"noise_variance must be > 0, got {noise_variance}")
        if dim < 1:
            raise ValueError(f"dim must be >= 1, got {dim}")
        self.noise_variance = float(noise_variance)
        self.input_dim = int(dim)
        self.output_dim = int(dim)

    def _sq_norm(self, y) -> np.ndarray:
        arr = _as_float_array(y)
        if self.output_dim == 1:
            return arr * arr
        return np.sum(arr * arr, axis=-1)

    def log_h(self, y):
        k, s2 = self.output_dim, self.noise_variance
        return -0.5 * k * math.log(2 * math.pi * s2) - self._sq_norm(y) / (2 * s2)

    def grad_log_h(self, y):
        return -_as_float_array(y) / self.noise_variance

    def sufficient_stat(self, y):
        return _as_float_array(y) / self.noise_variance

    def jacobian_stat(self, y):
        arr = _as_float_array(y)
        batch = arr.shape if self.output_dim == 1 else arr.shape[:-1]
        eye = np.eye(self.output_dim) / self.noise_variance
        return np.broadcast_to(eye, batch + eye.shape)

    def log_partition(self, x):
        x = self._check_domain(x)
        return self._sq_norm(x) / (2 * self.noise_variance)

    def sample_given_x(self, x, rng, size=None):
        x = self._check_domain(x)
        sd = math.sqrt(self.noise_variance)
        if size is None:
            return x + sd * rng.standard_normal(np.shape(x))
        if self.output_dim == 1:
            if np.ndim(x) != 0:
                raise ValueError("size given, so x must be a single point")
            return x + sd * rng.standard_normal(size)
        if np.shape(x) != (self.output_dim,):
            raise ValueError("size given, so x must be a single point")
        return x + sd * rng.standard_normal((size, self.output_dim))

    # exact derived quantities

    def rank_deficient_mask(self, y):
        arr = _as_float_array(y)
        batch = arr.shape if self.output_dim == 1 else arr.shape[:-1]
        return np.zeros(batch, dtype=bool)

    def apply_pinv_jacobian(self, y, v):
        return self.noise_variance * _as_float_array(v)

    def hessian_neg_log_cond(self, x, y, step: float = 1e-4):
        return np.eye(self.output_dim) / self.noise_variance


class GammaVarianceChannel(ChannelModel):
    """Scalar channel Y = Z / sqrt(2 X) with Z standard normal and X > 0.

    Given X = x the observation is N(0, 1/(2x)); in exponential-family form
    h(y) = sqrt(1/pi), T(y) = -y^2, phi(x) = -log(sqrt(x)).  The input domain
    is (0, inf); x = 0 degenerates and is rejected.
    """

    input_dim = 1
    output_dim = 1

    LOG_H = -0.5 * math.log(math.pi)

    def contains(self, x):
        arr = _as_float_array(x)
        return np.isfinite(arr) & (arr > 0)

    def log_h(self, y):
        return np.full(np.shape(_as_float_array(y)), self.LOG_H)

    def grad_log_h(self, y):
        return np.zeros(np.shape(_as_float_array(y)))

    def sufficient_stat(self, y):
        arr = _as_float_array(y)
        return -arr * arr

    def jacobian_stat(self, y):
        arr = _as_float_array(y)
        return (-2.0 * arr)[..., None, None]

    def log_partition(self, x):
        x = self._check_domain(x)
        return -0.5 * np.log(x)

    def sample_given_x(self, x, rng, size=None):
        x = self._check_domain(x)
        if size is None:
            z = rng.standard_normal(np.shape(x))
        else:
            if np.ndim(x) != 0:
                raise ValueError("size given, so x must be a single point")
            z = rng.standard_normal(size)
        return z / np.sqrt(2.0 * x)

    def rank_deficient_mask(self, y):
        return _as_float_array(y) == 0.0

    def apply_pinv_jacobian(self, y, v):
        return _as_float_array(v) / (-2.0 * _as_float_array(y))

    def hessian_neg_log_cond(self, x, y, step: float = 1e-4):
        return np.array([[2.0 * float(x)]])


class PriorModel(ABC):
    """Abstract input law P_X with known mean and covariance trace.

    ``log_density`` is optional; discrete or mixed priors raise
    PriorHasNoDensity, which is exactly why density-based baselines like
    Cramer-Rao are unavailable for them.
    """

    dim: int
    mean: Union[float, np.ndarray]
    trace_covariance: float
    has_log_density: bool = False

    @abstractmethod
    def sample(self, rng: np.random.Generator, size: Optional[int] = None):
        """Draw from P_X; size=None gives a single draw."""

    def log_density(self, x):
        raise PriorHasNoDensity(
            f"{type(self).__name__} has no density with respect to Lebesgue measure"
        )


class GaussianPrior(PriorModel):
    """X ~ N(mean, covariance) with a positive-definite covariance."""

    has_log_density = True

    def __init__(self, covariance, mean=None):
        cov = np.atleast_2d(numcore.as_matrix(np.atleast_2d(covariance)))
        lam_min = numcore.smallest_eigenvalue(cov)  # also enforces symmetry
        if lam_min <= 0:
            raise NotPSD(
                f"covariance must be positive definite, smallest eigenvalue {lam_min:.3e}"
            )
        self.covariance = cov
        self.dim = cov.shape[0]
        self._chol = np.linalg.cholesky(cov)
        self._prec = np.linalg.inv(cov)
        sign, logdet = np.linalg.slogdet(cov)
        self._log_norm = -0.5 * (self.dim * math.log(2 * math.pi) + logdet)
        mu = np.zeros(self.dim) if mean is None else _as_float_array(mean).reshape(self.dim)
        self._mu = mu
        self.mean = float(mu[0]) if self.dim == 1 else mu
        self.trace_covariance = float(np.trace(cov))

    def sample(self, rng, size=None):
        if self.dim == 1:
            sd = float(self._chol[0, 0])
            draw = self._mu[0] + sd * rng.standard_normal(size if size is not None else ())
            return float(draw) if size is None else draw
        z = rng.standard_normal((size if size is not None else 1, self.dim))
        x = self._mu + z @ self._chol.T
        return x[0] if size is None else x

    def log_density(self, x):
        arr = _as_float_array(x)
        if self.dim == 1:
            d = arr - self._mu[0]
            return self._log_norm - 0.5 * d * d * self._prec[0, 0]
        d = arr - self._mu
        quad = np.einsum("...i,ij,...j->...", d, self._prec, d)
        return self._log_norm - 0.5 * quad


class BpskPrior(PriorModel):
    """Equiprobable X in {-1, +1} (no Lebesgue density)."""

    dim = 1
    mean = 0.0
    trace_covariance = 1.0

    def sample(self, rng, size=None):
        draw = 2.0 * rng.integers(0, 2, size=size if size is not None else ()) - 1.0
        return float(draw) if size is None else draw.astype(float)


class SparsePrior(PriorModel):
    """Mixture (1 - alpha) * delta_0 + alpha * N(0, 1), 0 < alpha < 1.

    The atom at zero makes the law mixed, so no density is exposed.
    """

    dim = 1
    mean = 0.0

    def __init__(self, alpha: float):
        if not 0.0 < alpha < 1.0:
            raise ValueError(f"alpha must be in (0, 1), got {alpha}")
        self.alpha = float(alpha)
        self.trace_covariance = float(alpha)

    def sample(self, rng, size=None):
        n = size if size is not None else 1
        gate = rng.random(n) < self.alpha
        z = rng.standard_normal(n)
        x = np.where(gate, z, 0.0)
        return float(x[0]) if size is None else x


class GammaPrior(PriorModel):
    """X ~ Gamma(shape alpha, rate beta) on (0, inf)."""

    dim = 1
    has_log_density = True

    def __init__(self, alpha: float, beta: float):
        if not (alpha > 0 and beta > 0):
            raise ValueError(f"alpha and beta must be > 0, got ({alpha}, {beta})")
        self.alpha = float(alpha)
        self.beta = float(beta)
        self.mean = self.alpha / self.beta
        self.trace_covariance = self.alpha / self.beta**2

    def sample(self, rng, size=None):
        draw = rng.gamma(shape=self.alpha, scale=1.0 / self.beta, size=size)
        return float(draw) if size is None else draw

    def log_density(self, x):
        arr = _as_float_array(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = (
                self.alpha * math.log(self.beta)
                - gammaln(self.alpha)
                + (self.alpha - 1.0) * np.log(arr)
                - self.beta * arr
            )
        return np.where(arr > 0, val, -np.inf)


class PointMassPrior(PriorModel):
    """Deterministic input: all mass at a single point.

    Useful as a degenerate reference model: the marginal equals the
    conditional at the point, the information density vanishes identically,
    and every MMSE route returns zero.
    """

    def __init__(self, point):
        arr = _as_float_array(point)
        if arr.ndim == 0:
            self.dim = 1
            self.mean = float(arr)
        elif arr.ndim == 1:
            self.dim = arr.shape[0]
            self.mean = float(arr[0]) if self.dim == 1 else arr.copy()
        else:
            raise ValueError("point must be a scalar or a 1-d vector")
        self._point = self.mean
        self.trace_covariance = 0.0

    @property
    def point(self):
        return self._point

    def sample(self, rng, size=None):
        if size is None:
            return self._point if self.dim > 1 else float(self._point)
        if self.dim == 1:
            return np.full(size, float(self._point))
        return np.broadcast_to(self._point, (size, self.dim)).copy()


@dataclass(frozen=True)
class ClosedForm:
    """Evaluate the marginal of Y analytically (available per model pair)."""


@dataclass(frozen=True)
class MonteCarlo:
    """Evaluate the marginal of Y by log-mean-exp over prior samples.

    The sample set is drawn once from ``seed`` and reused, so repeated
    evaluations are deterministic.
    """

    n_marginal: int
    seed: int


@dataclass(frozen=True)
class JointModel:
    """Prior plus channel plus a declared marginal-evaluation strategy."""

    prior: PriorModel
    channel: ChannelModel
    marginal_strategy: Union[ClosedForm, MonteCarlo] = field(default_factory=ClosedForm)

    def __post_init__(self):
        if self.prior.dim != self.channel.input_dim:
            raise ValueError(
                f"prior dim {self.prior.dim} does not match channel input dim "
                f"{self.channel.input_dim}"
            )


def sample_joint(joint: JointModel, rng: np.random.Generator, size: Optional[int] = None):
    """Draw (X, Y) from the joint law; X first, then Y | X, in fixed order."""
    x = joint.prior.sample(rng, size)
    y = joint.channel.sample_given_x(x, rng)
    return x, y


def prior_moments(prior: PriorModel):
    """Declared (mean, trace of covariance) of a prior."""
    return prior.mean, prior.trace_covariance


# Six-dimensional covariance used by the Gaussian experiment preset
# (symmetric positive definite, trace 44.43).
GAUSSIAN_EXPERIMENT_COVARIANCE = np.array(
    [
        [5.88, -5.10, 0.72, -3.49, 4.06, 1.08],
        [-5.10, 9.53, 3.095, 3.94, -3.68, -2.11],
        [0.72, 3.095, 9.24, -2.28, -0.59, 1.94],
        [-3.49, 3.94, -2.28, 4.49, -1.38, -1.42],
        [4.06, -3.68, -0.59, -1.38, 13.23, 1.99],
        [1.08, -2.11, 1.94, -1.42, 1.99, 2.06],
    ]
)
GAUSSIAN_EXPERIMENT_COVARIANCE.setflags(write=False)
