"""Three independent routes to the MMSE of estimating X from Y.

* ``mmse_classical_mc``: sample mean of ``||X - E[X|Y]||^2`` over joint
  draws, with the posterior mean served by the sufficient-statistic identity
  (closed-form marginals) or by importance sampling (Monte Carlo marginals).
* ``mmse_gradient_mc``: sample mean of
  ``||(J_y T(Y))^+ grad_y iota(X;Y)||^2``, the gradient representation of
  the MMSE through the information density.
* Closed forms for the Gaussian, BPSK, and gamma-variance models.

The two Monte Carlo routes follow the numcore determinism contract
(seed, n, workers).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import numcore
from .errors import NotPSD, RankDeficiencyRateExceeded, UnsupportedStrategy
from .expfamily import JointModel, sample_joint
from .infodensity import MarginalEvaluator, cond_mean_importance
from .numcore import McEstimate, integrate_1d, mc_mean

__all__ = [
    "DEFAULT_SAMPLES",
    "GradientRouteEstimate",
    "GammaExpectations",
    "mmse_classical_mc",
    "mmse_gradient_mc",
    "mmse_gaussian_closed_form",
    "mmse_bpsk",
    "mmse_gamma_closed_form",
    "gamma_expectation_identities",
]

# Default Monte Carlo budget for the MMSE estimators.
DEFAULT_SAMPLES = 500_000

# Resampled fraction above which the full-column-rank a.s. assumption is
# considered violated rather than a floating-point fluke.
_MAX_RANK_DEFICIENCY_RATE = 1e-3


@dataclass(frozen=True)
class GradientRouteEstimate(McEstimate):
    """McEstimate plus the number of rank-deficient draws that were redrawn."""

    n_resampled: int = 0


def _sq_dist(x, m, dim: int) -> np.ndarray:
    d = np.asarray(x, dtype=float) - np.asarray(m, dtype=float)
    if dim == 1:
        return d * d
    return np.sum(d * d, axis=-1)


def mmse_classical_mc(
    joint: JointModel,
    n: int = DEFAULT_SAMPLES,
    seed: int = 0,
    workers: int = 1,
    importance_samples: int = 2000,
) -> McEstimate:
    """Monte Carlo MMSE: mean of ``||X - E[X|Y]||^2`` over n joint draws.

    Closed-form joints evaluate the posterior mean analytically per draw;
    Monte Carlo joints fall back to self-normalized importance sampling with
    ``importance_samples`` proposals per draw (much slower; intended for
    cross-checks at small n).
    """
    evaluator = MarginalEvaluator(joint)
    dim = joint.prior.dim
    if evaluator.has_closed_form:
        def values(batch):
            x, y = batch
            return _sq_dist(x, evaluator.cond_mean_tweedie(y), dim)

        return mc_mean(values, lambda rng, m: sample_joint(joint, rng, m), n, seed, workers)

    def values_importance(batch):
        x, y, rng = batch
        y_arr = np.asarray(y, dtype=float)
        rows = y_arr.shape[0]
        means = np.empty((rows, dim))
        for i in range(rows):
            means[i] = cond_mean_importance(joint, y_arr[i], importance_samples, rng)
        return _sq_dist(x, means[:, 0] if dim == 1 else means, dim)

    def sampler(rng, m):
        x, y = sample_joint(joint, rng, m)
        return x, y, rng

    return mc_mean(values_importance, sampler, n, seed, workers)


def mmse_gradient_mc(
    joint: JointModel,
    n: int = DEFAULT_SAMPLES,
    seed: int = 0,
    workers: int = 1,
) -> GradientRouteEstimate:
    """Monte Carlo MMSE through the information-density gradient:

    mean of ``||(J_y T(Y))^+ grad_y iota(X;Y)||^2`` over n joint draws.

    Draws where ``J_y T`` loses full column rank (floating-point hits of
    measure-zero sets) are redrawn; the count is exposed on the estimate.
    If redraws exceed one per thousand accepted samples, the almost-sure
    full-rank assumption is treated as violated and the run aborts.
    """
    evaluator = MarginalEvaluator(joint)
    if not evaluator.has_closed_form:
        raise UnsupportedStrategy(
            "the gradient route needs a ClosedForm marginal (no Monte Carlo gradients)"
        )
    channel = joint.channel
    dim = joint.prior.dim
    if n < 2:
        raise ValueError(f"need n >= 2 samples, got {n}")

    sizes = numcore._chunk_sizes(n, workers)
    rngs = numcore._child_rngs(seed, workers)
    total = 0.0
    total_sq = 0.0
    resampled = 0
    for rng, size in zip(rngs, sizes):
        if size == 0:
            continue
        x, y = sample_joint(joint, rng, size)
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        mask = channel.rank_deficient_mask(y)
        while np.any(mask):
            idx = np.flatnonzero(mask)
            resampled += idx.size
            if resampled > _MAX_RANK_DEFICIENCY_RATE * n:
                raise RankDeficiencyRateExceeded(
                    f"{resampled} rank-deficient draws in a budget of {n}; "
                    "J_y T(Y) does not have full column rank almost surely"
                )
            x_new, y_new = sample_joint(joint, rng, idx.size)
            x[idx] = x_new
            y[idx] = y_new
            mask = np.zeros(size, dtype=bool)
            mask[idx] = channel.rank_deficient_mask(y[idx])
        grad = evaluator.grad_info_density(x, y)
        pulled = channel.apply_pinv_jacobian(y, grad)
        if dim == 1:
            vals = np.asarray(pulled, dtype=float) ** 2
        else:
            vals = np.sum(np.asarray(pulled, dtype=float) ** 2, axis=-1)
        total += float(vals.sum())
        total_sq += float(np.square(vals).sum())
    mean = total / n
    var = max(0.0, (total_sq - n * mean * mean) / (n - 1))
    return GradientRouteEstimate(mean, math.sqrt(var / n), n, seed, resampled)


def mmse_gaussian_closed_form(covariance, noise_variance: float) -> float:
    """MMSE for a Gaussian prior on a Gaussian channel:

    ``Tr[Sigma (I + Sigma / noise_variance)^{-1}]``.
    """
    if not noise_variance > 0:
        raise ValueError(f"noise_variance must be > 0, got {noise_variance}")
    cov = numcore.as_matrix(covariance)
    lam_min = numcore.smallest_eigenvalue(cov)
    if lam_min < -1e-10 * max(1.0, float(np.max(np.abs(cov)))):
        raise NotPSD(f"covariance has negative eigenvalue {lam_min:.3e}")
    k = cov.shape[0]
    return float(np.trace(np.linalg.solve(np.eye(k) + cov / noise_variance, cov)))


def mmse_bpsk(noise_variance: float) -> float:
    """MMSE for an equiprobable {-1, +1} input on a scalar Gaussian channel:

    ``1 - integral of phi(y) tanh(1/s2 - y/s) dy`` with s2 the noise variance.

    Evaluated by adaptive quadrature at absolute tolerance 1e-9; the result is
    clipped to [0, 1] (where it provably lies) to absorb roundoff at extreme
    noise levels.
    """
    if not noise_variance > 0:
        raise ValueError(f"noise_variance must be > 0, got {noise_variance}")
    s2 = float(noise_variance)
    s = math.sqrt(s2)
    norm = 1.0 / math.sqrt(2 * math.pi)

    def integrand(y: float) -> float:
        return norm * math.exp(-0.5 * y * y) * math.tanh(1.0 / s2 - y / s)

    val = integrate_1d(integrand, -np.inf, np.inf, abs_tol=1e-9, rel_tol=1e-9)
    return min(1.0, max(0.0, 1.0 - val))


def mmse_gamma_closed_form(alpha: float, beta: float) -> float:
    """MMSE for a Gamma(alpha, beta) prior on the gamma-variance channel:

    ``alpha (alpha + 1) / (beta^2 (alpha + 3/2))``.
    """
    if not (alpha > 0 and beta > 0):
        raise ValueError(f"alpha and beta must be > 0, got ({alpha}, {beta})")
    return alpha * (alpha + 1.0) / (beta**2 * (alpha + 1.5))


@dataclass(frozen=True)
class GammaExpectations:
    """Closed-form expectations of the gamma-variance model.

    mean_x_squared:            E[X^2]
    mean_x_over_y2_plus_beta:  E[X / (Y^2 + beta)]
    mean_inv_y2_plus_beta_sq:  E[1 / (Y^2 + beta)^2]
    """

    mean_x_squared: float
    mean_x_over_y2_plus_beta: float
    mean_inv_y2_plus_beta_sq: float


def gamma_expectation_identities(alpha: float, beta: float) -> GammaExpectations:
    """The three expectations that assemble the gamma-variance MMSE.

    Expanding ``E[(X - E[X|Y])^2]`` with ``E[X|Y] = (alpha + 1/2)/(Y^2 + beta)``
    reduces the MMSE to these three moments, each with a closed form.
    """
    if not (alpha > 0 and beta > 0):
        raise ValueError(f"alpha and beta must be > 0, got ({alpha}, {beta})")
    a, b = float(alpha), float(beta)
    return GammaExpectations(
        mean_x_squared=a * (1.0 + a) / b**2,
        mean_x_over_y2_plus_beta=a * (a + 1.0) / (b**2 * (a + 1.5)),
        mean_inv_y2_plus_beta_sq=a * (a + 1.0) / (b**2 * (a + 0.5) * (a + 1.5)),
    )
