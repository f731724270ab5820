"""Marginal density of Y, information density, its y-gradient, and
conditional-mean routes.

The information density of a joint model is

    iota(x; y) = log f(y | x) - log f_Y(y),

the log Radon-Nikodym derivative of the conditional law against the
marginal.  Everything here works in the log domain; densities are never
exponentiated before subtraction.

The marginal f_Y is served by a ``MarginalEvaluator`` with one of two
strategies declared on the joint model:

* ``ClosedForm``: analytic marginal, available exactly for the pairs
  (GaussianPrior, GaussianChannel), (BpskPrior, GaussianChannel),
  (SparsePrior, GaussianChannel), (GammaPrior, GammaVarianceChannel),
  and (PointMassPrior, any channel), where the marginal is the conditional
  at the point.  Gradients of the marginal use analytic derivatives of the
  closed forms; finite differences stay test-side.
* ``MonteCarlo(n_marginal, seed)``: log-mean-exp of the conditional
  log-density over a fixed, seeded set of prior samples.  Gradient-based
  operations are unsupported under this strategy.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from .errors import (
    DegenerateWeights,
    NumericalUnderflow,
    RankDeficient,
    UnsupportedStrategy,
)
from .expfamily import (
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
)
from scipy.special import gammaln

__all__ = [
    "MarginalEvaluator",
    "marginal_log_pdf",
    "info_density",
    "grad_y_info_density",
    "cond_mean_tweedie",
    "cond_mean_importance",
]


class _GaussGaussMarginal:
    """Y ~ N(mu, prior covariance + noise_variance I)."""

    def __init__(self, prior: GaussianPrior, channel: GaussianChannel):
        k = channel.output_dim
        cov = prior.covariance + channel.noise_variance * np.eye(k)
        self._dim = k
        self._mu = np.zeros(k) + np.reshape(prior.mean, -1)
        self._prec = np.linalg.inv(cov)
        sign, logdet = np.linalg.slogdet(cov)
        self._log_norm = -0.5 * (k * math.log(2 * math.pi) + logdet)

    def log_pdf(self, y):
        arr = np.asarray(y, dtype=float)
        if self._dim == 1:
            d = arr - self._mu[0]
            return self._log_norm - 0.5 * d * d * self._prec[0, 0]
        d = arr - self._mu
        quad = np.einsum("...i,ij,...j->...", d, self._prec, d)
        return self._log_norm - 0.5 * quad

    def grad_log_pdf(self, y):
        arr = np.asarray(y, dtype=float)
        if self._dim == 1:
            return -(arr - self._mu[0]) * self._prec[0, 0]
        return -np.einsum("ij,...j->...i", self._prec, arr - self._mu)


class _BpskGaussMarginal:
    """Two-component Gaussian mixture at means -1 and +1."""

    def __init__(self, channel: GaussianChannel):
        if channel.output_dim != 1:
            raise UnsupportedStrategy("BPSK prior is scalar; channel must be 1-d")
        self._s2 = channel.noise_variance
        self._log_norm = -0.5 * math.log(2 * math.pi * self._s2)

    def log_pdf(self, y):
        arr = np.asarray(y, dtype=float)
        lp_plus = self._log_norm - (arr - 1.0) ** 2 / (2 * self._s2)
        lp_minus = self._log_norm - (arr + 1.0) ** 2 / (2 * self._s2)
        return np.logaddexp(lp_plus, lp_minus) + math.log(0.5)

    def grad_log_pdf(self, y):
        arr = np.asarray(y, dtype=float)
        return -(arr - np.tanh(arr / self._s2)) / self._s2


class _SparseGaussMarginal:
    """Mixture (1 - alpha) N(0, s2) + alpha N(0, 1 + s2)."""

    def __init__(self, prior: SparsePrior, channel: GaussianChannel):
        if channel.output_dim != 1:
            raise UnsupportedStrategy("sparse prior is scalar; channel must be 1-d")
        self._s2 = channel.noise_variance
        self._v0 = self._s2
        self._v1 = 1.0 + self._s2
        self._lw0 = math.log1p(-prior.alpha)
        self._lw1 = math.log(prior.alpha)

    def _component_logs(self, arr):
        l0 = self._lw0 - 0.5 * math.log(2 * math.pi * self._v0) - arr**2 / (2 * self._v0)
        l1 = self._lw1 - 0.5 * math.log(2 * math.pi * self._v1) - arr**2 / (2 * self._v1)
        return l0, l1

    def log_pdf(self, y):
        l0, l1 = self._component_logs(np.asarray(y, dtype=float))
        return np.logaddexp(l0, l1)

    def grad_log_pdf(self, y):
        arr = np.asarray(y, dtype=float)
        l0, l1 = self._component_logs(arr)
        tot = np.logaddexp(l0, l1)
        w0 = np.exp(l0 - tot)
        w1 = np.exp(l1 - tot)
        return -arr * (w0 / self._v0 + w1 / self._v1)


class _GammaGammaVarianceMarginal:
    """Student-type marginal sqrt(1/pi) beta^a Gamma(a+1/2)/Gamma(a) (y^2+beta)^-(a+1/2)."""

    def __init__(self, prior: GammaPrior):
        a, b = prior.alpha, prior.beta
        self._a = a
        self._b = b
        self._log_norm = (
            -0.5 * math.log(math.pi)
            + a * math.log(b)
            + gammaln(a + 0.5)
            - gammaln(a)
        )

    def log_pdf(self, y):
        arr = np.asarray(y, dtype=float)
        return self._log_norm - (self._a + 0.5) * np.log(arr**2 + self._b)

    def grad_log_pdf(self, y):
        arr = np.asarray(y, dtype=float)
        return -(2 * self._a + 1.0) * arr / (arr**2 + self._b)


class _PointMassMarginal:
    """Marginal equals the conditional at the prior's single support point."""

    def __init__(self, prior: PointMassPrior, channel):
        self._point = prior.point
        self._channel = channel

    def log_pdf(self, y):
        return self._channel.log_cond_pdf(self._point, y)

    def grad_log_pdf(self, y):
        return self._channel.grad_y_log_cond(self._point, y)


_CLOSED_FORM_TABLE = {
    (GaussianPrior, GaussianChannel): lambda p, c: _GaussGaussMarginal(p, c),
    (BpskPrior, GaussianChannel): lambda p, c: _BpskGaussMarginal(c),
    (SparsePrior, GaussianChannel): lambda p, c: _SparseGaussMarginal(p, c),
    (GammaPrior, GammaVarianceChannel): lambda p, c: _GammaGammaVarianceMarginal(p),
}


class _MonteCarloMarginal:
    """log-mean-exp of the conditional log-density over fixed prior samples."""

    _BLOCK_BUDGET = 4_000_000  # max conditional-density evaluations per block

    def __init__(self, joint: JointModel, n_marginal: int, seed: int):
        if n_marginal < 2:
            raise ValueError(f"n_marginal must be >= 2, got {n_marginal}")
        self._channel = joint.channel
        rng = np.random.default_rng(seed)
        self._xs = joint.prior.sample(rng, n_marginal)
        self._n = n_marginal

    def _log_pdf_block(self, y_block):
        ch = self._channel
        if ch.output_dim == 1:
            lc = ch.log_cond_pdf(self._xs, np.asarray(y_block, dtype=float)[..., None])
        else:
            lc = ch.log_cond_pdf(self._xs, np.asarray(y_block, dtype=float)[..., None, :])
        peak = np.max(lc, axis=-1)
        if not np.all(np.isfinite(peak)):
            raise NumericalUnderflow(
                "all sampled conditional densities underflowed at a probe point"
            )
        logf = logsumexp(lc, axis=-1) - math.log(self._n)
        # delta-method standard error of log f: std(w) / (sqrt(n) mean(w))
        w = np.exp(lc - peak[..., None])
        se = np.std(w, axis=-1, ddof=1) / (np.sqrt(self._n) * np.mean(w, axis=-1))
        return logf, se

    def _map_blocks(self, y):
        ch = self._channel
        arr = np.asarray(y, dtype=float)
        if ch.output_dim == 1:
            batch = arr.shape
            flat = arr.reshape(-1)
        else:
            batch = arr.shape[:-1]
            flat = arr.reshape(-1, ch.output_dim)
        block = max(1, self._BLOCK_BUDGET // self._n)
        outs, errs = [], []
        for i in range(0, flat.shape[0], block):
            lf, se = self._log_pdf_block(flat[i : i + block])
            outs.append(lf)
            errs.append(se)
        logf = np.concatenate(outs).reshape(batch) if batch else np.concatenate(outs)[0]
        se = np.concatenate(errs).reshape(batch) if batch else np.concatenate(errs)[0]
        return logf, se

    def log_pdf(self, y):
        return self._map_blocks(y)[0]

    def log_pdf_with_error(self, y):
        return self._map_blocks(y)

    def grad_log_pdf(self, y):
        raise UnsupportedStrategy(
            "gradients of Monte Carlo marginals are not supported; "
            "use a ClosedForm strategy"
        )


class MarginalEvaluator:
    """Marginal density of Y for a joint model, under its declared strategy.

    Construction validates strategy availability: ClosedForm requires the
    model pair to be in the analytic table (see module docstring).
    """

    def __init__(self, joint: JointModel):
        self.joint = joint
        strategy = joint.marginal_strategy
        if isinstance(strategy, ClosedForm):
            if isinstance(joint.prior, PointMassPrior):
                self._impl = _PointMassMarginal(joint.prior, joint.channel)
            else:
                key = (type(joint.prior), type(joint.channel))
                factory = _CLOSED_FORM_TABLE.get(key)
                if factory is None:
                    # Subclasses inherit the marginal of their base family;
                    # the marginal is a property of the model pair, not of
                    # overridden sampling or partition details.
                    for (ptype, ctype), cand in _CLOSED_FORM_TABLE.items():
                        if isinstance(joint.prior, ptype) and isinstance(
                            joint.channel, ctype
                        ):
                            factory = cand
                            break
                if factory is None:
                    raise UnsupportedStrategy(
                        f"no closed-form marginal for {key[0].__name__} + {key[1].__name__}; "
                        "declare a MonteCarlo strategy"
                    )
                self._impl = factory(joint.prior, joint.channel)
            self.has_closed_form = True
        elif isinstance(strategy, MonteCarlo):
            self._impl = _MonteCarloMarginal(joint, strategy.n_marginal, strategy.seed)
            self.has_closed_form = False
        else:
            raise UnsupportedStrategy(f"unknown marginal strategy: {strategy!r}")

    # ----- marginal ----------------------------------------------------------

    def log_pdf(self, y):
        """log f_Y(y), batched."""
        return self._impl.log_pdf(y)

    def log_pdf_with_error(self, y):
        """(log f_Y(y), standard error); the error is 0 under ClosedForm."""
        if self.has_closed_form:
            logf = self._impl.log_pdf(y)
            return logf, np.zeros(np.shape(logf))
        return self._impl.log_pdf_with_error(y)

    def grad_log_pdf(self, y):
        """Gradient of log f_Y in y (ClosedForm strategies only)."""
        return self._impl.grad_log_pdf(y)

    # ----- derived quantities -------------------------------------------------

    def info_density(self, x, y):
        """iota(x; y) = log f(y | x) - log f_Y(y)."""
        return self.joint.channel.log_cond_pdf(x, y) - self.log_pdf(y)

    def grad_info_density(self, x, y):
        """Gradient of iota in y, computed in score-difference form:

        J_y T(y) @ x + grad log h(y) - grad log f_Y(y).
        """
        ch = self.joint.channel
        return ch.grad_y_log_cond(x, y) - self.grad_log_pdf(y)

    def cond_mean_tweedie(self, y):
        """E[X | Y=y] through the sufficient-statistic identity:

        (J_y T(y))^+ @ grad_y log(f_Y(y) / h(y)).
        """
        ch = self.joint.channel
        mask = ch.rank_deficient_mask(y)
        if np.any(mask):
            raise RankDeficient(
                "J_y T(y) loses full column rank at a requested point"
            )
        score_diff = self.grad_log_pdf(y) - ch.grad_log_h(y)
        return ch.apply_pinv_jacobian(y, score_diff)


def marginal_log_pdf(joint: JointModel, y):
    """log f_Y(y) under the joint's declared strategy."""
    return MarginalEvaluator(joint).log_pdf(y)


def info_density(joint: JointModel, x, y):
    """Information density iota(x; y) of the joint model."""
    return MarginalEvaluator(joint).info_density(x, y)


def grad_y_info_density(joint: JointModel, x, y):
    """Gradient of the information density in y (ClosedForm marginals only)."""
    return MarginalEvaluator(joint).grad_info_density(x, y)


def cond_mean_tweedie(joint: JointModel, y):
    """Posterior mean E[X | Y=y] via the sufficient-statistic identity."""
    return MarginalEvaluator(joint).cond_mean_tweedie(y)


def cond_mean_importance(
    joint: JointModel, y, n: int, rng: np.random.Generator
):
    """Self-normalized importance-sampling estimate of E[X | Y=y].

    Draws ``n`` prior samples (n >= 1000) as proposals with conditional-density
    weights.  Raises DegenerateWeights when the effective sample size drops
    below 10.
    """
    if n < 1000:
        raise ValueError(f"need n >= 1000 importance samples, got {n}")
    xs = joint.prior.sample(rng, n)
    lw = joint.channel.log_cond_pdf(xs, y)
    peak = np.max(lw)
    if not np.isfinite(peak):
        raise NumericalUnderflow("all importance weights underflowed")
    w = np.exp(lw - peak)
    total = float(w.sum())
    ess = total * total / float(np.square(w).sum())
    if not ess >= 10.0:
        raise DegenerateWeights(
            f"effective sample size {ess:.2f} is below 10; increase n"
        )
    if joint.prior.dim == 1:
        return float(np.dot(w, xs) / total)
    return (w[:, None] * xs).sum(axis=0) / total
