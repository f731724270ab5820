"""Poincare-type lower bounds on the MMSE and their ingredients.

The central object is the variance-based lower bound

    mmse(X | Y) >= rho^2 * E[ kappa(X) * Var(iota(X; Y) | X) ]

where ``kappa(x)`` is the Bakry-Emery strong-log-concavity constant of the
conditional law and ``rho`` uniformly lower-bounds the smallest singular
value of the pseudo-inverted sufficient-statistic Jacobian.  On a Gaussian
channel the constants collapse (rho = noise_variance, kappa = 1/noise_variance)
and the bound reduces to ``noise_variance * E[Var(iota | X)]``, which tends
to the input variance in the high-noise limit; ``high_noise_diagnostic``
tables that convergence.

Also here: the Cramer-Rao baseline for differentiable priors on a Gaussian
channel, the quantity the variance bound is designed to outperform for
non-Gaussian or ill-conditioned inputs.

Exact constants are dispatched per built-in channel; grid-based fallbacks
exist for extensibility and are validated against the closed forms.  Grids
are a documented heuristic: the mathematical definitions take the infimum
over the whole observation space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from . import numcore
from .errors import (
    DomainError,
    EmptyGrid,
    NotPSD,
    PriorHasNoDensity,
    RankDeficient,
    RankDeficientEverywhere,
    SoundnessViolation,
    UnsupportedStrategy,
    WrongChannel,
)
from .expfamily import (
    ChannelModel,
    GammaPrior,
    GammaVarianceChannel,
    GaussianChannel,
    GaussianPrior,
    JointModel,
    PriorModel,
)
from .infodensity import MarginalEvaluator
from .numcore import CI_MULTIPLIER, McEstimate, derive_seed, mc_variance

__all__ = [
    "BoundEstimate",
    "BoundReport",
    "HighNoiseRow",
    "bakry_emery_constant",
    "bakry_emery_on_grid",
    "rho",
    "rho_on_grid",
    "cond_info_variance",
    "poincare_lower_bound",
    "poincare_lb_gaussian",
    "cramer_rao_gaussian",
    "gaussian_prior_fisher",
    "prior_fisher_information",
    "high_noise_diagnostic",
]


@dataclass(frozen=True)
class BoundEstimate(McEstimate):
    """McEstimate plus the rho constant used and a trivial-bound flag.

    ``trivial`` marks the rho = 0 case: the bound degenerates to 0, which is
    formally valid but carries no information.
    """

    rho: float = 0.0
    trivial: bool = False


@dataclass(frozen=True)
class BoundReport:
    """One evaluated bound next to its MMSE reference.

    ``mmse_reference`` is either an McEstimate (Monte Carlo reference) or a
    float (closed form, zero standard error).  Construction enforces
    soundness: the bound may not exceed the reference by more than
    CI_MULTIPLIER combined standard errors.
    """

    poincare_lb: McEstimate
    rho: float
    kappa_summary: str
    mmse_reference: Union[McEstimate, float]
    variance_target: float
    cramer_rao: Optional[float] = None

    @property
    def mmse_value(self) -> float:
        ref = self.mmse_reference
        return ref.value if isinstance(ref, McEstimate) else float(ref)

    @property
    def mmse_std_error(self) -> float:
        ref = self.mmse_reference
        return ref.std_error if isinstance(ref, McEstimate) else 0.0

    def __post_init__(self):
        if self.poincare_lb.value < 0:
            raise ValueError(
                f"a variance-based bound cannot be negative: {self.poincare_lb.value}"
            )
        slack = CI_MULTIPLIER * (self.poincare_lb.std_error + self.mmse_std_error)
        if self.poincare_lb.value > self.mmse_value + slack:
            raise SoundnessViolation(
                f"lower bound {self.poincare_lb.value:.6g} exceeds MMSE reference "
                f"{self.mmse_value:.6g} by more than {slack:.3g}"
            )


def bakry_emery_constant(channel: ChannelModel, x, y_grid=None) -> float:
    """Strong-log-concavity constant kappa(x) of the conditional law:

    the largest kappa with ``Hess_y(-log f(y|x)) >= kappa I`` for all y,
    clamped at 0 when no positive constant exists.

    Built-in channels use closed forms (Gaussian: 1/noise_variance for all x;
    gamma-variance: 2x); other channels take the minimum of the smallest
    Hessian eigenvalue over ``y_grid``.
    """
    if isinstance(channel, GaussianChannel):
        return 1.0 / channel.noise_variance
    if isinstance(channel, GammaVarianceChannel):
        xf = float(x)
        if not xf > 0:
            raise DomainError(f"gamma-variance channel needs x > 0, got {xf}")
        return 2.0 * xf
    return bakry_emery_on_grid(channel, x, y_grid)


def bakry_emery_on_grid(channel: ChannelModel, x, y_grid) -> float:
    """Grid evaluation of the Bakry-Emery constant (see bakry_emery_constant).

    ``y_grid`` holds probe points: shape (m,) for scalar channels, (m, k)
    otherwise.  The result is ``max(0, min over the grid of the smallest
    eigenvalue of Hess_y(-log f(y|x)))``; a clamp to 0 means the conditional
    log-density is not strongly concave on the grid.
    """
    if y_grid is None:
        raise EmptyGrid("a y grid is required for the generic channel path")
    grid = np.atleast_1d(np.asarray(y_grid, dtype=float))
    if grid.size == 0:
        raise EmptyGrid("y_grid is empty")
    smallest = math.inf
    for row in grid:
        y = float(row) if channel.output_dim == 1 else row
        hess = channel.hessian_neg_log_cond(x, y)
        smallest = min(smallest, numcore.smallest_eigenvalue(hess))
    return max(0.0, smallest)


def rho(channel: ChannelModel, y_grid=None) -> float:
    """Uniform lower bound on the smallest singular value of (J_y T(y))^+.

    Built-in channels use analytic infima: a Gaussian channel has constant
    Jacobian I/noise_variance, so rho = noise_variance; the gamma-variance
    channel has (J^+)(y) = -1/(2y), whose singular value 1/(2|y|) decays to 0
    over the unbounded observation space, so rho = 0 (the bound collapses to
    the trivial 0).  Other channels take the infimum over ``y_grid``.
    """
    if isinstance(channel, GaussianChannel):
        return channel.noise_variance
    if isinstance(channel, GammaVarianceChannel):
        return 0.0
    return rho_on_grid(channel, y_grid)


def rho_on_grid(channel: ChannelModel, y_grid) -> float:
    """Grid infimum of the smallest singular value of (J_y T(y))^+.

    Rank-deficient probe points (full column rank fails) are skipped; if all
    points are deficient the channel violates the almost-sure rank assumption
    and RankDeficientEverywhere is raised.
    """
    if y_grid is None:
        raise EmptyGrid("a y grid is required for the generic channel path")
    grid = np.atleast_1d(np.asarray(y_grid, dtype=float))
    if grid.size == 0:
        raise EmptyGrid("y_grid is empty")
    best = math.inf
    valid = 0
    for row in grid:
        y = float(row) if channel.output_dim == 1 else row
        jac = channel.jacobian_stat(y)
        jac = jac.reshape(jac.shape[-2:])
        try:
            pinv = numcore.left_pseudo_inverse(jac)
        except RankDeficient:
            continue
        valid += 1
        best = min(best, numcore.smallest_singular_value(pinv))
    if valid == 0:
        raise RankDeficientEverywhere(
            "J_y T(y) lost full column rank at every grid point"
        )
    return best


def cond_info_variance(
    joint: JointModel, x, n_inner: int, seed: int, workers: int = 1
) -> McEstimate:
    """Conditional information variance Var(iota(X; Y) | X = x).

    Unbiased sample variance of the information density over ``n_inner``
    draws of Y given X = x, with a moment-based standard error.
    """
    evaluator = MarginalEvaluator(joint)
    channel = joint.channel

    def values(ys):
        return np.asarray(
            channel.log_cond_pdf(x, ys) - evaluator.log_pdf(ys), dtype=float
        )

    def sampler(rng, m):
        return channel.sample_given_x(x, rng, size=m)

    return mc_variance(values, sampler, n_inner, seed, workers)


def poincare_lower_bound(
    joint: JointModel,
    y_grid=None,
    n_outer: int = 2000,
    n_inner: int = 2000,
    seed: int = 0,
) -> BoundEstimate:
    """General variance-based MMSE lower bound:

    ``rho^2 * mean over prior draws of kappa(X) Var(iota(X;Y) | X)``.

    When rho = 0 the bound is trivially 0; the estimate is returned
    immediately with ``trivial=True`` instead of raising, since the bound
    statement stays formally true.
    """
    r = rho(joint.channel, y_grid)
    if r == 0.0:
        return BoundEstimate(0.0, 0.0, max(n_outer, 2), seed, rho=0.0, trivial=True)
    rng_outer = np.random.default_rng(derive_seed(seed, 0))
    xs = joint.prior.sample(rng_outer, n_outer)
    weighted = np.empty(n_outer)
    for i in range(n_outer):
        x = xs[i]
        kappa = bakry_emery_constant(joint.channel, x, y_grid)
        inner = cond_info_variance(joint, x, n_inner, derive_seed(seed, 1, i))
        weighted[i] = kappa * inner.value
    value = r * r * float(np.mean(weighted))
    se = r * r * float(np.std(weighted, ddof=1) / math.sqrt(n_outer))
    return BoundEstimate(value, se, n_outer, seed, rho=r, trivial=False)


def poincare_lb_gaussian(
    joint: JointModel,
    n_outer: int = 2000,
    n_inner: int = 2000,
    seed: int = 0,
    workers: int = 1,
) -> BoundEstimate:
    """Gaussian-channel specialization of the variance bound:

    ``noise_variance * mean over prior draws of Var(iota(X;Y) | X)``.

    Fully vectorized over (outer, inner) sample blocks; follows the
    determinism contract with ``workers`` outer chunks.
    """
    channel = joint.channel
    if not isinstance(channel, GaussianChannel):
        raise WrongChannel(
            f"poincare_lb_gaussian needs a GaussianChannel, got {type(channel).__name__}"
        )
    evaluator = MarginalEvaluator(joint)
    if not evaluator.has_closed_form:
        raise UnsupportedStrategy("poincare_lb_gaussian needs a ClosedForm marginal")
    if n_outer < 2 or n_inner < 2:
        raise ValueError("need n_outer >= 2 and n_inner >= 2")
    s2 = channel.noise_variance
    sd = math.sqrt(s2)
    k = channel.output_dim
    block = max(1, 2_000_000 // (n_inner * k))
    sizes = numcore._chunk_sizes(n_outer, workers)
    rngs = numcore._child_rngs(seed, workers)
    sum_w = 0.0
    sum_w_sq = 0.0
    for rng, size in zip(rngs, sizes):
        done = 0
        while done < size:
            b = min(block, size - done)
            x = joint.prior.sample(rng, b)
            if k == 1:
                z = rng.standard_normal((b, n_inner))
                y = np.asarray(x)[:, None] + sd * z
                lc = channel.log_cond_pdf(np.asarray(x)[:, None], y)
            else:
                z = rng.standard_normal((b, n_inner, k))
                y = np.asarray(x)[:, None, :] + sd * z
                lc = channel.log_cond_pdf(np.asarray(x)[:, None, :], y)
            iota = lc - evaluator.log_pdf(y)
            v = np.var(iota, axis=1, ddof=1)
            sum_w += float(v.sum())
            sum_w_sq += float(np.square(v).sum())
            done += b
    mean_w = sum_w / n_outer
    var_w = max(0.0, (sum_w_sq - n_outer * mean_w * mean_w) / (n_outer - 1))
    return BoundEstimate(
        s2 * mean_w,
        s2 * math.sqrt(var_w / n_outer),
        n_outer,
        seed,
        rho=s2,
        trivial=False,
    )


def cramer_rao_gaussian(fisher_info: float, k: int, noise_variance: float) -> float:
    """Cramer-Rao MMSE lower bound on a k-dimensional Gaussian channel:

    ``k^2 / (k / noise_variance + fisher_info)``

    with ``fisher_info`` the Fisher information of the prior density.
    """
    if not fisher_info > 0:
        raise ValueError(f"fisher_info must be > 0, got {fisher_info}")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if not noise_variance > 0:
        raise ValueError(f"noise_variance must be > 0, got {noise_variance}")
    return k * k / (k / noise_variance + fisher_info)


def gaussian_prior_fisher(covariance) -> float:
    """Fisher information of a Gaussian prior: trace of the inverse covariance."""
    cov = numcore.as_matrix(covariance)
    lam_min = numcore.smallest_eigenvalue(cov)
    if lam_min <= 0:
        raise NotPSD(
            f"covariance must be positive definite, smallest eigenvalue {lam_min:.3e}"
        )
    return float(np.trace(np.linalg.inv(cov)))


def prior_fisher_information(prior: PriorModel) -> float:
    """Fisher information of a built-in prior's density.

    Discrete or mixed priors (BPSK, sparse, point mass) have no density, so
    density-based baselines do not apply to them; that is raised explicitly.
    """
    if isinstance(prior, GaussianPrior):
        return gaussian_prior_fisher(prior.covariance)
    if isinstance(prior, GammaPrior):
        if prior.alpha <= 2:
            raise DomainError(
                "gamma prior Fisher information is finite only for alpha > 2"
            )
        return prior.beta**2 / (prior.alpha - 2.0)
    raise PriorHasNoDensity(
        f"{type(prior).__name__} has no Lebesgue density; "
        "density-based lower bounds do not hold for it"
    )


@dataclass(frozen=True)
class HighNoiseRow:
    """One noise level of the high-noise tightness diagnostic."""

    noise_variance: float
    lower_bound: BoundEstimate
    variance_target: float
    ratio: float


def high_noise_diagnostic(
    joint: JointModel,
    sigma_grid: Sequence[float],
    n: int,
    seed: int,
) -> list[HighNoiseRow]:
    """Tightness of the Gaussian-channel bound as noise grows.

    For each noise variance in ``sigma_grid``, evaluates the Gaussian bound
    with n outer and n inner samples and reports its ratio to the prior's
    covariance trace (the high-noise limit of both the bound and the MMSE
    for sub-Gaussian inputs, which all built-in priors are).  A degenerate
    prior has target 0 and bound 0; its ratio is defined as 1.
    """
    channel = joint.channel
    if not isinstance(channel, GaussianChannel):
        raise WrongChannel(
            f"high_noise_diagnostic needs a GaussianChannel, got {type(channel).__name__}"
        )
    target = joint.prior.trace_covariance
    rows = []
    for i, s2 in enumerate(sigma_grid):
        scaled = JointModel(
            joint.prior,
            GaussianChannel(float(s2), dim=channel.output_dim),
            joint.marginal_strategy,
        )
        lb = poincare_lb_gaussian(scaled, n_outer=n, n_inner=n, seed=derive_seed(seed, i))
        ratio = lb.value / target if target > 0 else 1.0
        rows.append(HighNoiseRow(float(s2), lb, target, ratio))
    return rows
