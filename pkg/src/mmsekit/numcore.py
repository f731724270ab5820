"""Deterministic numerics: seeded Monte Carlo estimators, small dense linear
algebra, and adaptive one-dimensional quadrature.

Matrices are plain two-dimensional numpy float arrays (row-major); helpers
validate shape and finiteness at the boundary.  Monte Carlo estimators follow
a strict determinism contract: the same ``(seed, n, workers)`` triple always
reproduces the same estimate bit for bit.  The sample budget is split into
``workers`` chunks, each chunk draws from its own child stream spawned from
``numpy.random.SeedSequence(seed)``, and chunks are reduced in a fixed order,
so the chunk count is part of the contract (results for different ``workers``
values are equally valid but not identical).

Samplers and integrands are batched: ``sampler(rng, size)`` returns a batch
holding ``size`` draws (an array with leading axis ``size``, or any object
``f`` understands), and ``f(batch)`` returns the ``size`` integrand values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

from .errors import (
    NonFiniteSample,
    NotSymmetric,
    RankDeficient,
    ToleranceNotMet,
)

__all__ = [
    "RANK_TOLERANCE",
    "CI_MULTIPLIER",
    "McEstimate",
    "as_matrix",
    "left_pseudo_inverse",
    "smallest_singular_value",
    "smallest_eigenvalue",
    "derive_seed",
    "mc_mean",
    "mc_variance",
    "integrate_1d",
]

# Relative rank threshold: sigma_min <= RANK_TOLERANCE * sigma_max is deficient.
RANK_TOLERANCE = 1e-10

# Multiplier applied to standard errors in every bound-vs-reference assertion.
CI_MULTIPLIER = 3.0


@dataclass(frozen=True)
class McEstimate:
    """A seeded Monte Carlo estimate.

    Attributes
    ----------
    value : float
        The sample estimate.
    std_error : float
        Standard error of ``value`` (sample standard deviation of the
        underlying per-draw statistic divided by ``sqrt(n_samples)``).
    n_samples : int
        Number of draws, at least 2.
    seed : int
        Seed that reproduces the estimate under the determinism contract.
    """

    value: float
    std_error: float
    n_samples: int
    seed: int

    def __post_init__(self) -> None:
        if not math.isfinite(self.value):
            raise NonFiniteSample(f"estimate value is not finite: {self.value}")
        if not (self.std_error >= 0.0):
            raise ValueError(f"std_error must be >= 0, got {self.std_error}")
        if self.n_samples < 2:
            raise ValueError(f"n_samples must be >= 2, got {self.n_samples}")


def as_matrix(a) -> np.ndarray:
    """Validate and return ``a`` as a 2-d float array with finite entries."""
    m = np.asarray(a, dtype=float)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got ndim={m.ndim}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix entries must be finite")
    return m


def left_pseudo_inverse(a) -> np.ndarray:
    """Left pseudo-inverse ``(A^T A)^{-1} A^T`` of a full-column-rank matrix.

    Parameters
    ----------
    a : (m, n) array_like, m >= n
        Matrix with full column rank.

    Returns
    -------
    (n, m) ndarray such that ``result @ a`` is the identity.

    Raises
    ------
    RankDeficient
        If the smallest singular value is at or below
        ``RANK_TOLERANCE * sigma_max``.
    """
    m = as_matrix(a)
    rows, cols = m.shape
    if cols > rows:
        raise ValueError(f"need cols <= rows for a left inverse, got {m.shape}")
    sv = np.linalg.svd(m, compute_uv=False)
    if sv[-1] <= RANK_TOLERANCE * sv[0]:
        raise RankDeficient(
            f"smallest singular value {sv[-1]:.3e} is within rank tolerance "
            f"of zero (sigma_max={sv[0]:.3e})"
        )
    gram = m.T @ m
    return np.linalg.solve(gram, m.T)


def smallest_singular_value(a) -> float:
    """Smallest singular value of a matrix (always >= 0)."""
    m = as_matrix(a)
    sv = np.linalg.svd(m, compute_uv=False)
    return float(sv[-1])


def smallest_eigenvalue(a, sym_tol: float = 1e-12) -> float:
    """Smallest eigenvalue of a symmetric matrix.

    Raises
    ------
    NotSymmetric
        If ``|a - a.T|`` exceeds ``sym_tol`` anywhere.
    """
    m = as_matrix(a)
    if m.shape[0] != m.shape[1]:
        raise NotSymmetric(f"matrix is not square: {m.shape}")
    asym = float(np.max(np.abs(m - m.T))) if m.size else 0.0
    if asym > sym_tol:
        raise NotSymmetric(f"max |A - A^T| = {asym:.3e} exceeds {sym_tol:.0e}")
    return float(np.linalg.eigvalsh(m)[0])


def derive_seed(master: int, *path: int) -> int:
    """Derive a child seed from a master seed and an integer path.

    Collision-resistant (SeedSequence spawn keys), deterministic, and stable
    across processes; used to give every sub-estimate of a larger run its own
    recorded seed.
    """
    ss = np.random.SeedSequence(master, spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1, np.uint64)[0])


def _chunk_sizes(n: int, workers: int) -> list[int]:
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    base, extra = divmod(n, workers)
    return [base + (1 if i < extra else 0) for i in range(workers)]


def _child_rngs(seed: int, workers: int) -> list[np.random.Generator]:
    children = np.random.SeedSequence(seed).spawn(workers)
    return [np.random.default_rng(c) for c in children]


def _chunked_values(f, sampler, n, seed, workers):
    """Yield per-chunk value arrays under the determinism contract."""
    if n < 2:
        raise ValueError(f"need n >= 2 samples, got {n}")
    sizes = _chunk_sizes(n, workers)
    rngs = _child_rngs(seed, workers)
    for rng, size in zip(rngs, sizes):
        if size == 0:
            continue
        batch = sampler(rng, size)
        vals = np.asarray(f(batch), dtype=float)
        if vals.shape != (size,):
            raise ValueError(
                f"integrand returned shape {vals.shape}, expected ({size},)"
            )
        if not np.all(np.isfinite(vals)):
            bad = int(np.count_nonzero(~np.isfinite(vals)))
            raise NonFiniteSample(f"integrand produced {bad} non-finite values")
        yield vals


def mc_mean(
    f: Callable,
    sampler: Callable,
    n: int,
    seed: int,
    workers: int = 1,
) -> McEstimate:
    """Monte Carlo sample mean of ``f`` over ``n`` draws from ``sampler``.

    Parameters
    ----------
    f : callable
        Maps a batch (as produced by ``sampler``) to the per-draw values,
        shape ``(size,)``.
    sampler : callable
        ``sampler(rng, size)`` draws a batch of ``size`` samples.
    n : int
        Total draws, >= 2.
    seed, workers :
        Determinism contract; see the module docstring.

    Raises
    ------
    NonFiniteSample
        If ``f`` produces NaN or infinity.
    """
    total = 0.0
    total_sq = 0.0
    for vals in _chunked_values(f, sampler, n, seed, workers):
        total += float(vals.sum())
        total_sq += float(np.square(vals).sum())
    mean = total / n
    var = max(0.0, (total_sq - n * mean * mean) / (n - 1))
    return McEstimate(mean, math.sqrt(var / n), n, seed)


def mc_variance(
    f: Callable,
    sampler: Callable,
    n: int,
    seed: int,
    workers: int = 1,
) -> McEstimate:
    """Unbiased (n-1 denominator) sample variance of ``f`` with a moment-based
    standard error.

    The standard error uses the asymptotic variance of the sample variance,
    ``Var(S^2) = m4/n - S^4 (n-3)/(n(n-1))`` with ``m4`` the central fourth
    moment; power sums are accumulated around a shift (the first drawn value)
    for numerical stability.
    """
    count = 0
    shift = None
    s1 = s2 = s3 = s4 = 0.0
    for vals in _chunked_values(f, sampler, n, seed, workers):
        if shift is None:
            shift = float(vals[0])
        d = vals - shift
        count += vals.size
        s1 += float(d.sum())
        s2 += float((d**2).sum())
        s3 += float((d**3).sum())
        s4 += float((d**4).sum())
    mean_c = s1 / n
    sample_var = max(0.0, (s2 - n * mean_c * mean_c) / (n - 1))
    m4 = s4 / n - 4 * mean_c * (s3 / n) + 6 * mean_c**2 * (s2 / n) - 3 * mean_c**4
    var_of_var = m4 / n - sample_var**2 * (n - 3) / (n * (n - 1))
    return McEstimate(sample_var, math.sqrt(max(0.0, var_of_var)), n, seed)


def integrate_1d(
    f: Callable[[float], float],
    lower: float,
    upper: float,
    abs_tol: float = 1e-10,
    rel_tol: float = 1e-10,
) -> float:
    """Adaptive quadrature of ``f`` on ``(lower, upper)``.

    Delegates to QUADPACK (scipy.integrate.quad).  Infinite endpoints are
    supported through QUADPACK's built-in variable change (the semi-infinite
    and doubly infinite ranges are mapped onto (0, 1] before adaptive
    subdivision), so integrands only ever see finite abscissae.

    Raises
    ------
    ToleranceNotMet
        If the reported error estimate exceeds
        ``max(abs_tol, rel_tol * |result|)`` or QUADPACK flags non-convergence.
    """
    out = integrate.quad(
        f, lower, upper, epsabs=abs_tol, epsrel=rel_tol, limit=200, full_output=1
    )
    value, abserr = float(out[0]), float(out[1])
    converged = len(out) == 3
    if not converged or abserr > max(abs_tol, rel_tol * abs(value)):
        raise ToleranceNotMet(
            f"quadrature error {abserr:.3e} exceeds tolerance "
            f"(abs_tol={abs_tol:.1e}, rel_tol={rel_tol:.1e})"
        )
    return value
