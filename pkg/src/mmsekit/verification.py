"""Cross-checks that the library's independent computation routes agree.

Every quantity with two derivations is checked both ways on the built-in
models: posterior means from the score identity vs importance sampling,
information-density gradients in score-difference vs Jacobian form and vs
finite differences, exact channel constants vs their grid fallbacks,
density normalization through the information density, the two MMSE
sampling routes against each other and against closed forms, and a reduced
soundness sweep of the variance bound.  Each suite returns pass/fail plus a
human-readable detail string; the CLI surfaces them and exits nonzero on
any failure.

Deterministic given the seed.  Budgets are sized so the full run finishes
in well under a minute.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bounds import (
    BoundReport,
    bakry_emery_on_grid,
    poincare_lb_gaussian,
    poincare_lower_bound,
    rho_on_grid,
)
from .expfamily import (
    GAUSSIAN_EXPERIMENT_COVARIANCE,
    BpskPrior,
    GammaPrior,
    GammaVarianceChannel,
    GaussianChannel,
    GaussianPrior,
    JointModel,
    PointMassPrior,
    SparsePrior,
    sample_joint,
)
from .infodensity import MarginalEvaluator, cond_mean_importance
from .mmse import (
    mmse_bpsk,
    mmse_classical_mc,
    mmse_gamma_closed_form,
    mmse_gaussian_closed_form,
    mmse_gradient_mc,
)
from .numcore import derive_seed, integrate_1d

__all__ = [
    "SuiteResult",
    "run_verification",
    "all_passed",
    "format_results",
    "tweedie_importance_zscores",
]

_IDENTITY_TOL = 1e-8
_FD_TOL = 1e-5
_GRID_TOL = 1e-6
_NORM_TOL = 1e-6
_AGREE_MULTIPLIER = 4.0


@dataclass(frozen=True)
class SuiteResult:
    name: str
    passed: bool
    detail: str

    def __post_init__(self):
        # numpy comparison results slip through otherwise
        object.__setattr__(self, "passed", bool(self.passed))


def _scalar_joints() -> list[tuple[str, JointModel]]:
    return [
        ("gauss-scalar", JointModel(GaussianPrior([[2.0]], mean=[0.3]), GaussianChannel(0.7))),
        ("bpsk", JointModel(BpskPrior(), GaussianChannel(1.0))),
        ("sparse", JointModel(SparsePrior(0.4), GaussianChannel(0.8))),
        ("gamma", JointModel(GammaPrior(2.0, 3.0), GammaVarianceChannel())),
    ]


def _vector_joint() -> tuple[str, JointModel]:
    prior = GaussianPrior(GAUSSIAN_EXPERIMENT_COVARIANCE)
    return "gauss-vector", JointModel(prior, GaussianChannel(1.5, dim=6))


def _tweedie_suite(seed: int) -> list[SuiteResult]:
    results = []
    joints = _scalar_joints() + [_vector_joint()]
    joints.append(
        ("point", JointModel(PointMassPrior(0.75), GaussianChannel(0.5)))
    )
    worst = 0.0
    ok = True
    for i, (name, joint) in enumerate(joints):
        rng = np.random.default_rng(derive_seed(seed, 10, i))
        _, ys = sample_joint(joint, rng, 200)
        evaluator = MarginalEvaluator(joint)
        mean = np.asarray(evaluator.cond_mean_tweedie(ys))
        jac = joint.channel.jacobian_stat(ys)
        mean_vec = mean.reshape(mean.shape + (1,)) if joint.prior.dim == 1 else mean
        lhs = np.einsum("...kd,...d->...k", jac, mean_vec)
        rhs = np.asarray(evaluator.grad_log_pdf(ys)) - np.asarray(
            joint.channel.grad_log_h(ys)
        )
        if joint.channel.output_dim == 1:
            rhs = rhs.reshape(lhs.shape)
        gap = float(np.max(np.abs(lhs - rhs)))
        worst = max(worst, gap)
        ok = ok and gap <= _IDENTITY_TOL
    results.append(
        SuiteResult(
            "tweedie-identity",
            ok,
            f"max |J m - (score - grad log h)| = {worst:.2e} over {len(joints)} models"
            f" (tol {_IDENTITY_TOL:.0e})",
        )
    )

    # Importance-sampling cross-check: independent of the closed-form
    # marginals and sensitive to a corrupted log-partition.
    ok = True
    worst_z = 0.0
    for i, (name, joint) in enumerate(_scalar_joints()):
        zs = tweedie_importance_zscores(joint, derive_seed(seed, 11, i))
        worst_z = max(worst_z, float(np.max(zs)))
        ok = ok and np.all(zs <= _AGREE_MULTIPLIER)
    results.append(
        SuiteResult(
            "tweedie-vs-importance",
            ok,
            f"max |tweedie - importance| = {worst_z:.2f} replicate SEs"
            f" (tol {_AGREE_MULTIPLIER})",
        )
    )
    return results


def tweedie_importance_zscores(
    joint: JointModel,
    seed: int,
    n_points: int = 3,
    replicates: int = 8,
    n_importance: int = 4000,
) -> np.ndarray:
    """Z-scores of the sufficient-statistic posterior mean against replicated
    importance-sampling estimates, at marginal draws of Y (scalar joints).

    This is the check that sees inconsistencies between the conditional law
    and the marginal (a corrupted log-partition, say), which the pure score
    identity cancels away.
    """
    rng = np.random.default_rng(derive_seed(seed, 0))
    _, ys = sample_joint(joint, rng, n_points)
    evaluator = MarginalEvaluator(joint)
    zs = np.empty(n_points)
    for j, y in enumerate(np.atleast_1d(ys)):
        y = float(y)
        tweedie = float(np.asarray(evaluator.cond_mean_tweedie(y)))
        draws = [
            float(
                cond_mean_importance(
                    joint, y, n_importance, np.random.default_rng(derive_seed(seed, 1, j, r))
                )
            )
            for r in range(replicates)
        ]
        mean = float(np.mean(draws))
        se = float(np.std(draws, ddof=1) / math.sqrt(replicates)) + 1e-12
        zs[j] = abs(tweedie - mean) / se
    return zs


def _gradient_suite(seed: int) -> list[SuiteResult]:
    joints = _scalar_joints() + [_vector_joint()]
    worst = 0.0
    ok = True
    for i, (name, joint) in enumerate(joints):
        rng = np.random.default_rng(derive_seed(seed, 20, i))
        xs, ys = sample_joint(joint, rng, 200)
        evaluator = MarginalEvaluator(joint)
        grad = np.asarray(evaluator.grad_info_density(xs, ys))
        mean = np.asarray(evaluator.cond_mean_tweedie(ys))
        resid = np.asarray(xs) - mean
        resid_vec = resid.reshape(resid.shape + (1,)) if joint.prior.dim == 1 else resid
        jac = joint.channel.jacobian_stat(ys)
        alt = np.einsum("...kd,...d->...k", jac, resid_vec)
        if joint.channel.output_dim == 1:
            alt = alt.reshape(grad.shape)
        gap = float(np.max(np.abs(grad - alt)))
        worst = max(worst, gap)
        ok = ok and gap <= _IDENTITY_TOL
    return [
        SuiteResult(
            "gradient-two-forms",
            ok,
            f"max |score-difference - J(x - E[X|Y])| = {worst:.2e}"
            f" (tol {_IDENTITY_TOL:.0e})",
        )
    ]


def _fd_gradient_suite(seed: int) -> list[SuiteResult]:
    worst = 0.0
    ok = True
    joints = _scalar_joints() + [_vector_joint()]
    for i, (name, joint) in enumerate(joints):
        rng = np.random.default_rng(derive_seed(seed, 30, i))
        xs, ys = sample_joint(joint, rng, 10)
        evaluator = MarginalEvaluator(joint)
        k = joint.channel.output_dim
        for j in range(10):
            x = xs[j]
            y = np.atleast_1d(np.asarray(ys[j], dtype=float))
            grad = np.atleast_1d(np.asarray(evaluator.grad_info_density(x, ys[j])))
            for axis in range(k):
                h = 1e-5 * max(1.0, abs(y[axis]))
                hi = y.copy()
                lo = y.copy()
                hi[axis] += h
                lo[axis] -= h
                if k == 1:
                    up = evaluator.info_density(x, float(hi[0]))
                    dn = evaluator.info_density(x, float(lo[0]))
                else:
                    up = evaluator.info_density(x, hi)
                    dn = evaluator.info_density(x, lo)
                fd = (float(up) - float(dn)) / (2 * h)
                rel = abs(grad[axis] - fd) / (abs(grad[axis]) + 1.0)
                worst = max(worst, rel)
                ok = ok and rel <= _FD_TOL
    return [
        SuiteResult(
            "gradient-finite-difference",
            ok,
            f"max relative gap to central differences = {worst:.2e} (tol {_FD_TOL:.0e})",
        )
    ]


def _constants_suite() -> list[SuiteResult]:
    checks = []
    gauss = GaussianChannel(0.7)
    grid = np.linspace(-4.0, 4.0, 41)
    kappa_gap = abs(bakry_emery_on_grid(gauss, 0.3, grid) - 1.0 / 0.7)
    checks.append(("gauss kappa", kappa_gap))
    rho_gap = abs(rho_on_grid(gauss, grid) - 0.7)
    checks.append(("gauss rho", rho_gap))
    gv = GammaVarianceChannel()
    kappa_gap = abs(bakry_emery_on_grid(gv, 1.7, grid) - 2.0 * 1.7)
    checks.append(("gamma-variance kappa", kappa_gap))
    # rho for the gamma-variance channel decays like 1/(2 max|y|) on any
    # finite grid; only the unbounded infimum is 0.
    wide = np.linspace(-5.0, 5.0, 11)
    rho_gap = abs(rho_on_grid(gv, wide) - 1.0 / 10.0)
    checks.append(("gamma-variance rho grid decay", rho_gap))
    worst = max(gap for _, gap in checks)
    ok = worst <= _GRID_TOL
    return [
        SuiteResult(
            "constants-grid-vs-exact",
            ok,
            f"max |grid - closed form| = {worst:.2e} over {len(checks)} checks"
            f" (tol {_GRID_TOL:.0e})",
        )
    ]


def _normalization_suite() -> list[SuiteResult]:
    results = []
    probes = {
        "gauss-scalar": 0.9,
        "bpsk": 1.0,
        "sparse": -1.3,
        "gamma": 1.5,
    }
    worst = 0.0
    ok = True
    for name, joint in _scalar_joints():
        x = probes[name]
        evaluator = MarginalEvaluator(joint)

        def cond_pdf(ys):
            return np.exp(joint.channel.log_cond_pdf(x, ys))

        def tilted(ys):
            return np.exp(evaluator.info_density(x, ys) + evaluator.log_pdf(ys))

        total = integrate_1d(cond_pdf, -np.inf, np.inf, abs_tol=1e-10, rel_tol=1e-10)
        worst = max(worst, abs(total - 1.0))
        tilt = integrate_1d(tilted, -np.inf, np.inf, abs_tol=1e-10, rel_tol=1e-10)
        worst = max(worst, abs(tilt - 1.0))
        ok = ok and abs(total - 1.0) <= _NORM_TOL and abs(tilt - 1.0) <= _NORM_TOL
    results.append(
        SuiteResult(
            "density-normalization",
            ok,
            f"max |integral - 1| = {worst:.2e} across conditional and"
            f" tilted-marginal forms (tol {_NORM_TOL:.0e})",
        )
    )
    return results


def _routes_suite(seed: int) -> list[SuiteResult]:
    n = 40_000
    worst_z = 0.0
    ok = True
    lines = []
    for i, (name, joint) in enumerate(_scalar_joints()):
        classical = mmse_classical_mc(joint, n=n, seed=derive_seed(seed, 40, i))
        gradient = mmse_gradient_mc(joint, n=n, seed=derive_seed(seed, 41, i))
        se = classical.std_error + gradient.std_error
        z = abs(classical.value - gradient.value) / se
        worst_z = max(worst_z, z)
        ok = ok and z <= _AGREE_MULTIPLIER
        closed = None
        if name == "gauss-scalar":
            closed = mmse_gaussian_closed_form([[2.0]], 0.7)
        elif name == "bpsk":
            closed = mmse_bpsk(1.0)
        elif name == "gamma":
            closed = mmse_gamma_closed_form(2.0, 3.0)
        if closed is not None:
            for est in (classical, gradient):
                zc = abs(est.value - closed) / max(est.std_error, 1e-12)
                worst_z = max(worst_z, zc)
                ok = ok and zc <= _AGREE_MULTIPLIER
        lines.append(f"{name} z={z:.2f}")
    return [
        SuiteResult(
            "mmse-route-agreement",
            ok,
            f"worst z = {worst_z:.2f} across routes and closed forms"
            f" (tol {_AGREE_MULTIPLIER}); " + ", ".join(lines),
        )
    ]


def _soundness_suite(seed: int) -> list[SuiteResult]:
    ok = True
    lines = []
    cases = [
        ("gauss-scalar", JointModel(GaussianPrior([[2.0]], mean=[0.3]), GaussianChannel(0.7))),
        ("bpsk", JointModel(BpskPrior(), GaussianChannel(1.0))),
        ("sparse", JointModel(SparsePrior(0.4), GaussianChannel(0.8))),
    ]
    for i, (name, joint) in enumerate(cases):
        lb = poincare_lb_gaussian(joint, n_outer=500, n_inner=500, seed=derive_seed(seed, 50, i))
        if name == "gauss-scalar":
            reference: object = mmse_gaussian_closed_form([[2.0]], 0.7)
        elif name == "bpsk":
            reference = mmse_bpsk(1.0)
        else:
            reference = mmse_classical_mc(joint, n=40_000, seed=derive_seed(seed, 51, i))
        try:
            BoundReport(
                poincare_lb=lb,
                rho=lb.rho,
                kappa_summary="1/noise_variance",
                mmse_reference=reference,
                variance_target=joint.prior.trace_covariance,
            )
            lines.append(f"{name} lb={lb.value:.4g}")
        except Exception as exc:  # noqa: BLE001 - recorded as a failure
            ok = False
            lines.append(f"{name} FAILED: {exc}")
    gamma_joint = JointModel(GammaPrior(2.0, 3.0), GammaVarianceChannel())
    trivial = poincare_lower_bound(gamma_joint, n_outer=2, n_inner=2, seed=seed)
    if not (trivial.trivial and trivial.value == 0.0):
        ok = False
        lines.append("gamma trivial-bound FAILED")
    else:
        lines.append("gamma trivial lb=0")
    return [
        SuiteResult(
            "bound-soundness",
            ok,
            "; ".join(lines),
        )
    ]


def run_verification(seed: int = 2026) -> list[SuiteResult]:
    """Run every suite; deterministic given the seed."""
    results = []
    results += _tweedie_suite(seed)
    results += _gradient_suite(seed)
    results += _fd_gradient_suite(seed)
    results += _constants_suite()
    results += _normalization_suite()
    results += _routes_suite(seed)
    results += _soundness_suite(seed)
    return results


def all_passed(results: list[SuiteResult]) -> bool:
    return all(r.passed for r in results)


def format_results(results: list[SuiteResult]) -> str:
    lines = []
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        lines.append(f"{status} {r.name}: {r.detail}")
    n_fail = sum(1 for r in results if not r.passed)
    lines.append(
        f"{len(results) - n_fail}/{len(results)} suites passed"
        if n_fail
        else f"all {len(results)} suites passed"
    )
    return "\n".join(lines)
