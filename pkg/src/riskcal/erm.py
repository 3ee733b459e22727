"""Regularized empirical risk minimization and its stability certificates.

Closed-form ridge/least-squares fits, a generic gradient-descent path for
other convex losses, loss-scale and gradient-scale stability levels, the
conservative linear shift that pushes expected test gradients below zero,
and multigroup debiasing of a base predictor with per-group certificates.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .core import (
    CalibrationError,
    CalibrationResult,
    Dataset,
    LabeledSample,
    LossSpec,
    _index_order_sum,
)


@dataclass
class ErmConfig:
    """Objective and optimizer settings for the regularized fits.

    ``lam`` is the ridge weight, ``gamma`` the coefficient of the linear
    shift term ``gamma * 1' theta`` added to the objective. The remaining
    fields only affect the generic gradient-descent path.
    """

    lam: float = 0.0
    gamma: float = 0.0
    max_iters: int = 5000
    step_size: float = 1.0
    grad_tol: float = 1e-8
    interval: tuple[float, float] = (-10.0, 10.0)

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")
        if self.grad_tol <= 0:
            raise ValueError("grad_tol must be positive")


@dataclass
class GradStabilityReport:
    """Gradient-scale stability level beta * 1_d with its ingredients."""

    beta_vec: np.ndarray
    mu: float
    rho_mean: float
    test_grad_norm_mean: float
    train_grad_norm_mean: float
    gamma: float = 0.0
    test_grad_norm_mean_resampled: float | None = None

    @property
    def beta(self) -> float:
        return float(self.beta_vec[0])


def _design_and_residual(dataset: Dataset) -> tuple[np.ndarray, np.ndarray]:
    dataset.validate()
    x = dataset.features()
    y = dataset.labels().astype(float)
    return x, y


def ridge_fit(dataset: Dataset, config: ErmConfig) -> CalibrationResult:
    """Exact minimizer of mean squared loss + (lam/2)||theta||^2 + gamma*1'theta.

    Solves ``(X'X/n + lam*I) theta = X'y/n - gamma*1`` by a dense symmetric
    solve. With ``lam = 0`` the Gram matrix must be invertible.
    """
    x, y = _design_and_residual(dataset)
    n, d = x.shape
    gram = x.T @ x / n
    rhs = x.T @ y / n - config.gamma * np.ones(d)
    system = gram + config.lam * np.eye(d)
    eigs = np.linalg.eigvalsh(system)
    if eigs[0] <= 1e-12 * max(eigs[-1], 1.0):
        raise CalibrationError(
            f"rank deficient design: min eigenvalue {eigs[0]:.3e} with lam=0"
        )
    theta = np.linalg.solve(system, rhs)
    grad = system @ theta - rhs
    scale = max(float(np.linalg.norm(rhs)), 1.0)
    resid_norm = float(np.linalg.norm(grad))
    if resid_norm > 1e-10 * scale:
        theta = theta - np.linalg.solve(system, grad)
        resid_norm = float(np.linalg.norm(system @ theta - rhs))
    return CalibrationResult(
        theta_hat=theta,
        algorithm="ridge",
        alpha_effective=float("nan"),
        diagnostics={
            "grad_norm": resid_norm,
            "lam": config.lam,
            "gamma": config.gamma,
            "min_eigenvalue": float(eigs[0]),
        },
    )


def _objective_gradient(
    dataset: Dataset, loss: LossSpec, config: ErmConfig, theta: np.ndarray
) -> np.ndarray:
    grads = np.stack([loss.gradient(s, theta) for s in dataset.samples])
    mean_grad = np.apply_along_axis(_index_order_sum, 0, grads) / len(dataset)
    return mean_grad + config.lam * theta + config.gamma * np.ones(loss.d)


def _objective_value(
    dataset: Dataset, loss: LossSpec, config: ErmConfig, theta
) -> float:
    theta_arr = np.atleast_1d(np.asarray(theta, dtype=float))
    risk = _index_order_sum(loss.pointwise(dataset, theta)) / len(dataset)
    return (
        risk
        + 0.5 * config.lam * float(theta_arr @ theta_arr)
        + config.gamma * float(theta_arr.sum())
    )


def _golden_section(f, lo: float, hi: float, iters: int = 200) -> float:
    inv_phi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = f(d)
        if b - a < 1e-13:
            break
    return 0.5 * (a + b)


def erm_fit_convex(
    dataset: Dataset, loss: LossSpec, config: ErmConfig
) -> CalibrationResult:
    """Gradient descent with backtracking on the regularized objective.

    Requires ``loss.gradient``; for scalar parameters without a gradient,
    falls back to golden-section search on ``config.interval``. Convexity
    is the caller's responsibility. Non-convergence is flagged in the
    diagnostics (``converged`` = 0.0), not raised.
    """
    dataset.validate()
    if loss.gradient is None:
        if loss.d != 1:
            raise CalibrationError("loss.gradient required for d > 1")
        theta = _golden_section(
            lambda t: _objective_value(dataset, loss, config, t),
            config.interval[0],
            config.interval[1],
        )
        return CalibrationResult(
            theta_hat=float(theta),
            algorithm="erm_golden_section",
            alpha_effective=float("nan"),
            diagnostics={"converged": 1.0, "grad_norm": float("nan")},
        )

    theta = np.zeros(loss.d)
    value = _objective_value(dataset, loss, config, theta)
    grad = _objective_gradient(dataset, loss, config, theta)
    converged = False
    iters = 0
    for iters in range(1, config.max_iters + 1):
        gnorm = float(np.linalg.norm(grad))
        if gnorm <= config.grad_tol:
            converged = True
            break
        step = config.step_size
        for _ in range(60):
            cand = theta - step * grad
            cand_value = _objective_value(dataset, loss, config, cand)
            if cand_value <= value - 0.5 * step * gnorm**2:
                break
            step *= 0.5
        theta, value = cand, cand_value
        grad = _objective_gradient(dataset, loss, config, theta)
    gnorm = float(np.linalg.norm(grad))
    if gnorm <= config.grad_tol:
        converged = True
    return CalibrationResult(
        theta_hat=theta,
        algorithm="erm_gradient_descent",
        alpha_effective=float("nan"),
        diagnostics={
            "converged": float(converged),
            "grad_norm": gnorm,
            "iterations": float(iters),
        },
    )


def loss_stability_beta(rho_sq_mean: float, lam: float, n: int) -> float:
    """Loss-scale stability level 2*E[rho^2]/(lam*(n+1)) for lam > 0."""
    if lam <= 0:
        raise ValueError("bound requires λ > 0")
    if rho_sq_mean < 0:
        raise ValueError("rho_sq_mean must be nonnegative")
    if n < 1:
        raise ValueError("n must be positive")
    return 2.0 * rho_sq_mean / (lam * (n + 1))


def grad_stability_beta(
    dataset: Dataset,
    loss: LossSpec,
    config: ErmConfig,
    mu: float,
    resample: int = 0,
    resample_seed: int = 0,
) -> GradStabilityReport:
    """Plug-in gradient-scale stability level beta * 1_d.

    beta = (E[rho * ||grad at test point||] + E[rho] * (E[||train mean
    grad||] + 2*gamma)) / ((mu + lam) * (n + 1)), with all expectations
    estimated in-sample at the fitted parameter. With ``resample > 0`` the
    test-gradient term is additionally estimated by refitting on bootstrap
    subsamples and evaluating on the held-out points; both estimates are
    reported and the resampled one is used in beta.
    """
    if loss.gradient is None or loss.lipschitz_rho is None:
        raise CalibrationError(
            "grad_stability_beta needs loss.gradient and loss.lipschitz_rho"
        )
    if mu < 0:
        raise ValueError("mu must be nonnegative")
    if mu + config.lam <= 0:
        raise ValueError("mu + lam must be positive")
    dataset.validate()
    n = len(dataset)
    theta = np.atleast_1d(
        np.asarray(erm_fit_convex(dataset, loss, config).theta_hat, dtype=float)
    )

    rhos = np.array([loss.lipschitz_rho(s) for s in dataset.samples])
    grads = np.stack([loss.gradient(s, theta) for s in dataset.samples])
    grad_norms = np.linalg.norm(grads, axis=1)
    rho_mean = float(rhos.mean())
    test_term = float((rhos * grad_norms).mean())
    train_mean_grad_norm = float(np.linalg.norm(grads.mean(axis=0)))

    test_term_resampled = None
    if resample > 0:
        rng = np.random.default_rng(resample_seed)
        vals = []
        for _ in range(resample):
            idx = rng.integers(0, n, size=n)
            held_out = np.setdiff1d(np.arange(n), idx)
            if held_out.size == 0:
                continue
            sub = dataset.subset(list(idx))
            theta_b = np.atleast_1d(
                np.asarray(
                    erm_fit_convex(sub, loss, config).theta_hat, dtype=float
                )
            )
            for i in held_out:
                s = dataset[i]
                vals.append(
                    loss.lipschitz_rho(s)
                    * float(np.linalg.norm(loss.gradient(s, theta_b)))
                )
        if vals:
            test_term_resampled = float(np.mean(vals))

    used_test = test_term_resampled if test_term_resampled is not None else test_term
    denom = (mu + config.lam) * (n + 1)
    beta = (
        used_test + rho_mean * (train_mean_grad_norm + 2.0 * config.gamma)
    ) / denom
    return GradStabilityReport(
        beta_vec=np.full(loss.d, beta),
        mu=mu,
        rho_mean=rho_mean,
        test_grad_norm_mean=test_term,
        train_grad_norm_mean=train_mean_grad_norm,
        gamma=config.gamma,
        test_grad_norm_mean_resampled=test_term_resampled,
    )


def conservative_gamma(
    test_grad_term: float,
    train_grad_term: float,
    rho_mean: float,
    mu: float,
    lam: float,
    n: int,
    theta_inf_norm: float,
) -> float:
    """Smallest shift gamma that drives the expected test gradient to <= 0.

    gamma = (beta_0 + lam * ||E[theta]||_inf) / (1 - 2*E[rho]/((mu+lam)(n+1)))
    where beta_0 is the unshifted gradient-stability level. Requires
    ``(mu + lam)(n + 1) > 2*E[rho]``.
    """
    denom_scale = (mu + lam) * (n + 1)
    discount = 1.0 - 2.0 * rho_mean / denom_scale
    if discount <= 0.0:
        raise CalibrationError("sample size too small for conservative shift")
    beta0 = (test_grad_term + rho_mean * train_grad_term) / denom_scale
    return (beta0 + lam * theta_inf_norm) / discount


def min_eigen_ratio(dataset: Dataset) -> float:
    """Smallest eigenvalue of X'X/|D|, clipped at 0.

    The eigen-solve is verified by the residual check
    ``||A v - lambda v|| <= 1e-8 ||A||``.
    """
    dataset.validate()
    x = dataset.features()
    a = x.T @ x / len(dataset)
    vals, vecs = np.linalg.eigh(a)
    v = vecs[:, 0]
    resid = np.linalg.norm(a @ v - vals[0] * v)
    norm_a = np.linalg.norm(a)
    if norm_a > 0 and resid > 1e-8 * norm_a:
        raise CalibrationError("eigen-solve residual check failed")
    return max(float(vals[0]), 0.0)


# ---------------------------------------------------------------------------
# Multigroup debiasing
# ---------------------------------------------------------------------------


@dataclass
class GroupCertificate:
    """Per-group diagnostics for the debiased predictor."""

    name: str
    frequency: float
    adjusted_mean: float
    in_sample_bias: float
    half_width: float
    certifiable: bool


@dataclass
class DebiasReport:
    theta: np.ndarray
    groups: list[GroupCertificate]
    mu: float
    mean_abs_residual: float


def debias_ols(
    x: np.ndarray,
    y: np.ndarray,
    f: np.ndarray,
    gamma: float = 0.0,
) -> DebiasReport:
    """Fit an additive correction so the predictor f(x) + x'theta is
    approximately unbiased on every group defined by a binary feature.

    ``x`` is the (n, d) binary group-membership design. The correction
    minimizes mean squared residual plus ``gamma * 1' theta`` (no ridge
    term). Each group's certificate half-width is
    ``d^{3/2} * mean|residual| / (mu * (n+1) * p_j)``, where mu is the
    smallest eigenvalue of X'X/n and p_j the empirical group frequency.
    Empty groups are flagged uncertifiable rather than raising.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    f = np.asarray(f, dtype=float)
    if not np.all((x == 0) | (x == 1)):
        raise ValueError("group features must be binary")
    n, d = x.shape
    resid_target = y - f
    dataset = Dataset.from_arrays(x, resid_target)
    theta = np.atleast_1d(
        np.asarray(
            ridge_fit(dataset, ErmConfig(lam=0.0, gamma=gamma)).theta_hat,
            dtype=float,
        )
    )
    mu = min_eigen_ratio(dataset)
    residual = x @ theta - resid_target
    mean_abs = float(np.mean(np.abs(residual)))
    adjusted = f + x @ theta

    groups = []
    for j in range(d):
        members = x[:, j] == 1
        p_hat = float(members.mean())
        if p_hat == 0.0:
            groups.append(
                GroupCertificate(
                    name=f"g{j + 1}",
                    frequency=0.0,
                    adjusted_mean=float("nan"),
                    in_sample_bias=float("nan"),
                    half_width=float("inf"),
                    certifiable=False,
                )
            )
            continue
        half_width = d**1.5 * mean_abs / (mu * (n + 1) * p_hat) if mu > 0 else float("inf")
        groups.append(
            GroupCertificate(
                name=f"g{j + 1}",
                frequency=p_hat,
                adjusted_mean=float(adjusted[members].mean()),
                in_sample_bias=float((adjusted[members] - y[members]).mean()),
                half_width=half_width,
                certifiable=mu > 0,
            )
        )
    return DebiasReport(
        theta=theta, groups=groups, mu=mu, mean_abs_residual=mean_abs
    )


def read_debias_csv(path) -> tuple[np.ndarray, np.ndarray, np.ndarray, list[str]]:
    """Read the ``f,y,g1..gd`` debiasing format.

    Returns ``(x, y, f, group_names)`` where the group columns are taken
    in header order after ``f`` and ``y``.
    """
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        names = reader.fieldnames or []
        if "f" not in names or "y" not in names:
            raise ValueError("debias CSV must have columns f,y,g1..gd")
        group_names = [c for c in names if c not in ("f", "y")]
        if not group_names:
            raise ValueError("debias CSV needs at least one group column")
        rows_f, rows_y, rows_g = [], [], []
        for row in reader:
            rows_f.append(float(row["f"]))
            rows_y.append(float(row["y"]))
            g = [float(row[c]) for c in group_names]
            if any(v not in (0.0, 1.0) for v in g):
                raise ValueError("group columns must be binary")
            rows_g.append(g)
    return (
        np.asarray(rows_g),
        np.asarray(rows_y),
        np.asarray(rows_f),
        group_names,
    )


@dataclass
class RidgeCalibrator:
    """Ridge fit as a calibrator, with a downdated leave-one-out path.

    The leave-one-out systems are assembled by subtracting each sample's
    rank-one contribution from the cached Gram matrix, so the sweep costs
    n dense d-by-d solves instead of n full refits.
    """

    config: ErmConfig = field(default_factory=ErmConfig)

    def __call__(self, dataset: Dataset) -> CalibrationResult:
        return ridge_fit(dataset, self.config)

    def loo_fit(self, dataset: Dataset) -> list[np.ndarray]:
        x, y = _design_and_residual(dataset)
        n, d = x.shape
        if n < 2:
            raise ValueError("need at least 2 samples for leave-one-out")
        gram = x.T @ x
        xty = x.T @ y
        ones = np.ones(d)
        thetas = []
        for i in range(n):
            system = (gram - np.outer(x[i], x[i])) / (n - 1) + self.config.lam * np.eye(d)
            rhs = (xty - x[i] * y[i]) / (n - 1) - self.config.gamma * ones
            eigs = np.linalg.eigvalsh(system)
            if eigs[0] <= 1e-12 * max(eigs[-1], 1.0):
                raise CalibrationError(
                    f"rank deficient design: min eigenvalue {eigs[0]:.3e} "
                    f"after removing sample {i}"
                )
            thetas.append(np.linalg.solve(system, rhs))
        return thetas
