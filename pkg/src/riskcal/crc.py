"""Scalar-parameter calibrators and their risk/stability certificates.

Four algorithms live here: the classic monotonic conformal calibrator, the
plain full-data leftmost root it is compared against, the discretized
grid algorithm for arbitrary bounded losses, and the Lipschitz-loss
stability certificate for continuous losses with a strong crossing point.

All scalar root-finding happens by bisection on a fixed dyadic grid of the
search interval (fixed iteration count derived from the tolerance), so two
calibrators run on the same interval land on the same grid. That makes
order relations between their outputs exact, not tolerance-limited.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    CalibrationError,
    CalibrationResult,
    Dataset,
    LossSpec,
    empirical_risk,
)
from .lambert import NEG_INV_E, lambert_w_m1

DEFAULT_INTERVAL = (0.0, 1.0)
DEFAULT_TOL = 1e-9
DEFAULT_SCAN_POINTS = 1024


@dataclass(frozen=True)
class GridSpec:
    """The uniform grid {0, 1/m, ..., 1} used by the discretized algorithm."""

    m: int

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("grid resolution m must be >= 1")

    @property
    def points(self) -> np.ndarray:
        return np.arange(self.m + 1) / self.m


@dataclass(frozen=True)
class SmoothLossCert:
    """Certificate inputs for the Lipschitz-loss stability bound.

    ``L`` is the Lipschitz constant of the loss in theta, ``slope_m`` the
    slope of the empirical risk at its leftmost crossing, and ``r`` the
    radius on which the crossing conditions hold. (The grid resolution of
    :class:`GridSpec` is an unrelated quantity that happens to share a
    letter in common notation; they are kept apart deliberately.)
    """

    L: float
    slope_m: float
    r: float

    def __post_init__(self):
        if self.L < 0 or self.slope_m <= 0 or self.r <= 0:
            raise ValueError("need L >= 0 and slope_m, r > 0")


def _bisect_iters(lo: float, hi: float, tol: float) -> int:
    return max(1, math.ceil(math.log2(max((hi - lo) / tol, 2.0))))


def _bisect(pred, lo: float, hi: float, tol: float) -> float:
    """Leftmost point of a monotone (false -> true) predicate on a dyadic grid.

    Requires pred(hi) true and pred(lo) false; returns the true-side end of
    the final bracket.
    """
    for _ in range(_bisect_iters(lo, hi, tol)):
        mid = 0.5 * (lo + hi)
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return hi


def crc_monotonic(
    dataset: Dataset,
    loss: LossSpec,
    alpha: float,
    interval: tuple[float, float] = DEFAULT_INTERVAL,
    tol: float = DEFAULT_TOL,
) -> CalibrationResult:
    """Conformal risk control for monotone nonincreasing losses.

    Returns the smallest theta in the search interval whose loss sum
    satisfies ``sum_D loss <= (n+1)*alpha - 1``, i.e. the inflated
    empirical risk on n+1 points is certainly below alpha.
    """
    if not loss.monotone_nonincreasing:
        raise ValueError("crc_monotonic requires a monotone nonincreasing loss")
    if not loss.bounded_01:
        raise ValueError("crc_monotonic requires a [0,1]-bounded loss")
    if not (0.0 < alpha <= 1.0):
        raise ValueError("alpha must be in (0, 1]")
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    lo, hi = interval
    n = len(dataset)
    budget = (n + 1) * alpha - 1.0

    def pred(theta: float) -> bool:
        return empirical_risk(dataset, loss, theta) * n <= budget

    if not pred(hi):
        raise CalibrationError("infeasible level")
    theta = lo if pred(lo) else _bisect(pred, lo, hi, tol)
    return CalibrationResult(
        theta_hat=theta,
        algorithm="crc_monotonic",
        alpha_effective=alpha,
        diagnostics={"empirical_risk": empirical_risk(dataset, loss, theta)},
    )


def reference_root(
    dataset: Dataset,
    loss: LossSpec,
    alpha: float,
    interval: tuple[float, float] = DEFAULT_INTERVAL,
    tol: float = DEFAULT_TOL,
    scan_points: int = DEFAULT_SCAN_POINTS,
) -> CalibrationResult:
    """Smallest theta with empirical risk <= alpha (the full-data root).

    For monotone losses the predicate is monotone and pure bisection is
    exact. Otherwise a coarse scan (``scan_points`` resolution) locates the
    leftmost sign change, which bisection then refines; for adversarially
    oscillatory risks the scan resolution is the caller's responsibility.
    """
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    lo, hi = interval

    def pred(theta: float) -> bool:
        return empirical_risk(dataset, loss, theta) <= alpha

    if loss.monotone_nonincreasing:
        if not pred(hi):
            raise CalibrationError("infeasible level")
        theta = lo if pred(lo) else _bisect(pred, lo, hi, tol)
    else:
        grid = np.linspace(lo, hi, scan_points)
        risks = loss.loss_matrix(dataset, grid).mean(axis=0)
        ok = np.nonzero(risks <= alpha)[0]
        if ok.size == 0:
            raise CalibrationError("infeasible level")
        k = int(ok[0])
        theta = grid[0] if k == 0 else _bisect(pred, grid[k - 1], grid[k], tol)
    return CalibrationResult(
        theta_hat=theta,
        algorithm="reference_root",
        alpha_effective=alpha,
        diagnostics={"empirical_risk": empirical_risk(dataset, loss, theta)},
    )


def discretized_root(
    dataset: Dataset, loss: LossSpec, alpha: float, grid: GridSpec
) -> CalibrationResult:
    """Smallest grid point in {0, 1/m, ..., 1} with empirical risk <= alpha.

    Assumes the loss has a safe solution at theta = 1 (zero loss for every
    datapoint), which guarantees feasibility.
    """
    if not loss.bounded_01:
        raise ValueError("discretized_root requires a [0,1]-bounded loss")
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    risks = loss.loss_matrix(dataset, grid.points).mean(axis=0)
    ok = np.nonzero(risks <= alpha)[0]
    if ok.size == 0:
        raise CalibrationError("no safe solution")
    k = int(ok[0])
    return CalibrationResult(
        theta_hat=float(grid.points[k]),
        algorithm="discretized_root",
        alpha_effective=alpha,
        diagnostics={"empirical_risk": float(risks[k]), "grid_index": float(k)},
    )


def epsilon_star(n: int, m: int) -> float:
    """Minimizer of eps + (m+1)exp(-2n eps^2) via the Lambert W closed form."""
    arg = -1.0 / (4.0 * n * (m + 1) ** 2)
    if arg < NEG_INV_E:
        raise ValueError("n, m too small: Lambert W argument below -1/e")
    return math.sqrt(-lambert_w_m1(arg) / (4.0 * n))


def general_risk_bound(n: int, m: int) -> float:
    """Additive risk slack of the discretized algorithm under i.i.d. sampling.

    Returns ``eps* + (m+1)exp(-2n eps*^2)``, the minimized union-bound
    slack; the guaranteed risk is ``alpha +`` this value. Stated for i.i.d.
    data (not mere exchangeability).
    """
    eps = epsilon_star(n, m)
    return eps + (m + 1) * math.exp(-2.0 * n * eps * eps)


def smooth_stability_bound(cert: SmoothLossCert, n: int) -> float:
    """Stability level L/(slope_m*(n+1)) for Lipschitz losses with a strong
    crossing; valid only when 1/(n+1) < slope_m * r."""
    if not (1.0 / (n + 1) < cert.slope_m * cert.r):
        raise CalibrationError("crossing condition fails")
    return cert.L / (cert.slope_m * (n + 1))


# ---------------------------------------------------------------------------
# Calibrator objects (callable Dataset -> CalibrationResult) with vectorized
# leave-one-out fast paths, for use in stability estimation.
# ---------------------------------------------------------------------------


def _vector_bisect(risk_of_mids, budgets, lo, hi, tol):
    """Simultaneous bisection of per-index monotone predicates.

    ``risk_of_mids(mids)`` returns the per-index loss *sums* at the per-index
    midpoints; index i's predicate is ``sum_i(theta) <= budgets[i]``.
    """
    lo = lo.copy()
    hi = hi.copy()
    for _ in range(_bisect_iters(float(lo.min()), float(hi.max()), tol)):
        mids = 0.5 * (lo + hi)
        good = risk_of_mids(mids) <= budgets
        hi = np.where(good, mids, hi)
        lo = np.where(good, lo, mids)
    return hi


@dataclass
class MonotoneCrcCalibrator:
    loss: LossSpec
    alpha: float
    interval: tuple[float, float] = DEFAULT_INTERVAL
    tol: float = DEFAULT_TOL

    def __call__(self, dataset: Dataset) -> CalibrationResult:
        return crc_monotonic(dataset, self.loss, self.alpha, self.interval, self.tol)

    def loo_fit(self, dataset: Dataset) -> np.ndarray:
        """Thetas of the calibrator run on every leave-one-out dataset."""
        n_full = len(dataset)
        lo0, hi0 = self.interval
        budget = n_full * self.alpha - 1.0  # |D_{-i}| + 1 = n_full

        def sums(mids):
            mat = self.loss.loss_matrix(dataset, mids)
            return mat.sum(axis=0) - np.diag(mat)

        budgets = np.full(n_full, budget)
        ends = self.loss.loss_matrix(dataset, np.array([lo0, hi0]))
        tot = ends.sum(axis=0)
        hi_sums = tot[1] - ends[:, 1]
        lo_sums = tot[0] - ends[:, 0]
        if np.any(hi_sums > budgets):
            bad = int(np.nonzero(hi_sums > budgets)[0][0])
            raise CalibrationError(f"infeasible level (leave-one-out index {bad})")
        lo = np.full(n_full, lo0)
        hi = np.full(n_full, hi0)
        at_lo = lo_sums <= budgets
        out = _vector_bisect(sums, budgets, lo, hi, self.tol)
        return np.where(at_lo, lo0, out)


@dataclass
class LeftmostRootCalibrator:
    loss: LossSpec
    alpha: float
    interval: tuple[float, float] = DEFAULT_INTERVAL
    tol: float = DEFAULT_TOL
    scan_points: int = DEFAULT_SCAN_POINTS

    def __call__(self, dataset: Dataset) -> CalibrationResult:
        return reference_root(
            dataset, self.loss, self.alpha, self.interval, self.tol, self.scan_points
        )

    def loo_fit(self, dataset: Dataset) -> np.ndarray:
        n_full = len(dataset)
        lo0, hi0 = self.interval
        n_loo = n_full - 1
        budgets = np.full(n_full, self.alpha * n_loo)

        def sums(mids):
            mat = self.loss.loss_matrix(dataset, mids)
            return mat.sum(axis=0) - np.diag(mat)

        if self.loss.monotone_nonincreasing:
            ends = self.loss.loss_matrix(dataset, np.array([lo0, hi0]))
            tot = ends.sum(axis=0)
            if np.any(tot[1] - ends[:, 1] > budgets):
                raise CalibrationError("infeasible level in leave-one-out sweep")
            at_lo = tot[0] - ends[:, 0] <= budgets
            out = _vector_bisect(
                sums, budgets, np.full(n_full, lo0), np.full(n_full, hi0), self.tol
            )
            return np.where(at_lo, lo0, out)

        grid = np.linspace(lo0, hi0, self.scan_points)
        mat = self.loss.loss_matrix(dataset, grid)
        loo_sums = mat.sum(axis=0)[None, :] - mat  # (n_full, scan)
        feasible = loo_sums <= budgets[:, None]
        if not np.all(feasible.any(axis=1)):
            bad = int(np.nonzero(~feasible.any(axis=1))[0][0])
            raise CalibrationError(f"infeasible level (leave-one-out index {bad})")
        first = feasible.argmax(axis=1)
        lo = grid[np.maximum(first - 1, 0)]
        hi = grid[first]
        out = _vector_bisect(sums, budgets, lo, hi, self.tol)
        return np.where(first == 0, grid[0], out)


@dataclass
class DiscretizedCalibrator:
    loss: LossSpec
    alpha: float
    grid: GridSpec = field(default_factory=lambda: GridSpec(100))

    def __call__(self, dataset: Dataset) -> CalibrationResult:
        return discretized_root(dataset, self.loss, self.alpha, self.grid)

    def loo_fit(self, dataset: Dataset) -> np.ndarray:
        n_full = len(dataset)
        pts = self.grid.points
        mat = self.loss.loss_matrix(dataset, pts)
        loo_risk = (mat.sum(axis=0)[None, :] - mat) / (n_full - 1)
        feasible = loo_risk <= self.alpha
        if not np.all(feasible.any(axis=1)):
            raise CalibrationError("no safe solution in leave-one-out sweep")
        return pts[feasible.argmax(axis=1)]
