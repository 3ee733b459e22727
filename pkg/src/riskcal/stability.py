"""Bootstrap estimation of the stability level and level-adjusted calibration.

The stability level of a calibrator relative to a reference is estimated by
resampling: draw datasets of size n+1 with replacement from the observed
data, compute the leave-one-out gap on each replicate, and take the
positive part of the replicate mean. Calibrating at the deflated level
alpha - beta_hat then restores the risk-control target for calibrators that
are not exactly stable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import (
    CalibrationError,
    CalibrationResult,
    Dataset,
    LossSpec,
    _index_order_sum,
    stability_gap,
)


@dataclass
class BootstrapConfig:
    """Replicate budget and seeding for the bootstrap estimator.

    ``resample_size`` defaults to n+1 (one more than the observed sample,
    matching the size at which the stability gap is defined).
    """

    B: int = 200
    seed: int = 0
    resample_size: int | None = None

    def __post_init__(self):
        if self.B < 1:
            raise ValueError("B must be >= 1")


@dataclass
class StabilityEstimate:
    """Positive-part bootstrap mean of the replicate gaps, with the trace."""

    beta_hat: float
    replicate_gaps: np.ndarray
    se: float
    skipped: int
    algo_id: str
    ref_algo_id: str
    seed: int

    def __post_init__(self):
        self.replicate_gaps = np.asarray(self.replicate_gaps, dtype=float)

    def report(self, alpha: float | None = None) -> dict:
        """JSON-serializable summary of the estimate."""
        out = {
            "beta_hat": self.beta_hat,
            "se": self.se,
            "B": int(len(self.replicate_gaps)) + self.skipped,
            "skipped": self.skipped,
            "algo": self.algo_id,
            "ref_algo": self.ref_algo_id,
            "seed": self.seed,
        }
        if alpha is not None:
            out["alpha"] = alpha
            out["alpha_effective"] = alpha - self.beta_hat
        return out

    def report_json(self, alpha: float | None = None) -> str:
        return json.dumps(self.report(alpha), indent=2, sort_keys=True)


def _algo_id(algo) -> str:
    name = getattr(algo, "name", None) or getattr(algo, "__name__", None)
    return str(name) if name else type(algo).__name__


def bootstrap_beta(
    dataset: Dataset,
    algo: Callable[[Dataset], CalibrationResult],
    ref_algo: Callable[[Dataset], CalibrationResult],
    loss: LossSpec,
    cfg: BootstrapConfig,
) -> StabilityEstimate:
    """Estimate the stability level of ``algo`` against ``ref_algo``.

    Each replicate resamples ``resample_size`` points with replacement
    (per-replicate generator seeded by ``[cfg.seed, b]``) and computes the
    leave-one-out stability gap. Replicates where either calibrator fails
    are skipped and counted; more than 10% skips is an error. The estimate
    is ``max(0, mean(gaps))`` with the mean taken in replicate order;
    ``se`` is the bootstrap standard error of that mean.
    """
    if len(dataset) < 2:
        raise ValueError("need at least 2 samples")
    size = cfg.resample_size if cfg.resample_size is not None else len(dataset) + 1
    if size < 2:
        raise ValueError("resample_size must be >= 2")
    gaps = []
    skipped = 0
    for b in range(cfg.B):
        rng = np.random.default_rng([cfg.seed, b])
        idx = rng.integers(0, len(dataset), size=size)
        replicate = dataset.subset(list(idx))
        try:
            gaps.append(stability_gap(replicate, algo, ref_algo, loss))
        except (CalibrationError, ValueError):
            skipped += 1
    if skipped > 0.1 * cfg.B:
        raise CalibrationError(
            f"{skipped}/{cfg.B} bootstrap replicates failed (>10%)"
        )
    gaps = np.asarray(gaps)
    mean_gap = _index_order_sum(gaps) / len(gaps)
    se = float(gaps.std(ddof=1) / np.sqrt(len(gaps))) if len(gaps) > 1 else 0.0
    return StabilityEstimate(
        beta_hat=max(0.0, mean_gap),
        replicate_gaps=gaps,
        se=se,
        skipped=skipped,
        algo_id=_algo_id(algo),
        ref_algo_id=_algo_id(ref_algo),
        seed=cfg.seed,
    )


@dataclass
class AlgoFamily:
    """A calibrator family: level -> (calibrator, reference) pairing.

    ``make_algo(alpha)`` builds the deployed calibrator at a level;
    ``make_ref(alpha)`` its stability reference (for leftmost-root families
    the two coincide). ``make_loss(alpha)`` supplies the loss the guarantee
    is stated in, which may itself depend on the level.
    """

    name: str
    make_algo: Callable[[float], Callable[[Dataset], CalibrationResult]]
    make_ref: Callable[[float], Callable[[Dataset], CalibrationResult]]
    make_loss: Callable[[float], LossSpec]


def crc_conservative(
    dataset: Dataset,
    alpha: float,
    family: AlgoFamily,
    cfg: BootstrapConfig,
) -> CalibrationResult:
    """Calibrate at the bootstrap-deflated level alpha - beta_hat.

    Runs the bootstrap stability estimate with the family's pairing at
    level alpha, then refits the family's calibrator at the adjusted
    level. Raises "level exhausted" when the adjustment uses up the whole
    budget.
    """
    estimate = bootstrap_beta(
        dataset,
        family.make_algo(alpha),
        family.make_ref(alpha),
        family.make_loss(alpha),
        cfg,
    )
    adjusted = alpha - estimate.beta_hat
    if adjusted < 0:
        raise CalibrationError(
            f"level exhausted: beta_hat={estimate.beta_hat:.4g} exceeds alpha={alpha}"
        )
    result = family.make_algo(adjusted)(dataset)
    result.algorithm = f"{family.name}_conservative"
    result.alpha_effective = adjusted
    result.diagnostics.update(
        {
            "alpha": alpha,
            "alpha_effective": adjusted,
            "beta_hat": estimate.beta_hat,
            "bootstrap_se": estimate.se,
            "bootstrap_skipped": float(estimate.skipped),
        }
    )
    return result
