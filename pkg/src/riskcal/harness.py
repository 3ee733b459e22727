"""Desk-scale benchmark tasks and Monte Carlo verification of risk control.

Provides the segmentation-style losses (false discovery rate and
intersection-over-union over binary masks), a synthetic segmentation task
whose per-image risk curves are smooth but non-monotone, and the generic
Monte Carlo loop that checks E[held-out loss] <= alpha + slack for any
calibrator.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import (
    CalibrationResult,
    Dataset,
    LabeledSample,
    LossSpec,
)


def _binarize(scores: np.ndarray, theta: float) -> np.ndarray:
    return np.asarray(scores) >= theta


def fdr_loss(y: np.ndarray, scores: np.ndarray, theta: float) -> float:
    """False-discovery-rate loss 1 - |y & y_hat| / |y_hat| at threshold theta.

    Returns 0 when nothing is predicted (no discoveries, no false ones).
    """
    y = np.asarray(y)
    scores = np.asarray(scores)
    if y.shape != scores.shape:
        raise ValueError("mask and score shapes differ")
    pred = _binarize(scores, theta)
    discoveries = int(pred.sum())
    if discoveries == 0:
        return 0.0
    true_disc = int((pred & (y > 0)).sum())
    return 1.0 - true_disc / discoveries


def iou_loss(y: np.ndarray, scores: np.ndarray, theta: float) -> float:
    """Intersection-over-union loss 1 - |y & y_hat| / |y | y_hat|.

    Both masks empty counts as perfect agreement (loss 0).
    """
    y = np.asarray(y)
    scores = np.asarray(scores)
    if y.shape != scores.shape:
        raise ValueError("mask and score shapes differ")
    pred = _binarize(scores, theta)
    truth = y > 0
    union = int((pred | truth).sum())
    if union == 0:
        return 0.0
    inter = int((pred & truth).sum())
    return 1.0 - inter / union


def _mask_loss_spec(pointwise: Callable[[np.ndarray, np.ndarray, float], float]) -> LossSpec:
    def evaluate(sample: LabeledSample, theta) -> float:
        return pointwise(sample.y, sample.x, float(theta))

    def matrix(dataset: Dataset, thetas: np.ndarray) -> np.ndarray:
        return np.array(
            [
                [pointwise(s.y, s.x, float(t)) for t in thetas]
                for s in dataset.samples
            ]
        )

    return LossSpec(
        evaluate=evaluate,
        d=1,
        bounded_01=True,
        monotone_nonincreasing=False,
        label_shape="mask",
        matrix_evaluate=matrix,
    )


def fdr_loss_spec() -> LossSpec:
    """FDR loss over samples with x = flat score field, y = flat binary mask."""
    return _mask_loss_spec(fdr_loss)


def iou_loss_spec() -> LossSpec:
    """IOU loss over samples with x = flat score field, y = flat binary mask."""
    return _mask_loss_spec(iou_loss)


@dataclass
class SyntheticSegTask:
    """Synthetic per-image segmentation surrogate.

    Each image is a smooth latent field on a grid_side x grid_side grid;
    the ground-truth mask thresholds the latent field and the score field
    is a logistic transform of the latent plus noise, so scores are
    informative but imperfect and per-image FDR curves are non-monotone in
    the threshold.
    """

    grid_side: int = 16
    latent_threshold: float = 0.3
    noise_scale: float = 0.6
    sharpness: float = 4.0

    def sample(self, rng: np.random.Generator) -> LabeledSample:
        k = self.grid_side
        # Smooth latent field: low-frequency cosine mixture with random phase.
        u = np.linspace(0.0, 1.0, k)
        xx, yy = np.meshgrid(u, u)
        latent = np.zeros((k, k))
        for _ in range(3):
            fx, fy = rng.uniform(0.5, 2.0, size=2)
            px, py = rng.uniform(0.0, 2 * np.pi, size=2)
            latent += rng.uniform(0.3, 1.0) * np.cos(
                2 * np.pi * (fx * xx + px)
            ) * np.cos(2 * np.pi * (fy * yy + py))
        latent /= 3.0
        mask = (latent > self.latent_threshold).astype(np.int8)
        noisy = self.sharpness * (latent - self.latent_threshold)
        noisy = noisy + self.noise_scale * rng.standard_normal((k, k))
        scores = 1.0 / (1.0 + np.exp(-noisy))
        return LabeledSample(scores.ravel(), mask.ravel())

    def dataset(self, n: int, seed: int) -> Dataset:
        rng = np.random.default_rng(seed)
        return Dataset([self.sample(rng) for _ in range(n)])


@dataclass
class McReport:
    """Monte Carlo verdict on E[held-out loss] <= alpha + slack_budget."""

    trials: int
    mean_test_loss: float
    mc_se: float
    target_alpha: float
    slack_budget: float
    passed: bool
    completed_trials: int = 0

    def as_dict(self) -> dict:
        return {
            "trials": self.trials,
            "completed_trials": self.completed_trials,
            "mean_test_loss": self.mean_test_loss,
            "mc_se": self.mc_se,
            "target_alpha": self.target_alpha,
            "slack_budget": self.slack_budget,
            "pass": self.passed,
        }


def monte_carlo_verify(
    task: Callable[[int, np.random.Generator], Dataset],
    calibrator: Callable[[Dataset], CalibrationResult],
    loss: LossSpec,
    alpha: float,
    n: int,
    trials: int,
    seed: int = 0,
    slack_budget: float = 0.0,
    min_trials: int = 100,
) -> McReport:
    """Estimate the marginal held-out risk of a calibrator.

    Each trial draws n+1 exchangeable points from ``task(n + 1, rng)``,
    calibrates on the first n, and evaluates the loss on the held-out
    point. The verdict passes when the mean is at most
    ``alpha + slack_budget + 2 * mc_se``. Calibrator or generator failures
    abort the batch and yield a partial report over the completed trials.
    """
    if trials < min_trials:
        raise ValueError(f"need at least {min_trials} trials")
    losses = np.empty(trials)
    completed = 0
    for t in range(trials):
        rng = np.random.default_rng([seed, t])
        try:
            full = task(n + 1, rng)
            train = full.subset(range(n))
            theta = calibrator(train).theta_hat
            losses[t] = loss.evaluate(full[n], theta)
        except Exception:
            break
        completed += 1
    vals = losses[:completed]
    mean = float(vals.mean()) if completed else float("nan")
    se = float(vals.std(ddof=1) / np.sqrt(completed)) if completed > 1 else float("nan")
    passed = completed == trials and mean <= alpha + slack_budget + 2 * se
    return McReport(
        trials=trials,
        completed_trials=completed,
        mean_test_loss=mean,
        mc_se=se,
        target_alpha=alpha,
        slack_budget=slack_budget,
        passed=passed,
    )
