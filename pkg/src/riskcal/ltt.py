"""Fixed-sequence multiple-testing baseline for high-probability risk control.

Scans an ordered candidate grid from the safe end, testing H_theta:
R(theta) > alpha with the bounded-loss Hoeffding p-value, and certifies the
last rejected parameter. The guarantee is P(R(theta_hat) <= alpha) >= 1 -
delta over the calibration draw, conditional-on-data rather than marginal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .core import CalibrationResult, Dataset, LossSpec, empirical_risk


@dataclass
class LttConfig:
    """Candidate grid, error budget, and scan direction.

    ``direction`` names the safe end of the grid: ``"descending"`` starts
    at the largest candidate (right-safe losses, e.g. abstention),
    ``"ascending"`` at the smallest.
    """

    grid: np.ndarray = field(default_factory=lambda: np.linspace(0.0, 1.0, 101))
    delta: float = 0.1
    direction: Literal["descending", "ascending"] = "descending"

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        if self.grid.size == 0:
            raise ValueError("grid must be nonempty")
        if np.any(np.diff(self.grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        if not (0.0 < self.delta < 1.0):
            raise ValueError("delta must be in (0, 1)")


def hoeffding_pvalue(r_hat: float, n: int, alpha: float) -> float:
    """p = exp(-2 n max(0, alpha - r_hat)^2) for losses bounded in [0, 1]."""
    if not (0.0 <= r_hat <= 1.0):
        raise ValueError("r_hat must be in [0, 1]")
    if n < 1:
        raise ValueError("n must be positive")
    return math.exp(-2.0 * n * max(0.0, alpha - r_hat) ** 2)


def ltt_select(
    dataset: Dataset, loss: LossSpec, cfg: LttConfig, alpha: float
) -> CalibrationResult:
    """Fixed-sequence selection: last grid point rejected in a safe-first scan.

    Stops at the first failure to reject. If even the safe end cannot be
    rejected the safe end is returned with ``vacuous`` set in the
    diagnostics (no certificate).
    """
    if not loss.bounded_01:
        raise ValueError("fixed-sequence testing requires a [0,1]-bounded loss")
    n = len(dataset)
    order = cfg.grid[::-1] if cfg.direction == "descending" else cfg.grid
    last_rejected = None
    tested = 0
    for theta in order:
        r_hat = empirical_risk(dataset, loss, float(theta))
        tested += 1
        if hoeffding_pvalue(r_hat, n, alpha) <= cfg.delta:
            last_rejected = float(theta)
        else:
            break
    vacuous = last_rejected is None
    theta_hat = float(order[0]) if vacuous else last_rejected
    return CalibrationResult(
        theta_hat=theta_hat,
        algorithm="ltt_fixed_sequence_hoeffding",
        alpha_effective=alpha,
        diagnostics={
            "vacuous": float(vacuous),
            "delta": cfg.delta,
            "tested": float(tested),
        },
    )
