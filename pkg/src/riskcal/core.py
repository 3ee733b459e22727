"""Domain types for datasets and losses plus the shared evaluation harness.

Datasets are ordered sequences of feature-label pairs; order matters because
leave-one-out operations are positional. Losses are described by a
:class:`LossSpec`, which bundles the pointwise evaluator with metadata
(boundedness, monotonicity, gradients) and optional vectorized fast paths.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Iterator, Sequence

import numpy as np

#: Sentinel for "threshold below every data point". Compares below every
#: finite value, so indicator losses treat it uniformly; index arithmetic
#: maps it to index 0 on sorted scales.
NEG_INF = float("-inf")

LABEL_SHAPES = ("real", "binary", "mask")


class CalibrationError(RuntimeError):
    """Raised when a calibrator cannot produce a valid parameter."""


@dataclass(frozen=True)
class LabeledSample:
    """A single feature-label pair.

    ``x`` is a 1-D float array (possibly empty). ``y`` is a real scalar, a
    binary scalar, or a flat binary mask, depending on the task.
    """

    x: np.ndarray
    y: Any

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))


@dataclass
class Dataset:
    """An ordered sequence of samples. Repeats are allowed."""

    samples: list[LabeledSample]

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self) -> Iterator[LabeledSample]:
        return iter(self.samples)

    def __getitem__(self, i: int) -> LabeledSample:
        return self.samples[i]

    def drop(self, i: int) -> "Dataset":
        """Dataset with position ``i`` removed, order otherwise preserved."""
        return Dataset(self.samples[:i] + self.samples[i + 1:])

    def subset(self, indices: Sequence[int]) -> "Dataset":
        return Dataset([self.samples[i] for i in indices])

    def features(self) -> np.ndarray:
        return np.stack([s.x for s in self.samples])

    def labels(self) -> np.ndarray:
        return np.asarray([s.y for s in self.samples])

    @staticmethod
    def from_arrays(x: np.ndarray, y: np.ndarray) -> "Dataset":
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return Dataset([LabeledSample(xi, yi) for xi, yi in zip(x, y)])

    def validate(self) -> None:
        if not self.samples:
            raise ValueError("empty dataset")
        d = self.samples[0].x.shape
        for s in self.samples:
            if s.x.shape != d:
                raise ValueError("feature vector length is not constant")


@dataclass
class LossSpec:
    """A loss function with the metadata calibrators need.

    ``evaluate(sample, theta)`` returns the pointwise loss. ``d`` is the
    parameter dimension. The optional vectorized paths avoid Python-level
    loops: ``batch_evaluate(dataset, theta)`` returns the per-sample loss
    vector at one theta, ``matrix_evaluate(dataset, thetas)`` the
    ``(n, len(thetas))`` matrix for scalar-parameter losses, and
    ``paired_evaluate(dataset, thetas)`` the per-sample loss at a
    per-sample parameter (used by leave-one-out sweeps).
    """

    evaluate: Callable[[LabeledSample, Any], float]
    d: int = 1
    bounded_01: bool = True
    monotone_nonincreasing: bool = False
    label_shape: str = "real"
    gradient: Callable[[LabeledSample, np.ndarray], np.ndarray] | None = None
    lipschitz_rho: Callable[[LabeledSample], float] | None = None
    batch_evaluate: Callable[[Dataset, Any], np.ndarray] | None = None
    matrix_evaluate: Callable[[Dataset, np.ndarray], np.ndarray] | None = None
    paired_evaluate: Callable[[Dataset, np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        if self.label_shape not in LABEL_SHAPES:
            raise ValueError(f"unknown label shape {self.label_shape!r}")

    def pointwise(self, dataset: Dataset, theta) -> np.ndarray:
        """Per-sample losses at ``theta``, using the fastest available path."""
        if self.batch_evaluate is not None:
            return np.asarray(self.batch_evaluate(dataset, theta), dtype=float)
        if self.matrix_evaluate is not None:
            return np.asarray(
                self.matrix_evaluate(dataset, np.asarray([theta], dtype=float))
            )[:, 0]
        return np.asarray(
            [self.evaluate(s, theta) for s in dataset.samples], dtype=float
        )

    def loss_matrix(self, dataset: Dataset, thetas: np.ndarray) -> np.ndarray:
        """``(n, t)`` loss matrix over scalar parameters ``thetas``."""
        thetas = np.asarray(thetas, dtype=float)
        if self.matrix_evaluate is not None:
            return np.asarray(self.matrix_evaluate(dataset, thetas), dtype=float)
        return np.column_stack([self.pointwise(dataset, t) for t in thetas])


@dataclass
class CalibrationResult:
    """Chosen parameter plus provenance and diagnostics."""

    theta_hat: float | np.ndarray
    algorithm: str
    alpha_effective: float
    diagnostics: dict[str, float] = field(default_factory=dict)

    @property
    def theta(self):
        return self.theta_hat


def _index_order_sum(values: np.ndarray) -> float:
    # cumsum accumulates strictly in index order, unlike np.sum's pairwise
    # reduction; the last entry is the left-to-right total.
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return 0.0
    return float(np.cumsum(values)[-1])


def _check_theta(loss: LossSpec, theta) -> None:
    if np.ndim(theta) == 0:
        if loss.d != 1:
            raise ValueError(f"dimension mismatch: scalar theta, loss.d={loss.d}")
    elif np.shape(theta) != (loss.d,):
        raise ValueError(
            f"dimension mismatch: theta shape {np.shape(theta)}, loss.d={loss.d}"
        )


def empirical_risk(dataset: Dataset, loss: LossSpec, theta) -> float:
    """Mean loss over the dataset, accumulated in index order."""
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    if not isinstance(theta, float) or np.isfinite(theta):
        _check_theta(loss, theta)
    values = loss.pointwise(dataset, theta)
    return _index_order_sum(values) / len(dataset)


def loo_datasets(dataset: Dataset) -> list[Dataset]:
    """All leave-one-out datasets, the i-th omitting position i."""
    if len(dataset) < 2:
        raise ValueError("need at least 2 samples for leave-one-out")
    return [dataset.drop(i) for i in range(len(dataset))]


def _theta_of(result) -> Any:
    return result.theta_hat if isinstance(result, CalibrationResult) else result


def stability_gap(
    dataset: Dataset,
    algo: Callable[[Dataset], CalibrationResult],
    ref_algo: Callable[[Dataset], CalibrationResult],
    loss: LossSpec,
) -> float:
    """Empirical leave-one-out stability gap for one dataset realization.

    Computes ``(1/(n+1)) * sum_i [loss(z_i; algo(D_{-i})) -
    loss(z_i; ref_algo(D))]`` where the dataset plays the role of the full
    n+1 points. The expectation over data is the caller's job (Monte Carlo
    or bootstrap). If ``algo`` exposes a ``loo_fit`` method it is used as a
    fast path for the n+1 refits.
    """
    n_full = len(dataset)
    if n_full < 2:
        raise ValueError("need at least 2 samples for a stability gap")
    theta_star = _theta_of(ref_algo(dataset))

    loo_fit = getattr(algo, "loo_fit", None)
    if loo_fit is not None:
        loo_thetas = loo_fit(dataset)
    else:
        loo_thetas = []
        for i in range(n_full):
            try:
                loo_thetas.append(_theta_of(algo(dataset.drop(i))))
            except Exception as exc:
                raise CalibrationError(
                    f"calibrator failed on leave-one-out index {i}: {exc}"
                ) from exc

    if loss.paired_evaluate is not None and np.ndim(theta_star) == 0:
        loo_losses = np.asarray(
            loss.paired_evaluate(dataset, np.asarray(loo_thetas, dtype=float)),
            dtype=float,
        )
        diffs = loo_losses - loss.pointwise(dataset, theta_star)
    else:
        diffs = np.empty(n_full)
        for i, sample in enumerate(dataset.samples):
            diffs[i] = loss.evaluate(sample, loo_thetas[i]) - loss.evaluate(
                sample, theta_star
            )
    return _index_order_sum(diffs) / n_full
