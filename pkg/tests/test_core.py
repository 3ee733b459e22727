"""Tests for datasets, loss specs, and the stability-gap evaluator."""

import numpy as np
import pytest

from riskcal import (
    NEG_INF,
    CalibrationError,
    CalibrationResult,
    Dataset,
    LabeledSample,
    LossSpec,
    empirical_risk,
    loo_datasets,
    stability_gap,
)
from riskcal.core import _index_order_sum


def _indicator_loss():
    return LossSpec(
        evaluate=lambda s, theta: float(theta < s.x[0]),
        monotone_nonincreasing=True,
    )


def test_dataset_basics():
    ds = Dataset.from_arrays(np.array([[1.0], [2.0], [3.0]]), np.array([0, 1, 0]))
    assert len(ds) == 3
    assert len(ds.drop(1)) == 2
    assert ds.drop(1)[1].x[0] == 3.0
    assert ds.subset([2, 0]).labels().tolist() == [0, 0]
    ds.validate()


def test_dataset_validate_errors():
    with pytest.raises(ValueError, match="empty dataset"):
        Dataset([]).validate()
    bad = Dataset([LabeledSample(np.array([1.0]), 0), LabeledSample(np.array([1.0, 2.0]), 0)])
    with pytest.raises(ValueError, match="not constant"):
        bad.validate()


def test_index_order_sum_matches_sequential_accumulation():
    rng = np.random.default_rng(0)
    vals = rng.standard_normal(257) * 1e8
    acc = 0.0
    for v in vals:
        acc += v
    assert _index_order_sum(vals) == acc


def test_empirical_risk_indicator():
    ds = Dataset.from_arrays(np.array([[0.2], [0.6], [0.9]]), np.zeros(3))
    loss = _indicator_loss()
    assert empirical_risk(ds, loss, 0.5) == pytest.approx(2 / 3)
    assert empirical_risk(ds, loss, 1.0) == 0.0
    assert empirical_risk(ds, loss, NEG_INF) == 1.0


def test_empirical_risk_dimension_mismatch():
    ds = Dataset.from_arrays(np.array([[0.2]]), np.zeros(1))
    loss = LossSpec(evaluate=lambda s, t: 0.0, d=2)
    with pytest.raises(ValueError, match="dimension mismatch"):
        empirical_risk(ds, loss, 0.5)


def test_loo_datasets():
    ds = Dataset.from_arrays(np.arange(4.0).reshape(-1, 1), np.zeros(4))
    subs = loo_datasets(ds)
    assert len(subs) == 4
    assert all(len(s) == 3 for s in subs)
    assert subs[0][0].x[0] == 1.0
    with pytest.raises(ValueError, match="at least 2"):
        loo_datasets(ds.subset([0]))


def _mean_calibrator(ds):
    return CalibrationResult(
        theta_hat=float(np.mean([s.x[0] for s in ds])),
        algorithm="mean",
        alpha_effective=0.0,
    )


def test_stability_gap_matches_brute_force():
    rng = np.random.default_rng(3)
    ds = Dataset.from_arrays(rng.random((12, 1)), np.zeros(12))
    loss = LossSpec(evaluate=lambda s, t: (s.x[0] - t) ** 2)
    gap = stability_gap(ds, _mean_calibrator, _mean_calibrator, loss)
    # Brute force recomputation.
    full = _mean_calibrator(ds).theta_hat
    diffs = []
    for i in range(len(ds)):
        ti = _mean_calibrator(ds.drop(i)).theta_hat
        z = ds[i].x[0]
        diffs.append((z - ti) ** 2 - (z - full) ** 2)
    assert gap == pytest.approx(np.mean(diffs), abs=1e-15)
    assert gap >= 0.0  # removing a point moves the mean away from it


def test_stability_gap_uses_loo_fit_fast_path():
    class FastMean:
        calls = 0

        def __call__(self, ds):
            return _mean_calibrator(ds)

        def loo_fit(self, ds):
            FastMean.calls += 1
            x = ds.features()[:, 0]
            return (x.sum() - x) / (len(x) - 1)

    ds = Dataset.from_arrays(np.arange(6.0).reshape(-1, 1) / 6, np.zeros(6))
    loss = LossSpec(evaluate=lambda s, t: (s.x[0] - t) ** 2)
    fast = stability_gap(ds, FastMean(), _mean_calibrator, loss)
    slow = stability_gap(ds, _mean_calibrator, _mean_calibrator, loss)
    assert FastMean.calls == 1
    assert fast == pytest.approx(slow, abs=1e-14)


def test_stability_gap_wraps_calibrator_failure():
    def broken(ds):
        if len(ds) < 4:
            raise RuntimeError("boom")
        return _mean_calibrator(ds)

    ds = Dataset.from_arrays(np.arange(4.0).reshape(-1, 1), np.zeros(4))
    loss = LossSpec(evaluate=lambda s, t: 0.0)
    with pytest.raises(CalibrationError, match="leave-one-out index 0"):
        stability_gap(ds, broken, _mean_calibrator, loss)


def test_paired_evaluate_path_agrees_with_pointwise():
    ds = Dataset.from_arrays(np.linspace(0, 1, 9).reshape(-1, 1), np.zeros(9))
    base = LossSpec(evaluate=lambda s, t: abs(s.x[0] - t))
    paired = LossSpec(
        evaluate=base.evaluate,
        batch_evaluate=lambda d, t: np.abs(d.features()[:, 0] - t),
        paired_evaluate=lambda d, ts: np.abs(d.features()[:, 0] - ts),
    )
    g1 = stability_gap(ds, _mean_calibrator, _mean_calibrator, base)
    g2 = stability_gap(ds, _mean_calibrator, _mean_calibrator, paired)
    assert g1 == pytest.approx(g2, abs=1e-14)
