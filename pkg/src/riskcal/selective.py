"""Selective classification: abstention loss, exact index-space calibration,
leave-one-out displacement statistics, and the shrinking-band bound.

Everything here works on the sorted-confidence scale. With N points and
error bits E_1..E_N in ascending-confidence order, a threshold is identified
with an index j in 0..N: index 0 means "predict on everything" (threshold
below every confidence, the NEG_INF sentinel) and index j >= 1 means the
j-th smallest confidence.

Two index rules are implemented:

* ``"leftmost"`` (normative): the smallest index whose empirical risk is at
  most alpha, i.e. the direct leftmost root of the piecewise-constant risk.
  This is what the calibrator returns.
* ``"prefix_max"``: the largest index j with 1 + T_j >= 0, where
  T_j = j*alpha - (number of errors among the j lowest confidences). This
  is the index device used by the shrinking-band analysis; it does NOT
  coincide with the leftmost root in general (see ``compare_index_rules``),
  and it is the rule under which ``k_statistic <= band_crossing_count``
  holds deterministically.

All feasibility checks are phrased as ``integer <= integer * alpha`` with
identical operands in the naive and fast paths, so the two leave-one-out
computations agree bit-exactly.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np

from .core import (
    NEG_INF,
    CalibrationResult,
    Dataset,
    LabeledSample,
    LossSpec,
)

IndexRule = Literal["leftmost", "prefix_max"]


@dataclass
class SelectiveInstance:
    """Confidences, error bits, and the target level for one dataset.

    Confidences must be pairwise distinct; use :func:`make_instance` to
    ingest raw data with tie-breaking jitter.
    """

    p_hat: np.ndarray
    err: np.ndarray
    alpha: float

    def __post_init__(self):
        self.p_hat = np.asarray(self.p_hat, dtype=float)
        self.err = np.asarray(self.err, dtype=np.int64)
        if self.p_hat.shape != self.err.shape or self.p_hat.ndim != 1:
            raise ValueError("p_hat and err must be 1-D arrays of equal length")
        if not np.all((self.err == 0) | (self.err == 1)):
            raise ValueError("err must contain only 0/1")
        if not (0.0 < self.alpha < 1.0):
            raise ValueError("alpha must be in (0, 1)")
        if len(np.unique(self.p_hat)) != len(self.p_hat):
            raise ValueError("p_hat values must be distinct; use make_instance")

    def __len__(self) -> int:
        return len(self.p_hat)


def make_instance(
    p_hat, err, alpha: float, jitter_seed: int = 0
) -> SelectiveInstance:
    """Build an instance, perturbing tied confidences by rank-scaled jitter.

    Within each tie group, order is randomized by ``jitter_seed`` and the
    k-th member is shifted by k * 1e-12 / N, preserving order against all
    non-tied values.
    """
    p_hat = np.asarray(p_hat, dtype=float).copy()
    err = np.asarray(err)
    n = len(p_hat)
    uniq, inverse, counts = np.unique(p_hat, return_inverse=True, return_counts=True)
    if np.any(counts > 1):
        rng = np.random.default_rng(jitter_seed)
        step = 1e-12 / max(n, 1)
        for g in np.nonzero(counts > 1)[0]:
            members = np.nonzero(inverse == g)[0]
            rng.shuffle(members)
            for k, idx in enumerate(members[1:], start=1):
                p_hat[idx] += k * step
    return SelectiveInstance(p_hat=p_hat, err=err, alpha=alpha)


@dataclass
class SortedView:
    """Sorted-scale representation: ranks, sorted error bits, partial sums."""

    order: np.ndarray  # order[k] = sample index with rank k+1
    ranks: np.ndarray  # ranks[i] = 1-based rank of sample i (the V vector)
    errors: np.ndarray  # error bits in ascending-confidence order
    prefix: np.ndarray  # prefix[j] = number of errors among ranks <= j, j=0..N

    def t_sums(self, alpha: float) -> np.ndarray:
        """Partial sums T_j = j*alpha - (errors among the j lowest ranks)."""
        j = np.arange(len(self.errors) + 1)
        return j * alpha - self.prefix


def sorted_view(inst: SelectiveInstance) -> SortedView:
    order = np.argsort(inst.p_hat, kind="stable")
    ranks = np.empty(len(inst), dtype=np.int64)
    ranks[order] = np.arange(1, len(inst) + 1)
    errors = inst.err[order]
    prefix = np.concatenate([[0], np.cumsum(errors)])
    return SortedView(order=order, ranks=ranks, errors=errors, prefix=prefix)


def selective_loss(err_bit: int, p_hat: float, theta: float, alpha: float) -> float:
    """Pointwise abstention loss: 1-(1-alpha)*1{theta >= p_hat} on errors,
    alpha*1{theta >= p_hat} on correct predictions."""
    abstain = theta >= p_hat
    if err_bit:
        return 1.0 - (1.0 - alpha) * abstain
    return alpha * abstain


def _leftmost_feasible(prefix: np.ndarray, alpha: float) -> np.ndarray:
    # feasible(j) <=> errors above j <= (N - j) * alpha
    n = len(prefix) - 1
    total = prefix[-1]
    j = np.arange(n + 1)
    return (total - prefix) <= (n - j) * alpha


def _threshold_index(inst: SelectiveInstance, rule: IndexRule = "leftmost") -> int:
    view = sorted_view(inst)
    return _threshold_index_from_view(view.prefix, inst.alpha, rule)


def _threshold_index_from_view(
    prefix: np.ndarray, alpha: float, rule: IndexRule
) -> int:
    n = len(prefix) - 1
    if rule == "leftmost":
        feas = _leftmost_feasible(prefix, alpha)
        return int(feas.argmax())  # j = N is always feasible
    if rule == "prefix_max":
        j = np.arange(n + 1)
        ok = prefix <= j * alpha + 1.0
        return int(np.nonzero(ok)[0][-1])  # j = 0 always qualifies
    raise ValueError(f"unknown index rule {rule!r}")


def _index_to_theta(inst: SelectiveInstance, view: SortedView, j: int) -> float:
    if j == 0:
        return NEG_INF
    return float(inst.p_hat[view.order[j - 1]])


def fit_threshold(inst: SelectiveInstance) -> CalibrationResult:
    """Leftmost-root threshold: the smallest theta with empirical risk <= alpha.

    Returns NEG_INF when predicting on everything already controls the risk.
    """
    view = sorted_view(inst)
    n = len(inst)
    j = _threshold_index_from_view(view.prefix, inst.alpha, "leftmost")
    theta = _index_to_theta(inst, view, j)
    risk = (j * inst.alpha + (view.prefix[-1] - view.prefix[j])) / n
    return CalibrationResult(
        theta_hat=theta,
        algorithm="selective_leftmost_root",
        alpha_effective=inst.alpha,
        diagnostics={"index": float(j), "empirical_risk": float(risk)},
    )


def _loo_indices_naive(inst: SelectiveInstance, rule: IndexRule) -> np.ndarray:
    view = sorted_view(inst)
    n = len(inst)
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        v = view.ranks[i]
        reduced_errors = np.delete(view.errors, v - 1)
        reduced_prefix = np.concatenate([[0], np.cumsum(reduced_errors)])
        jr = _threshold_index_from_view(reduced_prefix, inst.alpha, rule)
        out[i] = jr if jr <= v - 1 else jr + 1
    return out


def _loo_indices_fast(inst: SelectiveInstance, rule: IndexRule) -> np.ndarray:
    view = sorted_view(inst)
    n = len(inst)
    alpha = inst.alpha
    prefix = view.prefix
    total = prefix[-1]
    j = np.arange(n + 1)

    if rule == "leftmost":
        # Candidates below the removed rank v: leftmost j <= v-1 with
        # (errors above j) - E_v <= (n-1-j)*alpha; candidates above:
        # leftmost J >= v+1 feasible on the full scale.
        feas_full = _leftmost_feasible(prefix, alpha)
        # first_from[J] = min index >= J with feas_full, n+1 when none.
        idx = np.where(feas_full, j, n + 1)
        first_from = np.concatenate(
            [np.minimum.accumulate(idx[::-1])[::-1], [n + 1]]
        )

        out = np.empty(n, dtype=np.int64)
        for e in (0, 1):
            mask = view.errors == e  # sorted positions k = v - 1
            if not mask.any():
                continue
            feas_e = (total - prefix[:n] - e) <= (n - 1 - j[:n]) * alpha
            # first_upto[v-1] = min index <= v-1 with feas_e, n+1 when none.
            first_upto = np.minimum.accumulate(np.where(feas_e, j[:n], n + 1))
            v = np.nonzero(mask)[0] + 1
            cand = first_upto[v - 1]
            out[mask] = np.where(cand <= v - 1, cand, first_from[v + 1])
        # out is indexed by sorted position; map back to sample order
        return out[view.ranks - 1]

    if rule == "prefix_max":
        ok_full = prefix <= j * alpha + 1.0
        # best_upto[v] = max index <= v with ok_full (index 0 always ok).
        best_upto = np.maximum.accumulate(np.where(ok_full, j, 0))

        out = np.empty(n, dtype=np.int64)
        for e in (0, 1):
            mask = view.errors == e
            if not mask.any():
                continue
            jj = np.arange(1, n + 1)
            ok_e = (prefix[1:] - e) <= (jj - 1) * alpha + 1.0
            # last_from[J] = max index >= J with ok_e, -1 when none.
            idx = np.where(ok_e, jj, -1)
            last_from = np.concatenate(
                [[0], np.maximum.accumulate(idx[::-1])[::-1], [-1]]
            )
            v = np.nonzero(mask)[0] + 1
            out[mask] = np.maximum(best_upto[v - 1], last_from[v + 1])
        return out[view.ranks - 1]

    raise ValueError(f"unknown index rule {rule!r}")


def loo_threshold_indices(
    inst: SelectiveInstance,
    rule: IndexRule = "leftmost",
    method: Literal["fast", "naive"] = "fast",
) -> np.ndarray:
    """Full-scale threshold index of each leave-one-out refit.

    Entry i is the index (0 = NEG_INF) of the threshold chosen when sample
    i is removed, expressed on the full-data sorted scale. The fast path
    uses the partial-sum shift identity; the naive path refits from
    scratch. They agree exactly.
    """
    if len(inst) < 2:
        raise ValueError("need at least 2 samples for leave-one-out")
    if method == "naive":
        return _loo_indices_naive(inst, rule)
    return _loo_indices_fast(inst, rule)


def k_statistic(inst: SelectiveInstance, rule: IndexRule = "leftmost") -> int:
    """Maximum absolute index displacement over all leave-one-out refits."""
    j_full = _threshold_index(inst, rule)
    loo = loo_threshold_indices(inst, rule=rule)
    return int(np.max(np.abs(loo - j_full)))


def band_crossing_count(inst: SelectiveInstance) -> int:
    """Number of j in 1..N-1 with T_j in [alpha-2, alpha-1).

    Equivalently the running error rate sits in the shrinking band
    (alpha + (1-alpha)/j, alpha + (2-alpha)/j]. In simulation this count
    tracks the expected displacement statistic E[K], but it does NOT bound
    K realization by realization under either index rule; see
    ``k_statistic`` for the exact displacement.
    """
    view = sorted_view(inst)
    n = len(inst)
    alpha = inst.alpha
    j = np.arange(1, n)
    p = view.prefix[1:n]
    lo = (j - 1) * alpha + 1.0
    hi = (j - 1) * alpha + 2.0
    return int(np.sum((p > lo) & (p <= hi)))


def band_endpoints(n_points: int, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    """Shrinking-band endpoints (alpha+(1-alpha)/j, alpha+(2-alpha)/j] for
    j = 1..n_points."""
    j = np.arange(1, n_points + 1)
    return alpha + (1 - alpha) / j, alpha + (2 - alpha) / j


def compare_index_rules(inst: SelectiveInstance) -> dict:
    """Report the leftmost-root and prefix-max indices side by side.

    The two need not coincide; this surfaces divergence instead of hiding
    it."""
    j_left = _threshold_index(inst, "leftmost")
    j_max = _threshold_index(inst, "prefix_max")
    return {
        "leftmost": j_left,
        "prefix_max": j_max,
        "diverged": j_left != j_max,
    }


# ---------------------------------------------------------------------------
# Monte Carlo stability estimation and scenario generators
# ---------------------------------------------------------------------------


@dataclass
class MonteCarloConfig:
    """A scenario generator (seed -> instance) plus a trial budget."""

    generator: Callable[[int], SelectiveInstance]
    trials: int
    seed: int = 0


@dataclass
class SelectiveBetaEstimate:
    beta: float
    se: float
    mean_k: float
    n_points: int
    trials: int


def selective_stability_beta(
    cfg: MonteCarloConfig, rule: IndexRule = "leftmost"
) -> SelectiveBetaEstimate:
    """Plug-in stability level 2*max(alpha, 1-alpha)*E[K]/(n+1).

    E[K] is estimated by Monte Carlo over the scenario generator; the
    reported standard error propagates the Monte Carlo error of mean K.
    """
    if cfg.trials < 1:
        raise ValueError("need at least one trial")
    ks = np.empty(cfg.trials)
    alpha = None
    n_points = None
    for t in range(cfg.trials):
        inst = cfg.generator(cfg.seed + t)
        ks[t] = k_statistic(inst, rule)
        alpha = inst.alpha
        n_points = len(inst)
    scale = 2.0 * max(alpha, 1.0 - alpha) / n_points
    se = scale * ks.std(ddof=1) / np.sqrt(cfg.trials) if cfg.trials > 1 else 0.0
    return SelectiveBetaEstimate(
        beta=scale * float(ks.mean()),
        se=float(se),
        mean_k=float(ks.mean()),
        n_points=n_points,
        trials=cfg.trials,
    )


SCENARIOS = ("well_ranked", "poorly_ranked_const", "adversarial")


def scenario_error_probs(kind: str, n: int, alpha: float) -> np.ndarray:
    """Per-rank error probabilities for the three benchmark scenarios,
    indexed by ascending confidence (rank 1 = least confident)."""
    i = np.arange(1, n + 2, dtype=float)
    if kind == "well_ranked":
        m = (n + 1) / 2.0
        return np.maximum(0.0, 2.0 * alpha * (1.0 - (i - 1.0) / m))
    if kind == "poorly_ranked_const":
        return np.full(n + 1, 0.35)
    if kind == "adversarial":
        return np.full(n + 1, alpha)
    raise ValueError(f"unknown scenario {kind!r}")


def scenario_generate(
    kind: str, n: int, alpha: float, seed: int
) -> SelectiveInstance:
    """Draw a synthetic instance of n+1 points for one of the benchmark
    scenarios. Confidences are the deterministic grid i/(n+2); error bits
    are independent Bernoulli draws with rank-dependent means."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    probs = scenario_error_probs(kind, n, alpha)
    errors_sorted = (rng.random(n + 1) < probs).astype(np.int64)
    p_sorted = np.arange(1, n + 2) / (n + 2)
    perm = rng.permutation(n + 1)
    return SelectiveInstance(
        p_hat=p_sorted[perm], err=errors_sorted[perm], alpha=alpha
    )


# ---------------------------------------------------------------------------
# Dataset/LossSpec adapters and CSV ingestion
# ---------------------------------------------------------------------------


def selective_loss_spec(alpha: float) -> LossSpec:
    """Abstention loss as a LossSpec over samples with x=[p_hat], y=err."""

    def evaluate(sample: LabeledSample, theta) -> float:
        return selective_loss(int(sample.y), float(sample.x[0]), theta, alpha)

    def batch(dataset: Dataset, theta) -> np.ndarray:
        p = dataset.features()[:, 0]
        e = dataset.labels().astype(float)
        abstain = (theta >= p).astype(float)
        return e * (1.0 - (1.0 - alpha) * abstain) + (1.0 - e) * alpha * abstain

    def paired(dataset: Dataset, thetas) -> np.ndarray:
        p = dataset.features()[:, 0]
        e = dataset.labels().astype(float)
        abstain = (np.asarray(thetas, dtype=float) >= p).astype(float)
        return e * (1.0 - (1.0 - alpha) * abstain) + (1.0 - e) * alpha * abstain

    return LossSpec(
        evaluate=evaluate,
        d=1,
        bounded_01=True,
        monotone_nonincreasing=False,
        label_shape="binary",
        batch_evaluate=batch,
        paired_evaluate=paired,
    )


def instance_to_dataset(inst: SelectiveInstance) -> Dataset:
    return Dataset(
        [
            LabeledSample(np.array([p]), int(e))
            for p, e in zip(inst.p_hat, inst.err)
        ]
    )


def dataset_to_instance(
    dataset: Dataset, alpha: float, jitter_seed: int = 0
) -> SelectiveInstance:
    p = dataset.features()[:, 0]
    e = dataset.labels().astype(np.int64)
    return make_instance(p, e, alpha, jitter_seed=jitter_seed)


@dataclass
class SelectiveCalibrator:
    """Leftmost-root selective calibrator usable in stability pipelines."""

    alpha: float
    jitter_seed: int = 0

    def __call__(self, dataset: Dataset) -> CalibrationResult:
        inst = dataset_to_instance(dataset, self.alpha, self.jitter_seed)
        return fit_threshold(inst)

    def loo_fit(self, dataset: Dataset) -> np.ndarray:
        inst = dataset_to_instance(dataset, self.alpha, self.jitter_seed)
        view = sorted_view(inst)
        loo = loo_threshold_indices(inst, rule="leftmost")
        sorted_p = inst.p_hat[view.order]
        return np.array(
            [NEG_INF if j == 0 else sorted_p[j - 1] for j in loo]
        )


def read_selective_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Read the two-column ``p_hat,err`` format (header required)."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"p_hat", "err"} <= set(reader.fieldnames):
            raise ValueError("selective CSV must have header columns p_hat,err")
        p, e = [], []
        for row in reader:
            p.append(float(row["p_hat"]))
            err = int(row["err"])
            if err not in (0, 1):
                raise ValueError("err column must contain only 0/1")
            e.append(err)
    return np.asarray(p), np.asarray(e, dtype=np.int64)
