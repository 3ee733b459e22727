"""Acceptance suite: one test and one printed pass/fail line per criterion.

Each test prints ``criterion N: PASS|FAIL -- detail`` before asserting, so
the verdict survives in captured output either way. Run with ``-s`` to see
the lines for passing tests too.
"""

import math
import time

import numpy as np
import pytest

import riskcal
from riskcal import (
    BootstrapConfig,
    CalibrationError,
    Dataset,
    ErmConfig,
    GridSpec,
    LossSpec,
    MonteCarloConfig,
    RidgeCalibrator,
    SelectiveCalibrator,
    SelectiveInstance,
    band_crossing_count,
    bootstrap_beta,
    conservative_gamma,
    debias_ols,
    epsilon_star,
    fit_threshold,
    general_risk_bound,
    grad_stability_beta,
    k_statistic,
    lambert_w_m1,
    loczi_bracket,
    min_eigen_ratio,
    monte_carlo_verify,
    reference_root,
    ridge_fit,
    run_experiment,
    scenario_generate,
    selective_loss,
    selective_loss_spec,
    selective_stability_beta,
    stability_gap,
)
from riskcal.crc import (
    DiscretizedCalibrator,
    LeftmostRootCalibrator,
    MonotoneCrcCalibrator,
)
from riskcal.experiments import figure1_tables
from riskcal.ltt import LttConfig, ltt_select
from riskcal.selective import (
    _loo_indices_fast,
    _loo_indices_naive,
    instance_to_dataset,
)


def _verdict(num, ok, detail):
    line = f"criterion {num}: {'PASS' if ok else 'FAIL'} -- {detail}"
    print(line)
    assert ok, line


def indicator_loss():
    return LossSpec(
        evaluate=lambda s, t: float(t < s.x[0]),
        bounded_01=True,
        monotone_nonincreasing=True,
        matrix_evaluate=lambda d, ts: (
            ts[None, :] < d.features()[:, [0]]
        ).astype(float),
    )


def bump_loss():
    """Non-monotone bounded loss (1-theta) * 1{theta >= z}; theta=1 is safe."""
    def matrix(d, ts):
        z = d.features()[:, [0]]
        return np.where(ts[None, :] >= z, 1.0 - ts[None, :], 0.0)

    return LossSpec(
        evaluate=lambda s, t: (1.0 - t) if t >= s.x[0] else 0.0,
        bounded_01=True,
        monotone_nonincreasing=False,
        matrix_evaluate=matrix,
    )


def _uniform_task(size, rng):
    z = rng.random(size)
    return Dataset.from_arrays(z.reshape(-1, 1), np.zeros(size))


def test_criterion_01_monotonic_risk_control():
    alpha, n, trials = 0.2, 100, 10_000
    start = time.perf_counter()
    report = monte_carlo_verify(
        task=_uniform_task,
        calibrator=MonotoneCrcCalibrator(indicator_loss(), alpha),
        loss=indicator_loss(),
        alpha=alpha,
        n=n,
        trials=trials,
        seed=0,
    )
    elapsed = time.perf_counter() - start
    ok = (
        report.completed_trials == trials
        and report.mean_test_loss <= alpha + 2 * report.mc_se
        and elapsed < 60.0
    )
    _verdict(
        1,
        ok,
        f"mean loss {report.mean_test_loss:.4f} <= {alpha} + 2*{report.mc_se:.4f}"
        f" over {trials} trials in {elapsed:.1f}s",
    )


def test_criterion_02_loo_dominates_reference():
    rng = np.random.default_rng(1)
    loss = indicator_loss()
    violations = 0
    checked = 0
    for _ in range(1000):
        n = int(rng.integers(3, 30))
        alpha = float(rng.uniform(0.15, 0.9))
        ds = Dataset.from_arrays(rng.random((n, 1)), np.zeros(n))
        algo = MonotoneCrcCalibrator(loss, alpha)
        try:
            loo = algo.loo_fit(ds)
        except CalibrationError:
            continue  # level infeasible on a leave-one-out split
        ref = reference_root(ds, loss, alpha).theta_hat
        checked += 1
        if np.any(loo < ref):
            violations += 1
    ok = violations == 0 and checked >= 900
    _verdict(2, ok, f"{violations} violations over {checked} fuzzed instances")


def test_criterion_03_lambert_w():
    rng = np.random.default_rng(2)
    # Log-uniform spread over the domain (-1/e, 0).
    xs = -np.exp(rng.uniform(np.log(1e-300), np.log(1 / math.e), 10_000))
    worst = 0.0
    bracket_ok = True
    for x in xs:
        w = lambert_w_m1(float(x))
        rel = abs(w * math.exp(w) - x) / abs(x)
        worst = max(worst, rel)
        lo, hi = loczi_bracket(float(x))
        bracket_ok &= lo <= w <= hi
    branch_ok = lambert_w_m1(-1.0 / math.e) == -1.0
    ok = worst <= 1e-12 and bracket_ok and branch_ok
    _verdict(
        3,
        ok,
        f"max relative identity residual {worst:.2e}, brackets "
        f"{'contain' if bracket_ok else 'MISS'} W, W(-1/e) exact: {branch_ok}",
    )


def test_criterion_04_discretized_bound():
    alpha, n, m, trials = 0.3, 200, 20, 5000
    slack = general_risk_bound(n, m)
    report = monte_carlo_verify(
        task=_uniform_task,
        calibrator=DiscretizedCalibrator(bump_loss(), alpha, GridSpec(m)),
        loss=bump_loss(),
        alpha=alpha,
        n=n,
        trials=trials,
        seed=3,
        slack_budget=slack,
    )
    eps = epsilon_star(n, m)
    stationarity = abs(
        1.0 - 4.0 * n * (m + 1) * eps * math.exp(-2 * n * eps**2)
    )
    ok = (
        report.completed_trials == trials
        and report.mean_test_loss <= alpha + slack + 2 * report.mc_se
        and stationarity <= 1e-8
    )
    _verdict(
        4,
        ok,
        f"mean loss {report.mean_test_loss:.4f} <= {alpha} + {slack:.4f} + "
        f"2*{report.mc_se:.4f}; eps* stationarity {stationarity:.1e}",
    )


def test_criterion_05_lipschitz_shift_bound():
    # Linear loss 0.5 - slope*(theta - z): Lipschitz constant L = slope in
    # theta, empirical risk has constant slope at its root, linearity radius
    # covers the whole interval.
    slope = 0.3
    L = slope
    alpha, n, trials = 0.3, 200, 2000

    loss = LossSpec(
        evaluate=lambda s, t: 0.5 - slope * (t - s.x[0]),
        monotone_nonincreasing=True,
        matrix_evaluate=lambda d, ts: 0.5
        - slope * (ts[None, :] - d.features()[:, [0]]),
    )
    calib = LeftmostRootCalibrator(loss, alpha, interval=(0.0, 2.0))
    shift_bound = 1.0 / (slope * (n + 1))
    max_shift = 0.0
    losses = np.empty(trials)
    for t in range(trials):
        rng = np.random.default_rng([5, t])
        z = rng.random(n + 1)
        full = Dataset.from_arrays(z.reshape(-1, 1), np.zeros(n + 1))
        theta_full = calib(full).theta_hat
        shifts = np.abs(calib.loo_fit(full) - theta_full)
        max_shift = max(max_shift, float(shifts.max()))
        theta_n = calib(full.subset(range(n))).theta_hat
        losses[t] = loss.evaluate(full[n], theta_n)
    mean = losses.mean()
    se = losses.std(ddof=1) / np.sqrt(trials)
    ok = max_shift <= shift_bound and mean <= alpha + L / (slope * (n + 1)) + 2 * se
    _verdict(
        5,
        ok,
        f"max LOO shift {max_shift:.2e} <= {shift_bound:.2e}; mean loss "
        f"{mean:.4f} <= {alpha} + {L / (slope * (n + 1)):.4f} + 2*{se:.4f}",
    )


def _random_selective_instance(rng):
    n = int(rng.integers(2, 61))
    alpha = float(rng.choice([0.1, 0.25, 0.5, 0.75]))
    p = rng.random(n)
    while len(np.unique(p)) != n:
        p = rng.random(n)
    e = (rng.random(n) < rng.random()).astype(int)
    return SelectiveInstance(p, e, alpha)


def test_criterion_06_selective_deterministic_inequalities():
    rng = np.random.default_rng(6)
    wsum_violations = 0
    band_violations = 0
    fast_mismatches = 0
    worst_band_gap = 0
    for _ in range(1000):
        inst = _random_selective_instance(rng)
        alpha = inst.alpha
        for rule in ("leftmost", "prefix_max"):
            if not np.array_equal(
                _loo_indices_fast(inst, rule), _loo_indices_naive(inst, rule)
            ):
                fast_mismatches += 1
        k = k_statistic(inst)
        theta_full = fit_threshold(inst).theta_hat
        loo_thetas = SelectiveCalibrator(alpha).loo_fit(instance_to_dataset(inst))
        wsum = sum(
            selective_loss(int(e), float(p), ti, alpha)
            - selective_loss(int(e), float(p), theta_full, alpha)
            for p, e, ti in zip(inst.p_hat, inst.err, loo_thetas)
        )
        if wsum > 2.0 * max(alpha, 1.0 - alpha) * k + 1e-9:
            wsum_violations += 1
        band = band_crossing_count(inst)
        if k > band:
            band_violations += 1
            worst_band_gap = max(worst_band_gap, k - band)
    ok = wsum_violations == 0 and band_violations == 0 and fast_mismatches == 0
    _verdict(
        6,
        ok,
        f"weighted-gap bound violations {wsum_violations}, band-count bound "
        f"violations {band_violations} (worst K excess {worst_band_gap}), "
        f"fast/naive LOO mismatches {fast_mismatches}, over 1000 instances",
    )


def test_criterion_07_selective_end_to_end():
    alpha, n, trials = 0.25, 500, 2000
    start = time.perf_counter()
    losses = np.empty(trials)
    ks = np.empty(trials)
    for t in range(trials):
        inst = scenario_generate("well_ranked", n, alpha, seed=[7, t])
        ks[t] = k_statistic(inst)
        train = SelectiveInstance(inst.p_hat[:n], inst.err[:n], alpha)
        theta = fit_threshold(train).theta_hat
        losses[t] = selective_loss(
            int(inst.err[n]), float(inst.p_hat[n]), theta, alpha
        )
    elapsed = time.perf_counter() - start
    mean = losses.mean()
    se = losses.std(ddof=1) / np.sqrt(trials)
    beta = 2.0 * max(alpha, 1.0 - alpha) * ks.mean() / (n + 1)
    ok = mean <= alpha + beta + 2 * se and elapsed < 300.0
    _verdict(
        7,
        ok,
        f"selective error {mean:.4f} <= {alpha} + {beta:.5f} + 2*{se:.4f}; "
        f"mean K {ks.mean():.3f}; {elapsed:.1f}s",
    )


def test_criterion_08_trajectory_tables():
    alpha, n, seeds = 0.25, 500, 500
    tables, summary = figure1_tables(alpha, n, seeds=seeds, base_seed=0)
    j = np.arange(1, n + 2)
    bands_ok = True
    for rows in tables.values():
        lo = np.array([r["band_lo"] for r in rows])
        hi = np.array([r["band_hi"] for r in rows])
        bands_ok &= np.array_equal(lo, alpha + (1 - alpha) / j)
        bands_ok &= np.array_equal(hi, alpha + (2 - alpha) / j)
    wr = summary["mean_band_crossings"]["well_ranked"]
    ok = (
        set(tables) == {"well_ranked", "poorly_ranked_const", "adversarial"}
        and bands_ok
        and np.isfinite(wr)
    )
    _verdict(
        8,
        ok,
        f"band endpoints exact: {bands_ok}; well-ranked mean band crossings "
        f"{wr:.2f} over {seeds} seeds",
    )


def test_criterion_09_quadratic_stability():
    lam, n, trials = 0.5, 199, 2000
    cfg = ErmConfig(lam=lam)
    calib = RidgeCalibrator(cfg)
    # Quadratic loss on x = 1, y in [0, 1]: |d loss / d theta| = |theta - y|
    # <= 1 on the reachable set, so rho = 1 per sample.
    loss = LossSpec(
        evaluate=lambda s, t: 0.5 * float(np.atleast_1d(t)[0] - s.y) ** 2,
        batch_evaluate=lambda d, t: 0.5
        * (float(np.atleast_1d(t)[0]) - d.labels()) ** 2,
        paired_evaluate=lambda d, ts: 0.5
        * (np.asarray([np.atleast_1d(t)[0] for t in ts]) - d.labels()) ** 2,
    )
    gaps = np.empty(trials)
    shift_ok = True
    for t in range(trials):
        rng = np.random.default_rng([9, t])
        y = rng.random(n + 1)
        ds = Dataset.from_arrays(np.ones((n + 1, 1)), y)
        gaps[t] = stability_gap(ds, calib, calib, loss)
        if t < 100:  # deterministic shift bound, checked on a subset
            theta_full = np.atleast_1d(calib(ds).theta_hat)
            g = theta_full[0] - y  # per-sample gradient at the full fit
            total = g.sum()
            s_loo = (total - g) / ((n + 1) * n) - g / (n + 1)
            loo = np.asarray(calib.loo_fit(ds), dtype=float).reshape(-1)
            shifts = np.abs(loo - theta_full[0])
            shift_ok &= bool(np.all(shifts <= np.abs(s_loo) / lam + 1e-12))
    bound = 2.0 * 1.0 / (lam * (n + 1))
    mean = gaps.mean()
    se = gaps.std(ddof=1) / np.sqrt(trials)
    ok = shift_ok and mean <= bound + 2 * se
    _verdict(
        9,
        ok,
        f"mean stability gap {mean:.2e} <= {bound:.4f} + 2*{se:.1e}; "
        f"per-instance shift bound holds: {shift_ok}",
    )


# Enumerable discrete regression population shared by criteria 10 and 11:
# x uniform over {(1,0), (0,1), (1,1)}, y | x ~ Bernoulli(q_x).
_POP_X = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
_POP_Q = np.array([0.3, 0.6, 0.5])


def _pop_draw(rng, n):
    cells = rng.integers(0, 3, n)
    x = _POP_X[cells]
    y = (rng.random(n) < _POP_Q[cells]).astype(float)
    return Dataset.from_arrays(x, y)


def _pop_gradient(theta):
    """Exact E[x (x'theta - y)] over the enumerable population."""
    resid = _POP_X @ theta - _POP_Q
    return (_POP_X * resid[:, None]).mean(axis=0)


def _pop_loss_spec():
    return LossSpec(
        evaluate=lambda s, t: 0.5 * float(s.x @ np.atleast_1d(t) - s.y) ** 2,
        d=2,
        bounded_01=False,
        gradient=lambda s, t: s.x * (s.x @ np.atleast_1d(t) - s.y),
        lipschitz_rho=lambda s: 2.0,
    )


def _gradient_trials(lam, gamma, n, trials, seed):
    grads = np.empty((trials, 2))
    thetas = np.empty((trials, 2))
    mus = np.empty(trials)
    for t in range(trials):
        rng = np.random.default_rng([seed, t])
        ds = _pop_draw(rng, n)
        theta = ridge_fit(ds, ErmConfig(lam=lam, gamma=gamma)).theta_hat
        thetas[t] = theta
        grads[t] = _pop_gradient(theta)
        mus[t] = min_eigen_ratio(ds)
    return grads, thetas, mus


def test_criterion_10_gradient_risk_control():
    lam, n, trials = 0.5, 50, 5000
    grads, thetas, mus = _gradient_trials(lam, 0.0, n, trials, seed=10)
    mu = float(mus.min())
    rng = np.random.default_rng(1010)
    report = grad_stability_beta(
        _pop_draw(rng, 2000), _pop_loss_spec(), ErmConfig(lam=lam), mu
    )
    mean_grad = grads.mean(axis=0)
    se = grads.std(axis=0, ddof=1) / np.sqrt(trials)
    rhs = report.beta_vec - lam * thetas.mean(axis=0) + 2 * se
    grad_ok = bool(np.all(mean_grad <= rhs))

    # Train-gradient term is exactly zero (to 1e-10) at lam = gamma = 0.
    ds0 = _pop_draw(np.random.default_rng(1011), 500)
    theta0 = ridge_fit(ds0, ErmConfig(lam=0.0)).theta_hat
    resid0 = ds0.features() @ theta0 - ds0.labels()
    train_grad = np.abs(ds0.features().T @ resid0 / len(ds0))
    train_ok = bool(np.all(train_grad <= 1e-10))

    ok = grad_ok and train_ok
    _verdict(
        10,
        ok,
        f"E[grad] {np.round(mean_grad, 4)} <= beta - lam*E[theta] + 2se "
        f"{np.round(rhs, 4)} componentwise: {grad_ok}; unregularized train "
        f"gradient residual {train_grad.max():.1e}",
    )


def test_criterion_11_conservative_shift():
    lam, n, trials = 0.5, 50, 5000
    # Pilot at gamma = 0 supplies the plug-in terms for the shift formula.
    grads, thetas, mus = _gradient_trials(lam, 0.0, n, 500, seed=11)
    mu = float(mus.min())
    rng = np.random.default_rng(1110)
    pilot = grad_stability_beta(
        _pop_draw(rng, 2000), _pop_loss_spec(), ErmConfig(lam=lam), mu
    )
    gamma = conservative_gamma(
        test_grad_term=pilot.test_grad_norm_mean,
        train_grad_term=pilot.train_grad_norm_mean,
        rho_mean=pilot.rho_mean,
        mu=mu,
        lam=lam,
        n=n,
        theta_inf_norm=float(np.abs(thetas.mean(axis=0)).max()),
    )
    grads_c, _, _ = _gradient_trials(lam, gamma, n, trials, seed=1111)
    mean_grad = grads_c.mean(axis=0)
    se = grads_c.std(axis=0, ddof=1) / np.sqrt(trials)
    grad_ok = bool(np.all(mean_grad <= 2 * se))

    boundary_ok = False
    try:
        conservative_gamma(0.1, 0.1, rho_mean=1.0, mu=0.0, lam=1.0, n=1,
                           theta_inf_norm=0.0)
    except CalibrationError:
        boundary_ok = True

    ok = grad_ok and boundary_ok
    _verdict(
        11,
        ok,
        f"gamma {gamma:.4f}: E[grad] {np.round(mean_grad, 4)} <= 2se "
        f"{np.round(2 * se, 4)} componentwise: {grad_ok}; boundary error "
        f"raised: {boundary_ok}",
    )


def test_criterion_12_debias_certificate():
    # Overlapping-group population: race one-hot over 3 levels plus
    # independent sex and age indicators; d = 5 binary columns.
    race_p = np.array([0.5, 0.3, 0.2])
    sex_p, age_p = 0.5, 0.4
    w_true = np.array([0.3, -0.2, 0.1, 0.25, -0.15])
    noise = 0.1
    n, trials = 1000, 500

    # E[x | x_j = 1] for each group column under independence.
    race_mean = race_p.copy()
    cond = np.zeros((5, 5))
    for j in range(3):
        cond[j, :3] = np.eye(3)[j]
        cond[j, 3] = sex_p
        cond[j, 4] = age_p
    cond[3] = [*race_mean, 1.0, age_p]
    cond[4] = [*race_mean, sex_p, 1.0]

    covered = np.zeros(5)
    in_sample_ok = True
    for t in range(trials):
        rng = np.random.default_rng([12, t])
        x = np.zeros((n, 5))
        x[np.arange(n), rng.choice(3, n, p=race_p)] = 1.0
        x[:, 3] = rng.random(n) < sex_p
        x[:, 4] = rng.random(n) < age_p
        f = rng.standard_normal(n)
        y = f + x @ w_true + noise * rng.standard_normal(n)
        report = debias_ols(x, y, f, gamma=0.0)
        theta = np.asarray(report.theta)
        for j, g in enumerate(report.groups):
            in_sample_ok &= abs(g.in_sample_bias) <= 1e-8
            oos_bias = float(cond[j] @ (w_true - theta))
            covered[j] += abs(oos_bias) <= g.half_width
    rates = covered / trials
    ok = bool(np.all(rates >= 0.95)) and in_sample_ok
    _verdict(
        12,
        ok,
        f"per-group certificate coverage {np.round(rates, 3)} (need >= 0.95);"
        f" in-sample group means zero at gamma=0: {in_sample_ok}",
    )


def test_criterion_13_bootstrap_beta():
    loss = indicator_loss()
    alpha = 0.4
    mono_ok = True
    for seed in range(20):
        rng = np.random.default_rng(seed)
        ds = Dataset.from_arrays(rng.random((40, 1)), np.zeros(40))
        est = bootstrap_beta(
            ds,
            MonotoneCrcCalibrator(loss, alpha),
            LeftmostRootCalibrator(loss, alpha),
            loss,
            BootstrapConfig(B=30, seed=seed),
        )
        mono_ok &= est.beta_hat == 0.0

    # Selective family on matched well-ranked seeds: bootstrap estimate vs
    # the displacement-statistic plug-in.
    sel_alpha, n = 0.25, 200
    boots = []
    for seed in range(5):
        inst = scenario_generate("well_ranked", n, sel_alpha, seed=seed)
        ds = instance_to_dataset(inst)
        algo = SelectiveCalibrator(sel_alpha)
        est = bootstrap_beta(
            ds, algo, algo, selective_loss_spec(sel_alpha),
            BootstrapConfig(B=50, seed=seed),
        )
        boots.append((est.beta_hat, est.se))
    plug = selective_stability_beta(
        MonteCarloConfig(
            generator=lambda s: scenario_generate("well_ranked", n, sel_alpha, s),
            trials=5,
            seed=0,
        )
    )
    boot_mean = float(np.mean([b for b, _ in boots]))
    boot_se = float(np.sqrt(np.mean([s**2 for _, s in boots]) / len(boots)))
    combined_se = math.sqrt(boot_se**2 + plug.se**2)
    sel_ok = abs(boot_mean - plug.beta) <= 3 * combined_se + 1e-12
    ok = mono_ok and sel_ok
    _verdict(
        13,
        ok,
        f"monotone family beta_hat exactly 0 on 20 seeds: {mono_ok}; "
        f"selective bootstrap {boot_mean:.4g} vs plug-in {plug.beta:.4g} "
        f"within 3*{combined_se:.4g}: {sel_ok}",
    )


def test_criterion_14_ltt_baseline():
    # Validity on a task with known population risk R(theta) = 1 - theta.
    alpha, delta, n, trials = 0.3, 0.1, 100, 5000
    loss = indicator_loss()
    cfg = LttConfig(grid=np.linspace(0.0, 1.0, 51), delta=delta)
    exceed = np.empty(trials)
    for t in range(trials):
        rng = np.random.default_rng([14, t])
        ds = _uniform_task(n, rng)
        theta = ltt_select(ds, loss, cfg, alpha).theta_hat
        exceed[t] = float(1.0 - theta > alpha)
    freq = exceed.mean()
    se = exceed.std(ddof=1) / np.sqrt(trials)
    validity_ok = freq <= delta + 3 * se

    # Directional conservativeness on seeded selective trials.
    rows, _ = run_experiment(
        {
            "task": "selective",
            "scenario": "adversarial",
            "alpha": 0.25,
            "n": 100,
            "trials": 100,
            "seed": 14,
            "methods": ["crc", "crc_c", "ltt"],
            "bootstrap": {"B": 20},
            "ltt": {"delta": 0.1, "grid_points": 51},
        }
    )
    by_trial = {}
    for r in rows:
        by_trial.setdefault(r["trial"], {})[r["method"]] = r["theta"]
    ordered = sum(
        1
        for v in by_trial.values()
        if v["ltt"] >= v["crc_c"] >= v["crc"]
    )
    direction_ok = ordered >= 90
    ok = validity_ok and direction_ok
    _verdict(
        14,
        ok,
        f"P(R > alpha) {freq:.4f} <= {delta} + 3*{se:.4f}: {validity_ok}; "
        f"ltt >= crc_c >= crc in {ordered}/100 trials",
    )


def test_criterion_15_cli_determinism(tmp_path):
    import json
    from click.testing import CliRunner

    from riskcal.cli import main

    rng = np.random.default_rng(15)
    sel_csv = tmp_path / "sel.csv"
    p = rng.random(60)
    e = (rng.random(60) < 0.3).astype(int)
    sel_csv.write_text(
        "p_hat,err\n" + "\n".join(f"{pi},{ei}" for pi, ei in zip(p, e)) + "\n"
    )
    deb_csv = tmp_path / "deb.csv"
    g = rng.integers(0, 2, 80)
    f = rng.standard_normal(80)
    y = f + 0.2 * g + 0.05 * rng.standard_normal(80)
    deb_csv.write_text(
        "f,y,grp_a,grp_b\n"
        + "\n".join(
            f"{f[i]},{y[i]},{g[i]},{1 - g[i]}" for i in range(80)
        )
        + "\n"
    )
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text(
        "task: selective\nscenario: well_ranked\nalpha: 0.25\nn: 30\n"
        "trials: 2\nseed: 0\nmethods: [crc, ltt]\n"
        "ltt: {delta: 0.1, grid_points: 21}\n"
    )
    invocations = [
        ["calibrate", str(sel_csv)],
        ["bootstrap-beta", str(sel_csv), "-B", "10"],
        ["verify", "--scenario", "well_ranked", "--n", "40", "--trials", "120"],
        ["experiment", str(cfg)],
        ["figure1", "--n", "40", "--seeds", "5"],
        ["debias", str(deb_csv)],
    ]
    runner = CliRunner()
    mismatched = []
    for args in invocations:
        outs = []
        for rep in ("a", "b"):
            out = tmp_path / f"{args[0]}_{rep}"
            res = runner.invoke(
                main,
                ["--seed", "3", "--alpha", "0.25", "--out-dir", str(out)] + args,
            )
            assert res.exit_code == 0, (args, res.output)
            outs.append(out)
        files_a = sorted(q.name for q in outs[0].iterdir())
        files_b = sorted(q.name for q in outs[1].iterdir())
        if files_a != files_b:
            mismatched.append(args[0])
            continue
        for name in files_a:
            if (outs[0] / name).read_bytes() != (outs[1] / name).read_bytes():
                mismatched.append(f"{args[0]}/{name}")
    ok = not mismatched
    _verdict(
        15,
        ok,
        "all six subcommands byte-identical across repeated runs"
        if ok
        else f"mismatched outputs: {mismatched}",
    )
