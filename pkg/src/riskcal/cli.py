"""Command-line interface.

Subcommands: calibrate, bootstrap-beta, verify, experiment, figure1,
debias. Delimited outputs (CSV or JSON records, per ``--format``) are
written to ``--out-dir`` together with rendered PNG figures for the
report-style commands. Exit codes: 0 on success, 2 when ``verify`` finds
the risk guarantee violated, 1 on any error.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from . import erm, experiments, plots
from . import selective as sel
from .stability import BootstrapConfig, bootstrap_beta, crc_conservative
from .harness import monte_carlo_verify


@click.group()
@click.option("--seed", type=int, default=0, show_default=True, help="Base RNG seed.")
@click.option("--alpha", type=float, default=0.25, show_default=True,
              help="Target risk level.")
@click.option("--out-dir", type=click.Path(file_okay=False), default=".",
              show_default=True, help="Directory for output files.")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv",
              show_default=True, help="Delimited output format.")
@click.pass_context
def main(ctx, seed, alpha, out_dir, fmt):
    """Stability-based risk-control calibration toolkit."""
    ctx.obj = {
        "seed": seed,
        "alpha": alpha,
        "out_dir": Path(out_dir),
        "fmt": fmt,
    }
    ctx.obj["out_dir"].mkdir(parents=True, exist_ok=True)


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.floating, float)):
        v = float(value)
        # Non-finite values are not valid JSON; encode as strings.
        return v if np.isfinite(v) else str(v)
    if isinstance(value, (np.integer, np.bool_)):
        return value.item()
    return value


def _write_json(path: Path, payload) -> Path:
    path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")
    return path


def _echo_written(paths) -> None:
    for p in paths:
        click.echo(f"wrote {p}")


@main.command()
@click.argument("csv_path", type=click.Path(exists=True, dir_okay=False))
@click.pass_obj
def calibrate(obj, csv_path):
    """Calibrate a selective threshold from a p_hat,err CSV."""
    p_hat, err = sel.read_selective_csv(csv_path)
    inst = sel.make_instance(p_hat, err, obj["alpha"], jitter_seed=obj["seed"])
    result = sel.fit_threshold(inst)
    payload = {
        "theta_hat": result.theta_hat,
        "algorithm": result.algorithm,
        "alpha": obj["alpha"],
        "alpha_effective": result.alpha_effective,
        "diagnostics": result.diagnostics,
    }
    path = _write_json(obj["out_dir"] / "calibration.json", payload)
    _echo_written([path])


@main.command("bootstrap-beta")
@click.argument("csv_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--replicates", "-B", "replicates", type=int, default=200,
              show_default=True, help="Bootstrap replicate count.")
@click.pass_obj
def bootstrap_beta_cmd(obj, csv_path, replicates):
    """Bootstrap the stability level of the selective calibrator."""
    p_hat, err = sel.read_selective_csv(csv_path)
    inst = sel.make_instance(p_hat, err, obj["alpha"], jitter_seed=obj["seed"])
    dataset = sel.instance_to_dataset(inst)
    algo = sel.SelectiveCalibrator(obj["alpha"], jitter_seed=obj["seed"])
    estimate = bootstrap_beta(
        dataset,
        algo,
        algo,
        sel.selective_loss_spec(obj["alpha"]),
        BootstrapConfig(B=replicates, seed=obj["seed"]),
    )
    path = _write_json(
        obj["out_dir"] / "bootstrap_beta.json", estimate.report(obj["alpha"])
    )
    _echo_written([path])


@main.command()
@click.option("--scenario", type=click.Choice(list(sel.SCENARIOS)),
              default="well_ranked", show_default=True)
@click.option("--n", type=int, default=200, show_default=True,
              help="Calibration sample size per trial.")
@click.option("--trials", type=int, default=1000, show_default=True)
@click.option("--slack", type=float, default=0.0, show_default=True,
              help="Allowed slack above alpha.")
@click.pass_obj
def verify(obj, scenario, n, trials, slack):
    """Monte Carlo check of the marginal risk guarantee (exit 2 on failure)."""
    report = monte_carlo_verify(
        task=experiments.scenario_task(scenario, obj["alpha"]),
        calibrator=sel.SelectiveCalibrator(obj["alpha"], jitter_seed=obj["seed"]),
        loss=sel.selective_loss_spec(obj["alpha"]),
        alpha=obj["alpha"],
        n=n,
        trials=trials,
        seed=obj["seed"],
        slack_budget=slack,
    )
    path = _write_json(obj["out_dir"] / "verify.json", report.as_dict())
    _echo_written([path])
    if not report.passed:
        click.echo("guarantee check FAILED", err=True)
        sys.exit(2)
    click.echo("guarantee check passed")


@main.command()
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False))
@click.pass_obj
def experiment(obj, config_path):
    """Run a configured method comparison (CRC / CRC-C / LTT)."""
    config = experiments.load_config(config_path)
    rows, summary = experiments.run_experiment(config)
    paths = [
        experiments.write_table(rows, obj["out_dir"] / "experiment", obj["fmt"]),
        _write_json(obj["out_dir"] / "experiment_summary.json", summary),
        plots.render_experiment(
            rows, config["alpha"], obj["out_dir"] / "experiment.png"
        ),
    ]
    _echo_written(paths)


@main.command()
@click.option("--n", type=int, default=500, show_default=True)
@click.option("--seeds", type=int, default=500, show_default=True,
              help="Scenario draws averaged per trajectory.")
@click.pass_obj
def figure1(obj, n, seeds):
    """Emit running-error-rate trajectories with shrinking-band endpoints."""
    tables, summary = experiments.figure1_tables(
        obj["alpha"], n, seeds, base_seed=obj["seed"]
    )
    paths = []
    for kind, rows in tables.items():
        paths.append(
            experiments.write_table(
                rows, obj["out_dir"] / f"figure1_{kind}", obj["fmt"]
            )
        )
    paths.append(_write_json(obj["out_dir"] / "figure1_summary.json", summary))
    paths.append(
        plots.render_band_trajectories(
            tables, obj["alpha"], obj["out_dir"] / "figure1.png"
        )
    )
    _echo_written(paths)


@main.command()
@click.argument("csv_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--gamma", type=float, default=0.0, show_default=True,
              help="Linear shift coefficient of the correction objective.")
@click.pass_obj
def debias(obj, csv_path, gamma):
    """Fit a multigroup debiasing correction from an f,y,g1..gd CSV."""
    x, y, f, names = erm.read_debias_csv(csv_path)
    report = erm.debias_ols(x, y, f, gamma=gamma)
    group_rows = [
        {
            "group": names[j],
            "frequency": g.frequency,
            "adjusted_mean": g.adjusted_mean,
            "in_sample_bias": g.in_sample_bias,
            "half_width": g.half_width,
            "certifiable": g.certifiable,
        }
        for j, g in enumerate(report.groups)
    ]
    paths = [
        experiments.write_table(
            group_rows, obj["out_dir"] / "debias_groups", obj["fmt"]
        ),
        _write_json(
            obj["out_dir"] / "debias_theta.json",
            {
                "theta": [float(v) for v in report.theta],
                "mu": report.mu,
                "mean_abs_residual": report.mean_abs_residual,
                "gamma": gamma,
            },
        ),
        plots.render_debias_groups(group_rows, obj["out_dir"] / "debias.png"),
    ]
    _echo_written(paths)


def cli_entry() -> None:  # pragma: no cover - thin wrapper
    main()


if __name__ == "__main__":  # pragma: no cover
    main()
