"""Config-driven method comparisons and the shrinking-band trajectory export.

``run_experiment`` takes a declarative YAML config, runs the requested
calibrators over repeated scenario draws, and emits per-trial tables
(method, trial, theta, test risk, prediction rate) plus a JSON summary.
``figure1_tables`` emits the running-error-rate trajectories of the three
benchmark scenarios together with the exact shrinking-band endpoints.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import jsonschema
import numpy as np
import yaml

from . import selective as sel
from .core import Dataset
from .ltt import LttConfig, ltt_select
from .stability import AlgoFamily, BootstrapConfig, crc_conservative

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["task", "alpha", "n", "trials", "seed"],
    "properties": {
        "task": {"enum": ["selective"]},
        "scenario": {"enum": list(sel.SCENARIOS)},
        "alpha": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "n": {"type": "integer", "minimum": 2},
        "trials": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer"},
        "methods": {
            "type": "array",
            "items": {"enum": ["crc", "crc_c", "ltt"]},
            "minItems": 1,
        },
        "bootstrap": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"B": {"type": "integer", "minimum": 1}},
        },
        "ltt": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "delta": {
                    "type": "number",
                    "exclusiveMinimum": 0,
                    "exclusiveMaximum": 1,
                },
                "grid_points": {"type": "integer", "minimum": 2},
            },
        },
    },
}


def _line_of_key(text: str, key: str) -> int | None:
    for lineno, line in enumerate(text.splitlines(), start=1):
        if line.split("#")[0].strip().startswith(f"{key}:") or line.split("#")[
            0
        ].strip().startswith(f"- {key}"):
            return lineno
    return None


def load_config(path) -> dict:
    """Parse and schema-validate a YAML experiment config.

    Validation failures are reported with the offending key and, when it
    can be located, its line number in the file.
    """
    text = Path(path).read_text()
    try:
        cfg = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ValueError(f"config parse error: {exc}") from exc
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        key = str(exc.path[-1]) if exc.path else (
            exc.message.split("'")[1] if "'" in exc.message else ""
        )
        line = _line_of_key(text, key) if key else None
        where = f" (line {line})" if line else ""
        raise ValueError(f"config error at '{key}'{where}: {exc.message}") from exc
    cfg.setdefault("scenario", "well_ranked")
    cfg.setdefault("methods", ["crc", "crc_c", "ltt"])
    cfg.setdefault("bootstrap", {}).setdefault("B", 50)
    cfg.setdefault("ltt", {})
    cfg["ltt"].setdefault("delta", 0.1)
    cfg["ltt"].setdefault("grid_points", 101)
    return cfg


def population_selective_risk(
    kind: str, n: int, alpha: float, theta: float
) -> float:
    """Exact abstention risk under a benchmark scenario's population.

    The population is uniform over the confidence grid i/(n+2) with
    rank-dependent Bernoulli error probabilities.
    """
    probs = sel.scenario_error_probs(kind, n, alpha)
    p_grid = np.arange(1, n + 2) / (n + 2)
    abstain = (theta >= p_grid).astype(float)
    per_rank = probs * (1.0 - (1.0 - alpha) * abstain) + (1.0 - probs) * alpha * abstain
    return float(per_rank.mean())


def population_prediction_rate(kind: str, n: int, theta: float) -> float:
    p_grid = np.arange(1, n + 2) / (n + 2)
    return float((p_grid > theta).mean())


def selective_family(jitter_seed: int = 0) -> AlgoFamily:
    """Leftmost-root selective family; the reference equals the calibrator."""
    return AlgoFamily(
        name="selective_leftmost_root",
        make_algo=lambda level: sel.SelectiveCalibrator(level, jitter_seed),
        make_ref=lambda level: sel.SelectiveCalibrator(level, jitter_seed),
        make_loss=sel.selective_loss_spec,
    )


def _run_method(
    method: str,
    inst: sel.SelectiveInstance,
    dataset: Dataset,
    cfg: dict,
    trial: int,
) -> float:
    alpha = cfg["alpha"]
    if method == "crc":
        return float(sel.fit_threshold(inst).theta_hat)
    if method == "crc_c":
        boot = BootstrapConfig(
            B=cfg["bootstrap"]["B"], seed=cfg["seed"] * 1_000_003 + trial
        )
        return float(
            crc_conservative(dataset, alpha, selective_family(), boot).theta_hat
        )
    if method == "ltt":
        ltt_cfg = LttConfig(
            grid=np.linspace(0.0, 1.0, cfg["ltt"]["grid_points"]),
            delta=cfg["ltt"]["delta"],
            direction="descending",
        )
        return float(
            ltt_select(dataset, sel.selective_loss_spec(alpha), ltt_cfg, alpha).theta_hat
        )
    raise ValueError(f"unknown method {method!r}")


def run_experiment(config: dict) -> tuple[list[dict], dict]:
    """Run the configured comparison; returns (per-trial rows, summary).

    Each trial draws a fresh scenario instance of n+1 points, calibrates
    with every requested method on it, and scores the chosen threshold
    against the exact population risk and prediction rate.
    """
    kind = config["scenario"]
    alpha = config["alpha"]
    n = config["n"]
    rows = []
    for trial in range(config["trials"]):
        inst = sel.scenario_generate(kind, n, alpha, seed=[config["seed"], trial])
        dataset = sel.instance_to_dataset(inst)
        for method in config["methods"]:
            theta = _run_method(method, inst, dataset, config, trial)
            rows.append(
                {
                    "method": method,
                    "trial": trial,
                    "theta": theta,
                    "test_risk": population_selective_risk(kind, n, alpha, theta),
                    "pred_rate": population_prediction_rate(kind, n, theta),
                }
            )
    summary = {"config": config, "methods": {}}
    for method in config["methods"]:
        vals = [r for r in rows if r["method"] == method]
        summary["methods"][method] = {
            "mean_theta": float(np.mean([r["theta"] for r in vals])),
            "mean_test_risk": float(np.mean([r["test_risk"] for r in vals])),
            "mean_pred_rate": float(np.mean([r["pred_rate"] for r in vals])),
            "max_test_risk": float(np.max([r["test_risk"] for r in vals])),
        }
    return rows, summary


def figure1_tables(
    alpha: float, n: int, seeds: int, base_seed: int = 0
) -> tuple[dict[str, list[dict]], dict]:
    """Mean running error rate Ē_j per scenario, with exact band endpoints.

    Returns one table per scenario with columns j, E_bar, band_lo,
    band_hi, plus a summary holding the mean band-crossing count per
    scenario over the seeds.
    """
    tables: dict[str, list[dict]] = {}
    summary = {"alpha": alpha, "n": n, "seeds": seeds, "mean_band_crossings": {}}
    band_lo, band_hi = sel.band_endpoints(n + 1, alpha)
    for kind in sel.SCENARIOS:
        e_bar = np.zeros(n + 1)
        crossings = np.zeros(seeds)
        for s in range(seeds):
            inst = sel.scenario_generate(kind, n, alpha, seed=[base_seed, s])
            view = sel.sorted_view(inst)
            j = np.arange(1, n + 2)
            e_bar += view.prefix[1:] / j
            crossings[s] = sel.band_crossing_count(inst)
        e_bar /= seeds
        tables[kind] = [
            {
                "j": int(j),
                "E_bar": float(e_bar[j - 1]),
                "band_lo": float(band_lo[j - 1]),
                "band_hi": float(band_hi[j - 1]),
            }
            for j in range(1, n + 2)
        ]
        summary["mean_band_crossings"][kind] = float(crossings.mean())
    return tables, summary


def scenario_task(kind: str, alpha: float):
    """Exchangeable-draw generator for Monte Carlo verification.

    Returns ``task(size, rng) -> Dataset`` drawing ``size`` points with
    the scenario's confidence grid and rank-dependent error probabilities.
    """

    def task(size: int, rng: np.random.Generator) -> Dataset:
        probs = sel.scenario_error_probs(kind, size - 1, alpha)
        errors = (rng.random(size) < probs).astype(np.int64)
        p_grid = np.arange(1, size + 1) / (size + 1)
        perm = rng.permutation(size)
        inst = sel.SelectiveInstance(
            p_hat=p_grid[perm], err=errors[perm], alpha=alpha
        )
        return sel.instance_to_dataset(inst)

    return task


def write_table(rows: list[dict], path_base: Path, fmt: str) -> Path:
    """Write rows as CSV or JSON records, returning the file path."""
    if fmt == "csv":
        path = path_base.with_suffix(".csv")
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
            writer.writeheader()
            writer.writerows(rows)
        return path
    if fmt == "json":
        path = path_base.with_suffix(".json")
        path.write_text(json.dumps(rows, indent=2) + "\n")
        return path
    raise ValueError(f"unknown format {fmt!r}")
