"""Scenario/configuration file ingestion.

Scenario files are JSON with positions in meters and powers in dBm; the
bundled default describes the reference ten-anchor 3-D network this
package's experiments run on.  Measurement files share the format with
keys ``anchor_index`` and ``rss_dbm``.
"""

import json
from importlib import resources

import numpy as np

from .channel import Environment, MeasurementSet, NoiseModel, Scenario
from .errors import ConfigError, GeometryError
from .experiments import ExperimentConfig

DEFAULT_SIGMA_GRID_DB = (1.0, 3.0, 5.0, 7.0, 9.0)
DEFAULT_MC_TRIALS = 3000


def bundled_scenario_path():
    """Path of the packaged default scenario file."""
    return resources.files("uwloc").joinpath("data/default_scenario.json")


def _load_json(path):
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return json.load(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from exc


def _require(doc, key, kind, context):
    if key not in doc:
        raise ConfigError(f"{context}: missing required field {key!r}")
    value = doc[key]
    if kind is float and isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if kind is int and isinstance(value, int) and not isinstance(value, bool):
        return value
    if kind is list and isinstance(value, list):
        return value
    if kind is dict and isinstance(value, dict):
        return value
    if kind is bool and isinstance(value, bool):
        return value
    raise ConfigError(f"{context}: field {key!r} must be a {kind.__name__}")


def _optional(doc, key, kind, context, default):
    if key not in doc:
        return default
    return _require(doc, key, kind, context)


def _positions(doc, key, context):
    raw = _require(doc, key, list, context)
    try:
        arr = np.asarray(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{context}: field {key!r} must be numeric: {exc}") from exc
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"{context}: field {key!r} contains non-finite values")
    return arr


def parse_scenario(path):
    """Parse and fully validate a scenario file into an ExperimentConfig.

    Raises ConfigError naming the offending field, or GeometryError when
    the anchor/target layout is unusable.
    """
    doc = _load_json(path)
    ctx = str(path)
    anchors = _positions(doc, "anchors_m", ctx)
    target = _positions(doc, "target_m", ctx)
    env = Environment(
        ple=_require(doc, "ple", float, ctx),
        frequency_khz=_require(doc, "frequency_khz", float, ctx),
        transmit_power_dbm=_require(doc, "transmit_power_dbm", float, ctx),
        absorption_db_per_m=_optional(doc, "absorption_db_per_m", float, ctx, None),
        reference_distance_m=_optional(doc, "reference_distance_m", float, ctx, 1.0),
    )
    scenario = Scenario(anchors, target, env)

    noise_doc = _optional(doc, "noise", dict, ctx, {})
    noise_ctx = f"{ctx}: noise"
    kind = noise_doc.get("kind", "zero_mean_gaussian")
    if not isinstance(kind, str):
        raise ConfigError(f"{noise_ctx}: field 'kind' must be a string")
    try:
        noise = NoiseModel(
            kind=kind,
            sigma_db=_optional(noise_doc, "sigma_db", float, noise_ctx, 3.0),
            mean_db=_optional(noise_doc, "mean_db", float, noise_ctx, None),
            impulsive_upper_db=_optional(noise_doc, "impulsive_upper_db", float, noise_ctx, None),
        )
    except ValueError as exc:
        raise ConfigError(f"{noise_ctx}: {exc}") from exc

    solver_doc = _optional(doc, "solver", dict, ctx, {})
    solver_ctx = f"{ctx}: solver"
    sweep_doc = _optional(doc, "sweep", dict, ctx, {})
    sweep_ctx = f"{ctx}: sweep"
    sweep_kind = sweep_doc.get("kind", "sigma")
    if not isinstance(sweep_kind, str):
        raise ConfigError(f"{sweep_ctx}: field 'kind' must be a string")

    anchor_counts = _optional(sweep_doc, "anchor_counts", list, sweep_ctx, None)
    bias_raw = _optional(sweep_doc, "bias_scenarios", list, sweep_ctx, None)
    bias_scenarios = None
    if bias_raw is not None:
        bias_scenarios = []
        for entry in bias_raw:
            if (
                not isinstance(entry, list)
                or len(entry) != 3
                or not isinstance(entry[0], str)
            ):
                raise ConfigError(
                    f"{sweep_ctx}: bias_scenarios entries must be"
                    " [label, ple_bias_fraction, absorption_bias_fraction]"
                )
            bias_scenarios.append((entry[0], float(entry[1]), float(entry[2])))

    config = ExperimentConfig(
        scenario=scenario,
        noise=noise,
        sigma_grid_db=tuple(
            float(s) for s in _optional(doc, "sigma_grid_db", list, ctx, list(DEFAULT_SIGMA_GRID_DB))
        ),
        mc_trials=_optional(doc, "mc_trials", int, ctx, DEFAULT_MC_TRIALS),
        master_seed=_optional(doc, "master_seed", int, ctx, 1),
        weighted=_optional(solver_doc, "weighted", bool, solver_ctx, True),
        squared_weights=_optional(solver_doc, "squared_weights", bool, solver_ctx, False),
        known_power=_optional(solver_doc, "known_power", bool, solver_ctx, False),
        tol_phi=_optional(solver_doc, "tol_phi", float, solver_ctx, 0.0),
        tol_lambda=_optional(solver_doc, "tol_lambda", float, solver_ctx, 0.0),
        max_iter=_optional(solver_doc, "max_iter", int, solver_ctx, 200),
        sweep_kind=sweep_kind,
        sweep_sigma_db=_optional(sweep_doc, "sigma_db", float, sweep_ctx, 2.0),
        anchor_counts=tuple(anchor_counts) if anchor_counts is not None else None,
        ple_grid=tuple(_optional(sweep_doc, "ple_grid", list, sweep_ctx, list(ExperimentConfig.ple_grid))),
        frequency_grid_khz=tuple(
            _optional(sweep_doc, "frequency_grid_khz", list, sweep_ctx, list(ExperimentConfig.frequency_grid_khz))
        ),
        noise_kinds=tuple(
            _optional(sweep_doc, "noise_kinds", list, sweep_ctx, list(ExperimentConfig.noise_kinds))
        ),
        bias_scenarios=tuple(bias_scenarios) if bias_scenarios is not None else ExperimentConfig.bias_scenarios,
    )
    try:
        config.validate()
    except ConfigError as exc:
        raise ConfigError(f"{ctx}: {exc}") from exc
    return config


def load_measurements(path, env):
    """Read a measurement file (anchor_index / rss_dbm) against ``env``."""
    doc = _load_json(path)
    ctx = str(path)
    idx = _require(doc, "anchor_index", list, ctx)
    rss = _require(doc, "rss_dbm", list, ctx)
    try:
        return MeasurementSet(
            anchor_index=np.asarray(idx, dtype=int),
            rss_dbm=np.asarray(rss, dtype=float),
            environment=env,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{ctx}: {exc}") from exc
