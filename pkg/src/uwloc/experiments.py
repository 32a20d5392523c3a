"""Deterministic Monte Carlo harness.

Every trial draws its noise from a dedicated generator spawned as
``SeedSequence(master_seed, spawn_key=(trial_index,))``, so results are
independent of execution order and worker count, and trials with the same
index share their underlying draws across sweep coordinates (common random
numbers, which makes fixed-seed trend comparisons sharp).

Accuracy is summarized per sweep coordinate as

    NRMSE_t = sqrt((1/M) * sum_m ||t - t_hat_m||^2)

and analogously for the transmit power over the trials whose power
estimate exists (a nonpositive auxiliary variable has no dB read-out);
the count of such failures is published alongside.
"""

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import crlb, gtrs, weighting
from .channel import (
    Environment,
    NoiseModel,
    Scenario,
    generate_measurements,
)
from .errors import ConfigError, UwlocError

SWEEP_KINDS = ("sigma", "anchor_count", "ple", "frequency", "noise_scenarios", "sensitivity")

# (label, ple bias fraction, absorption bias fraction) applied to the
# solver's assumed parameters while measurements use the true values.
DEFAULT_BIAS_SCENARIOS = (
    ("unbiased", 0.0, 0.0),
    ("ple_5pct", 0.05, 0.0),
    ("absorption_5pct", 0.0, 0.05),
    ("ple_10pct_absorption_5pct", 0.10, 0.05),
    ("absorption_10pct_ple_5pct", 0.05, 0.10),
    ("ple_10pct_absorption_10pct", 0.10, 0.10),
)

DEFAULT_PLE_GRID = (1.5, 1.75, 2.0, 2.25, 2.5)
DEFAULT_FREQUENCY_GRID_KHZ = (9.0, 25.0, 50.0)


@dataclass
class ExperimentConfig:
    """Scenario, noise, solver options, and sweep selection for one run."""

    scenario: Scenario
    noise: NoiseModel
    sigma_grid_db: tuple = (1.0, 3.0, 5.0, 7.0, 9.0)
    mc_trials: int = 3000
    master_seed: int = 1
    weighted: bool = True
    squared_weights: bool = False
    known_power: bool = False
    tol_phi: float = 0.0
    tol_lambda: float = 0.0
    max_iter: int = 200
    sweep_kind: str = "sigma"
    sweep_sigma_db: float = 2.0
    anchor_counts: tuple | None = None
    ple_grid: tuple = DEFAULT_PLE_GRID
    frequency_grid_khz: tuple = DEFAULT_FREQUENCY_GRID_KHZ
    noise_kinds: tuple = ("zero_mean_gaussian", "biased_gaussian", "gaussian_plus_impulsive")
    bias_scenarios: tuple = DEFAULT_BIAS_SCENARIOS

    def validate(self):
        if self.mc_trials < 1:
            raise ConfigError(f"mc_trials must be >= 1, got {self.mc_trials}")
        if len(self.sigma_grid_db) == 0 or any(s <= 0 for s in self.sigma_grid_db):
            raise ConfigError("sigma_grid_db entries must be positive")
        if self.sweep_kind not in SWEEP_KINDS:
            raise ConfigError(f"unknown sweep kind {self.sweep_kind!r}; expected one of {SWEEP_KINDS}")
        if self.sweep_sigma_db <= 0:
            raise ConfigError("sweep_sigma_db must be positive")
        n = self.scenario.n_anchors
        k = self.scenario.dimension
        if self.anchor_counts is not None:
            for count in self.anchor_counts:
                if not k + 2 <= count <= n:
                    raise ConfigError(
                        f"anchor count {count} outside the valid range [{k + 2}, {n}]"
                    )
        if any(b <= 0 for b in self.ple_grid):
            raise ConfigError("ple_grid entries must be positive")
        if any(f <= 0 for f in self.frequency_grid_khz):
            raise ConfigError("frequency_grid_khz entries must be positive")
        return self


@dataclass(frozen=True)
class ResultRecord:
    """Aggregated outcome for one sweep coordinate.

    ``solve_failures`` counts trials whose solve raised (excluded from the
    error averages); it is not part of the CSV contract and stays zero in
    ordinary runs.
    """

    sweep_coord: str
    nrmse_t_m: float
    nrmse_p_db: float | None
    crlb_t_m: float
    crlb_p_db: float | None
    power_failures: int
    trials: int
    seconds_per_solve: float
    solve_failures: int = 0


@dataclass(frozen=True)
class _TrialSetting:
    """Fully resolved inputs for trials at one sweep coordinate."""

    label: str
    scenario: Scenario
    noise: NoiseModel
    solve_env: Environment
    weighted: bool
    squared_weights: bool
    known_power: bool
    tol_phi: float
    tol_lambda: float
    max_iter: int


def trial_rng(master_seed, trial_index):
    """Generator for one trial; depends only on (master_seed, trial_index)."""
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(trial_index,)))


def _solve_once(setting, measurements):
    n = setting.scenario.n_anchors
    if setting.weighted:
        w = weighting.link_weights(measurements, setting.solve_env)
    else:
        w = np.full(n, 1.0 / n)
    if setting.known_power:
        system = gtrs.build_known_power_system(
            measurements, w, setting.scenario.anchors_m, setting.solve_env,
            squared_weights=setting.squared_weights,
        )
        return gtrs.solve_known_power(
            system, tol_phi=setting.tol_phi, tol_lambda=setting.tol_lambda,
            max_iter=setting.max_iter,
        )
    system = gtrs.build_system(
        measurements, w, setting.scenario.anchors_m, setting.solve_env,
        squared_weights=setting.squared_weights,
    )
    return gtrs.solve(
        system, tol_phi=setting.tol_phi, tol_lambda=setting.tol_lambda,
        max_iter=setting.max_iter,
    )


def _execute_trial(setting, master_seed, trial_index):
    rng = trial_rng(master_seed, trial_index)
    measurements = generate_measurements(setting.scenario, setting.noise, rng)
    return _solve_once(setting, measurements)


def _base_setting(config):
    return _TrialSetting(
        label="base",
        scenario=config.scenario,
        noise=config.noise,
        solve_env=config.scenario.environment,
        weighted=config.weighted,
        squared_weights=config.squared_weights,
        known_power=config.known_power,
        tol_phi=config.tol_phi,
        tol_lambda=config.tol_lambda,
        max_iter=config.max_iter,
    )


def run_trial(config, trial_index):
    """One deterministic trial at the configured base settings.

    Returns (position, transmit power or None, solver estimate).
    """
    config.validate()
    estimate = _execute_trial(_base_setting(config), config.master_seed, trial_index)
    return estimate.position_m, estimate.transmit_power_dbm, estimate


def _fmt(value):
    return f"{value:g}"


def _sweep_settings(config):
    """Resolved (setting, point-scenario-for-bounds) pairs for the sweep."""
    config.validate()
    base = config.scenario
    env = base.environment
    points = []

    def with_noise(sigma, kind=None):
        kind = kind if kind is not None else config.noise.kind
        if kind == "zero_mean_gaussian":
            return NoiseModel(kind=kind, sigma_db=sigma, mean_db=0.0)
        return NoiseModel(kind=kind, sigma_db=sigma, mean_db=config.noise.mean_db)

    if config.sweep_kind == "sigma":
        for sigma in config.sigma_grid_db:
            points.append(
                _TrialSetting(
                    label=f"sigma={_fmt(sigma)}",
                    scenario=base,
                    noise=with_noise(sigma),
                    solve_env=env,
                    weighted=config.weighted,
                    squared_weights=config.squared_weights,
                    known_power=config.known_power,
                    tol_phi=config.tol_phi,
                    tol_lambda=config.tol_lambda,
                    max_iter=config.max_iter,
                )
            )
    elif config.sweep_kind == "anchor_count":
        counts = config.anchor_counts
        if counts is None:
            counts = tuple(range(base.dimension + 3, base.n_anchors + 1))
        sigma = config.sweep_sigma_db
        for count in counts:
            points.append(
                _TrialSetting(
                    label=f"n_anchors={count},sigma={_fmt(sigma)}",
                    scenario=base.subset(count),
                    noise=with_noise(sigma),
                    solve_env=env,
                    weighted=config.weighted,
                    squared_weights=config.squared_weights,
                    known_power=config.known_power,
                    tol_phi=config.tol_phi,
                    tol_lambda=config.tol_lambda,
                    max_iter=config.max_iter,
                )
            )
    elif config.sweep_kind == "ple":
        sigma = config.sweep_sigma_db
        for ple in config.ple_grid:
            point_env = Environment(
                ple=ple,
                frequency_khz=env.frequency_khz,
                transmit_power_dbm=env.transmit_power_dbm,
                absorption_db_per_m=env.absorption_db_per_m,
                reference_distance_m=env.reference_distance_m,
            )
            points.append(
                _TrialSetting(
                    label=f"ple={_fmt(ple)},sigma={_fmt(sigma)}",
                    scenario=Scenario(base.anchors_m, base.target_m, point_env),
                    noise=with_noise(sigma),
                    solve_env=point_env,
                    weighted=config.weighted,
                    squared_weights=config.squared_weights,
                    known_power=config.known_power,
                    tol_phi=config.tol_phi,
                    tol_lambda=config.tol_lambda,
                    max_iter=config.max_iter,
                )
            )
    elif config.sweep_kind == "frequency":
        sigma = config.sweep_sigma_db
        for freq in config.frequency_grid_khz:
            point_env = Environment(
                ple=env.ple,
                frequency_khz=freq,
                transmit_power_dbm=env.transmit_power_dbm,
                reference_distance_m=env.reference_distance_m,
            )  # absorption recomputed from the frequency
            points.append(
                _TrialSetting(
                    label=f"frequency_khz={_fmt(freq)},sigma={_fmt(sigma)}",
                    scenario=Scenario(base.anchors_m, base.target_m, point_env),
                    noise=with_noise(sigma),
                    solve_env=point_env,
                    weighted=config.weighted,
                    squared_weights=config.squared_weights,
                    known_power=config.known_power,
                    tol_phi=config.tol_phi,
                    tol_lambda=config.tol_lambda,
                    max_iter=config.max_iter,
                )
            )
    elif config.sweep_kind == "noise_scenarios":
        for kind in config.noise_kinds:
            for sigma in config.sigma_grid_db:
                points.append(
                    _TrialSetting(
                        label=f"noise={kind},sigma={_fmt(sigma)}",
                        scenario=base,
                        noise=NoiseModel(kind=kind, sigma_db=sigma),
                        solve_env=env,
                        weighted=config.weighted,
                        squared_weights=config.squared_weights,
                        known_power=config.known_power,
                        tol_phi=config.tol_phi,
                        tol_lambda=config.tol_lambda,
                        max_iter=config.max_iter,
                    )
                )
    elif config.sweep_kind == "sensitivity":
        for label, ple_bias, absorption_bias in config.bias_scenarios:
            biased_env = Environment(
                ple=env.ple * (1.0 + ple_bias),
                frequency_khz=env.frequency_khz,
                transmit_power_dbm=env.transmit_power_dbm,
                absorption_db_per_m=env.absorption_db_per_m * (1.0 + absorption_bias),
                reference_distance_m=env.reference_distance_m,
            )
            for sigma in config.sigma_grid_db:
                points.append(
                    _TrialSetting(
                        label=f"bias={label},sigma={_fmt(sigma)}",
                        scenario=base,
                        noise=with_noise(sigma),
                        solve_env=biased_env,
                        weighted=config.weighted,
                        squared_weights=config.squared_weights,
                        known_power=config.known_power,
                        tol_phi=config.tol_phi,
                        tol_lambda=config.tol_lambda,
                        max_iter=config.max_iter,
                    )
                )
    return points


def _point_sigma(setting):
    return setting.noise.sigma_db


def _point_bounds(setting):
    """Paired zero-mean-Gaussian bounds at the point's true parameters."""
    if setting.known_power:
        report = crlb.fim_known_power(setting.scenario, _point_sigma(setting))
        return report.crlb_t_m, None
    report = crlb.fim_unknown_power(setting.scenario, _point_sigma(setting))
    return report.crlb_t_m, report.crlb_p_db


def _run_point(setting, config, n_threads):
    m = config.mc_trials
    err2 = np.full(m, np.nan)
    power_err2 = np.full(m, np.nan)
    power_ok = np.zeros(m, dtype=bool)
    solved = np.zeros(m, dtype=bool)
    true_t = setting.scenario.target_m
    true_p = setting.scenario.environment.transmit_power_dbm

    def one(trial):
        try:
            est = _execute_trial(setting, config.master_seed, trial)
        except UwlocError:
            return
        solved[trial] = True
        err2[trial] = float(np.sum((est.position_m - true_t) ** 2))
        if est.power_valid:
            power_ok[trial] = True
            power_err2[trial] = (est.transmit_power_dbm - true_p) ** 2

    start = time.perf_counter()
    if n_threads > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            list(pool.map(one, range(m)))
    else:
        for trial in range(m):
            one(trial)
    elapsed = time.perf_counter() - start

    n_solved = int(solved.sum())
    nrmse_t = float(np.sqrt(np.mean(err2[solved]))) if n_solved else float("nan")
    if setting.known_power:
        nrmse_p = None
        failures = 0
    else:
        n_power = int(power_ok.sum())
        nrmse_p = float(np.sqrt(np.mean(power_err2[power_ok]))) if n_power else None
        failures = n_solved - n_power
    crlb_t, crlb_p = _point_bounds(setting)
    return ResultRecord(
        sweep_coord=setting.label,
        nrmse_t_m=nrmse_t,
        nrmse_p_db=nrmse_p,
        crlb_t_m=crlb_t,
        crlb_p_db=crlb_p,
        power_failures=failures,
        trials=m,
        seconds_per_solve=elapsed / m,
        solve_failures=m - n_solved,
    )


def run_sweep(config, n_threads=1):
    """All sweep coordinates of ``config``, each over ``mc_trials`` trials.

    Results are bit-identical for a given (config, master_seed) regardless
    of ``n_threads``; only the recorded wall time varies.
    """
    settings = _sweep_settings(config)
    return [_run_point(setting, config, n_threads) for setting in settings]


def measure_runtime(config, n_solves=100):
    """Average wall-clock seconds per full pipeline solve, single-threaded.

    Covers weighting, system assembly, the bisection, and extraction;
    measurement generation is excluded.
    """
    config.validate()
    n_solves = max(int(n_solves), 100)
    setting = _base_setting(config)
    batches = [
        generate_measurements(setting.scenario, setting.noise, trial_rng(config.master_seed, i))
        for i in range(n_solves)
    ]
    start = time.perf_counter()
    for measurements in batches:
        _solve_once(setting, measurements)
    return (time.perf_counter() - start) / n_solves


CSV_COLUMNS = (
    "sweep_coord",
    "nrmse_t_m",
    "nrmse_p_db",
    "crlb_t_m",
    "crlb_p_db",
    "power_failures",
    "trials",
    "seconds_per_solve",
)


def _csv_number(value):
    if value is None or (isinstance(value, float) and not np.isfinite(value)):
        return ""
    return f"{value:.9g}"


def write_csv(records, stream, include_timing=False):
    """Write records as CSV with locale-independent 9-significant-digit numbers.

    Wall time is replaced by 0 unless ``include_timing`` is set, so default
    output is byte-identical across runs and thread counts.
    """
    stream.write(",".join(CSV_COLUMNS) + "\n")
    for record in records:
        seconds = record.seconds_per_solve if include_timing else 0.0
        row = (
            record.sweep_coord,
            _csv_number(record.nrmse_t_m),
            _csv_number(record.nrmse_p_db),
            _csv_number(record.crlb_t_m),
            _csv_number(record.crlb_p_db),
            str(record.power_failures),
            str(record.trials),
            _csv_number(seconds),
        )
        stream.write(",".join(row) + "\n")
