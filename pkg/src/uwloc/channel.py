"""Underwater acoustic RSS channel model.

Received signal strength at an anchor follows a log-distance decay with an
additional absorption term that is linear in range:

    P = P_t - 10*beta*log10(d/d0) - alpha*(d - d0) + n

with ``beta`` the path loss exponent, ``alpha`` the frequency-dependent
absorption in dB per meter, ``d0`` the reference distance, and ``n`` a noise
term in dB.  Distances are meters and powers dBm throughout.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import GeometryError

LN10 = float(np.log(10.0))

NOISE_KINDS = ("zero_mean_gaussian", "biased_gaussian", "gaussian_plus_impulsive")

# Rank tolerance for the anchor-geometry regularity test, relative to the
# largest singular value of the stacked gradient directions.
GEOMETRY_RANK_TOL = 1e-10


def absorption_coefficient(frequency_khz):
    """Absorption coefficient in dB/m for a center frequency in kHz.

    Empirical seawater attenuation curve; the constant floor term keeps the
    value positive as the frequency approaches zero.
    """
    f = float(frequency_khz)
    if f < 0:
        raise ValueError(f"frequency must be nonnegative, got {f}")
    f2 = f * f
    return (
        0.11 * f2 / (1.0 + f2)
        + 44.0 * f2 / (4100.0 + f2)
        + 2.75 * f2 / 1e4
        + 0.003
    ) * 1e-3


@dataclass(frozen=True)
class Environment:
    """Propagation parameters shared by the channel, solver, and bounds.

    ``absorption_db_per_m`` defaults to the value implied by
    ``frequency_khz``; pass it explicitly only to model biased prior
    knowledge of the medium.
    """

    ple: float
    frequency_khz: float
    transmit_power_dbm: float
    absorption_db_per_m: float | None = None
    reference_distance_m: float = 1.0

    def __post_init__(self):
        if not self.ple > 0:
            raise ValueError(f"path loss exponent must be positive, got {self.ple}")
        if self.frequency_khz < 0:
            raise ValueError("frequency must be nonnegative")
        if not self.reference_distance_m > 0:
            raise ValueError("reference distance must be positive")
        if self.absorption_db_per_m is None:
            object.__setattr__(
                self, "absorption_db_per_m", absorption_coefficient(self.frequency_khz)
            )
        elif self.absorption_db_per_m < 0:
            raise ValueError("absorption must be nonnegative")


@dataclass(frozen=True)
class NoiseModel:
    """Measurement-noise description for one of the three studied regimes.

    ``sigma_db`` is always the total standard deviation.  For the
    Gaussian-plus-impulsive mixture the Gaussian and uniform components each
    carry half the variance, so the uniform upper bound defaults to
    ``sigma_db * sqrt(6)`` (a U[0, a] variable has variance a^2/12).
    """

    kind: str
    sigma_db: float
    mean_db: float | None = None
    impulsive_upper_db: float | None = None

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}; expected one of {NOISE_KINDS}")
        if not self.sigma_db > 0:
            raise ValueError("sigma_db must be positive")
        if self.mean_db is None:
            object.__setattr__(self, "mean_db", 0.0 if self.kind == "zero_mean_gaussian" else 2.0)
        if self.kind == "zero_mean_gaussian" and self.mean_db != 0.0:
            raise ValueError("zero_mean_gaussian requires mean_db = 0")
        if self.kind == "gaussian_plus_impulsive":
            if self.impulsive_upper_db is None:
                object.__setattr__(self, "impulsive_upper_db", self.sigma_db * np.sqrt(6.0))
        elif self.impulsive_upper_db is not None:
            raise ValueError("impulsive_upper_db only applies to gaussian_plus_impulsive")


def sample_noise(model, rng, size=None):
    """Draw noise in dB from ``model`` using the caller-owned generator.

    zero_mean_gaussian        N(0, sigma^2)
    biased_gaussian           N(mean, sigma^2)
    gaussian_plus_impulsive   N(mean, sigma^2/2) + U[0, upper], matched so
                              the total standard deviation equals sigma.
    """
    if model.kind == "zero_mean_gaussian":
        return rng.normal(0.0, model.sigma_db, size)
    if model.kind == "biased_gaussian":
        return rng.normal(model.mean_db, model.sigma_db, size)
    gauss = rng.normal(model.mean_db, model.sigma_db / np.sqrt(2.0), size)
    return gauss + rng.uniform(0.0, model.impulsive_upper_db, size)


def _gradient_directions(anchors, target, env):
    """Stack the per-anchor gradient directions used by the regularity test.

    Row i is [c_i^T, ln(10)*d_i^2] where c_i is the range-gradient of the
    mean RSS scaled by ln(10)*d_i^2.  The estimation problem is regular only
    when these rows span dimension k + 1.
    """
    diff = target - anchors
    d = np.linalg.norm(diff, axis=1)
    coef = 10.0 * env.ple + env.absorption_db_per_m * LN10 * d
    return np.column_stack([coef[:, None] * diff, LN10 * d**2])


@dataclass(frozen=True)
class Scenario:
    """Anchor/target geometry plus the environment it lives in.

    Positions are meters.  Construction validates that the anchor count
    supports a joint position/power solve (N >= k + 2), that no anchor sits
    inside the reference distance, and that the anchor placement is regular
    (non-collinear/coplanar in the information-matrix sense).
    """

    anchors_m: np.ndarray
    target_m: np.ndarray
    environment: Environment

    def __post_init__(self):
        anchors = np.atleast_2d(np.asarray(self.anchors_m, dtype=float))
        target = np.asarray(self.target_m, dtype=float).ravel()
        object.__setattr__(self, "anchors_m", anchors)
        object.__setattr__(self, "target_m", target)
        n, k = anchors.shape
        if target.shape != (k,):
            raise GeometryError(
                f"target dimension {target.shape} does not match anchors ({k}-d)"
            )
        if n < k + 2:
            raise GeometryError(
                f"need at least k + 2 = {k + 2} anchors for a joint"
                f" position/power solve, got {n}"
            )
        d = np.linalg.norm(target - anchors, axis=1)
        if np.any(d < self.environment.reference_distance_m):
            i = int(np.argmin(d))
            raise GeometryError(
                f"anchor {i} lies inside the reference distance"
                f" (d = {d[i]:.3g} m)"
            )
        g = _gradient_directions(anchors, target, self.environment)
        s = np.linalg.svd(g, compute_uv=False)
        if s[-1] <= GEOMETRY_RANK_TOL * s[0]:
            raise GeometryError(
                "degenerate anchor placement: gradient directions do not"
                f" span dimension {k + 1} (singular value ratio {s[-1] / s[0]:.2e})"
            )

    @property
    def n_anchors(self):
        return self.anchors_m.shape[0]

    @property
    def dimension(self):
        return self.anchors_m.shape[1]

    def distances_m(self):
        return np.linalg.norm(self.target_m - self.anchors_m, axis=1)

    def subset(self, n_anchors):
        """Scenario restricted to the first ``n_anchors`` anchors as listed."""
        return Scenario(self.anchors_m[:n_anchors], self.target_m, self.environment)


@dataclass(frozen=True)
class MeasurementSet:
    """Per-anchor RSS values in dBm plus the environment used to generate them."""

    anchor_index: np.ndarray
    rss_dbm: np.ndarray
    environment: Environment

    def __post_init__(self):
        idx = np.asarray(self.anchor_index, dtype=int)
        rss = np.asarray(self.rss_dbm, dtype=float)
        object.__setattr__(self, "anchor_index", idx)
        object.__setattr__(self, "rss_dbm", rss)
        if idx.shape != rss.shape or idx.ndim != 1:
            raise ValueError("anchor_index and rss_dbm must be matching 1-d arrays")
        if not np.all(np.isfinite(rss)):
            raise ValueError("RSS values must be finite")

    def __len__(self):
        return self.rss_dbm.shape[0]


def noiseless_rss(target_m, anchor_m, env):
    """Mean received power in dBm at ``anchor_m`` from a source at ``target_m``.

    Undefined inside the reference distance (the log-distance law only
    applies beyond d0).
    """
    target_m = np.asarray(target_m, dtype=float)
    anchor_m = np.asarray(anchor_m, dtype=float)
    d = np.linalg.norm(target_m - anchor_m, axis=-1)
    d0 = env.reference_distance_m
    if np.any(d < d0):
        raise ValueError(f"distance {np.min(d):.3g} m is inside the reference distance {d0} m")
    return (
        env.transmit_power_dbm
        - 10.0 * env.ple * np.log10(d / d0)
        - env.absorption_db_per_m * (d - d0)
    )


def generate_measurements(scenario, model, rng):
    """One noisy RSS measurement per anchor, in anchor order."""
    clean = noiseless_rss(scenario.target_m, scenario.anchors_m, scenario.environment)
    noisy = clean + sample_noise(model, rng, size=scenario.n_anchors)
    return MeasurementSet(
        anchor_index=np.arange(scenario.n_anchors),
        rss_dbm=noisy,
        environment=scenario.environment,
    )
