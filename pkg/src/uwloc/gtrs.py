"""Joint position / transmit-power estimation via a generalized trust
region subproblem (GTRS).

Each measurement is turned into one row of an overdetermined linear system
in the lifted unknown z = [t; ||t||^2; u], where t is the position and
u = 10^(P_t/(5*beta)) encodes the transmit power.  The lifting constraint
||t||^2 = z_{k+1} is a single quadratic equality, so the weighted
least-squares estimator is a GTRS:

    min ||R z - v||^2   s.t.   z^T H z + 2 h^T z = 0

whose exact solution is characterized by a Lagrange multiplier lam with

    (R^T R + lam*H) z = R^T v - lam*h,
    z^T H z + 2 h^T z = 0,
    R^T R + lam*H  positive semidefinite,

and the constraint residual phi(lam) is strictly decreasing on the interval
(-1/lam*, inf), lam* being the largest eigenvalue of
(R^T R)^{-1/2} H (R^T R)^{-1/2}.  The unique root is found by bisection.

Numerical notes: the normal matrix mixes meter, meter^2, and dimensionless
columns, so all internal solves run on a Jacobi-equilibrated copy (a pure
reparameterization: the multiplier, the constraint residual, and the
returned z are unchanged).  Below the interval's pole the shifted matrix is
indefinite, which a Cholesky failure detects; such points are treated as
lying below the root, so the bisection never depends on a high-accuracy
estimate of lam*.
"""

from dataclasses import dataclass

import numpy as np

from . import numerics
from .channel import LN10
from .errors import (
    ConvergenceError,
    GeometryError,
    InfeasibleProblemError,
    NumericalError,
    SingularMatrixError,
)

# Column-rank tolerance on the column-normalized design matrix.  The raw
# design mixes units spanning ~12 orders of magnitude at kilometer scales,
# so rank is only meaningful after normalization.
RANK_TOL = 1e-10

# Guarded offset from the singular endpoint of the multiplier interval.
ENDPOINT_GUARD = 1e-12

# Cap on geometric bracket expansions in either direction.
MAX_EXPANSIONS = 120


@dataclass(frozen=True)
class GtrsSystem:
    """Weighted design matrix, target vector, and constraint matrices.

    ``design`` has k + 2 columns for a joint position/power system and
    k + 1 columns when the transmit power is known (``estimates_power``
    False); ``dimension`` is always the spatial dimension k.  ``ple`` is
    kept so the power read-out 5*ple*log10(u) needs no extra context.
    """

    design: np.ndarray
    target: np.ndarray
    constraint_quad: np.ndarray
    constraint_lin: np.ndarray
    dimension: int
    n_anchors: int
    ple: float
    estimates_power: bool = True


@dataclass(frozen=True)
class Estimate:
    """Solver output: solution vector, extracted estimates, diagnostics.

    ``kkt_stationarity`` is the stationarity residual relative to
    ``||M||_F * ||z|| + ||rhs||``; ``kkt_constraint`` is the signed
    constraint residual at the returned multiplier; ``kkt_min_eig_ratio``
    is the smallest eigenvalue of the shifted normal matrix divided by the
    spectral norm of the unshifted one (nonnegative up to roundoff at a
    valid solution).
    """

    z: np.ndarray
    position_m: np.ndarray
    transmit_power_dbm: float | None
    power_valid: bool
    multiplier: float
    iterations: int
    kkt_stationarity: float
    kkt_constraint: float
    kkt_min_eig_ratio: float


def _q_squared(measurements, env):
    return (10.0 ** ((measurements.rss_dbm - env.absorption_db_per_m) / (10.0 * env.ple))) ** 2


def _check_rank(design):
    norms = np.linalg.norm(design, axis=0)
    if np.any(norms == 0.0):
        raise GeometryError(
            "design matrix has a zero column; add anchors or spread them out"
        )
    normalized = design / norms
    smallest = np.linalg.eigvalsh(normalized.T @ normalized).min()
    if smallest <= RANK_TOL:
        raise GeometryError(
            "design matrix is rank deficient (normalized Gram eigenvalue"
            f" {smallest:.2e}); add anchors or relocate them off the common"
            " line/plane"
        )


def build_system(measurements, weights, anchors_m, env, squared_weights=False):
    """Assemble the weighted GTRS from measurements and link weights.

    Row i of the unweighted design is
    [-(10*beta/ln10)*q_i^2*s_i^T, (5*beta/ln10)*q_i^2, -(5*beta/ln10)]
    with q_i = 10^((P_i - alpha)/(10*beta)), and the target entry is
    -(5*beta/ln10)*q_i^2*||s_i||^2.  Rows are scaled by sqrt(w_i) so the
    objective is sum_i w_i * residual_i^2; pass ``squared_weights`` to scale
    by w_i instead (weights enter the objective squared).
    """
    anchors = np.atleast_2d(np.asarray(anchors_m, dtype=float))
    weights = np.asarray(weights, dtype=float)
    n, k = anchors.shape
    if len(measurements) != n:
        raise ValueError(f"{len(measurements)} measurements for {n} anchors")
    if weights.shape != (n,):
        raise ValueError(f"weights shape {weights.shape} does not match {n} anchors")
    if n < k + 2:
        raise GeometryError(f"need at least k + 2 = {k + 2} anchors, got {n}")
    beta = env.ple
    q2 = _q_squared(measurements, env)
    c_pos = 10.0 * beta / LN10
    c_aux = 5.0 * beta / LN10
    design = np.empty((n, k + 2))
    design[:, :k] = -c_pos * q2[:, None] * anchors
    design[:, k] = c_aux * q2
    design[:, k + 1] = -c_aux
    target = -c_aux * q2 * np.sum(anchors**2, axis=1)
    scale = weights if squared_weights else np.sqrt(weights)
    design = design * scale[:, None]
    target = target * scale
    _check_rank(design)
    quad = np.zeros((k + 2, k + 2))
    quad[:k, :k] = np.eye(k)
    lin = np.zeros(k + 2)
    lin[k] = -0.5
    return GtrsSystem(design, target, quad, lin, k, n, beta, estimates_power=True)


def build_known_power_system(measurements, weights, anchors_m, env, squared_weights=False):
    """GTRS with the transmit power known: the u column folds into the target.

    The reduced unknown is [t; ||t||^2] with constraint matrices
    diag(I_k, 0) and [0_k; -1/2].
    """
    full = build_system(measurements, weights, anchors_m, env, squared_weights)
    k = full.dimension
    u = 10.0 ** (env.transmit_power_dbm / (5.0 * env.ple))
    design = full.design[:, : k + 1].copy()
    target = full.target - full.design[:, k + 1] * u
    _check_rank(design)
    quad = np.zeros((k + 1, k + 1))
    quad[:k, :k] = np.eye(k)
    lin = np.zeros(k + 1)
    lin[k] = -0.5
    return GtrsSystem(
        design, target, quad, lin, k, full.n_anchors, env.ple, estimates_power=False
    )


class _Equilibrated:
    """Jacobi-scaled copy of the normal equations for one system."""

    def __init__(self, system):
        design = system.design
        gram = design.T @ design
        diag = np.diag(gram)
        if np.any(diag <= 0.0):
            raise GeometryError("normal matrix has a nonpositive diagonal entry")
        self.scale = 1.0 / np.sqrt(diag)
        outer = np.outer(self.scale, self.scale)
        self.gram = gram * outer
        self.quad = system.constraint_quad * outer
        self.lin = system.constraint_lin * self.scale
        self.rhs0 = (design.T @ system.target) * self.scale

    def solve_at(self, lam, check_definite):
        """Solution of the shifted system, or None when it is not PD.

        ``check_definite`` may be skipped for lam >= 0, where the shifted
        matrix is PD whenever the Gram matrix is.
        """
        shifted = self.gram + lam * self.quad
        diag = np.diag(shifted)
        if np.any(diag <= 0.0):
            return None
        s = 1.0 / np.sqrt(diag)
        scaled = shifted * np.outer(s, s)
        if check_definite:
            try:
                factor = np.linalg.cholesky(scaled)
            except np.linalg.LinAlgError:
                return None
            if np.min(np.diagonal(factor)) <= 1e-6:
                return None
        try:
            y = np.linalg.solve(scaled, (self.rhs0 - lam * self.lin) * s)
        except np.linalg.LinAlgError:
            return None
        return y * s

    def constraint_residual(self, z_hat):
        return float(z_hat @ self.quad @ z_hat + 2.0 * self.lin @ z_hat)

    def multiplier_floor(self):
        """Guarded lower endpoint -1/lam* + eps of the multiplier interval."""
        try:
            inv_sqrt = numerics.inv_sqrt_sym(self.gram)
        except SingularMatrixError as exc:
            raise GeometryError(f"normal matrix is singular: {exc}") from exc
        pencil = inv_sqrt @ self.quad @ inv_sqrt
        lam_star = float(numerics.sym_eig(pencil)[0][-1])
        if lam_star <= 0.0:
            return -np.inf
        edge = -1.0 / lam_star
        return edge + ENDPOINT_GUARD * (1.0 + abs(edge))


def lambda_interval(system):
    """Search interval (lower, +inf) for the Lagrange multiplier.

    ``lower`` sits a guarded offset above -1/lam*, the point where the
    shifted normal matrix turns singular.
    """
    return _Equilibrated(system).multiplier_floor(), np.inf


def phi(lam, system):
    """Constraint residual of the shifted solution at multiplier ``lam``.

    Strictly decreasing on the multiplier interval; its unique root is the
    optimal multiplier.
    """
    eq = _Equilibrated(system)
    z_hat = eq.solve_at(float(lam), check_definite=False)
    if z_hat is None or not np.all(np.isfinite(z_hat)):
        raise NumericalError(
            f"shifted system could not be solved at multiplier {lam}", multiplier=lam
        )
    return eq.constraint_residual(z_hat)


def _bisect(eq, tol_phi, tol_lambda, max_iter):
    """Root of the constraint residual by classification bisection.

    A trial multiplier is below the root when the shifted matrix fails to
    be PD (below the pole) or the residual is positive; above otherwise.
    Returns (multiplier, z_hat, iterations).
    """

    def classify(lam):
        z_hat = eq.solve_at(lam, check_definite=lam < 0.0)
        if z_hat is None:
            return True, np.inf, None
        residual = eq.constraint_residual(z_hat)
        return residual > 0.0, residual, z_hat

    _, f0, z0 = classify(0.0)
    if z0 is None:
        raise GeometryError("normal matrix is not positive definite")
    if f0 == 0.0 or abs(f0) <= tol_phi:
        return 0.0, z0, 0
    if f0 > 0.0:
        # Root is positive: expand upward until the residual turns negative.
        a = 0.0
        b = max(1.0, float(np.linalg.norm(eq.gram)))
        low, fb, zb = classify(b)
        n = 0
        while low and n < MAX_EXPANSIONS:
            a, b = b, 2.0 * b
            low, fb, zb = classify(b)
            n += 1
        if low:
            raise InfeasibleProblemError(
                f"no constraint-residual sign change up to multiplier {b:.3e}"
            )
        best = (b, abs(fb), zb)
    else:
        # Root is negative: walk down from the guarded endpoint estimate.
        # Points below the pole classify as "low" via the PD check, so an
        # imprecise endpoint estimate only costs extra expansions.
        b = 0.0
        best = (0.0, abs(f0), z0)
        a = eq.multiplier_floor()
        if not np.isfinite(a):
            raise InfeasibleProblemError("constraint matrix has no negative pole")
        low, fa, za = classify(a)
        step = 0.1 * (1.0 + abs(a))
        n = 0
        while not low and n < MAX_EXPANSIONS:
            b = a
            if abs(fa) < best[1]:
                best = (a, abs(fa), za)
            a -= step
            step *= 2.0
            low, fa, za = classify(a)
            n += 1
        if not low:
            raise InfeasibleProblemError(
                f"no constraint-residual sign change down to multiplier {a:.3e}"
            )
    iterations = 0
    while (b - a) > tol_lambda:
        if iterations >= max_iter:
            raise ConvergenceError(
                f"bisection exceeded {max_iter} iterations"
                f" (bracket width {b - a:.3e})",
                bracket=(a, b),
            )
        mid = 0.5 * (a + b)
        if mid == a or mid == b:
            break  # bracket has collapsed to adjacent floats
        low, fm, zm = classify(mid)
        iterations += 1
        if zm is not None and abs(fm) < best[1]:
            best = (mid, abs(fm), zm)
        if zm is not None and abs(fm) <= tol_phi:
            break
        if low:
            a = mid
        else:
            b = mid
    return best[0], best[2], iterations


def extract_estimate(z, env):
    """Split a solution vector into (position, transmit power or None).

    The power read-out 5*beta*log10(z[-1]) only exists for a positive
    auxiliary value; a nonpositive one is a flagged outcome, not an error.
    """
    z = np.asarray(z, dtype=float)
    k = z.shape[0] - 2
    if k < 1:
        raise ValueError("solution vector must have length k + 2 with k >= 1")
    u = z[k + 1]
    if u > 0.0:
        return z[:k].copy(), 5.0 * env.ple * np.log10(u)
    return z[:k].copy(), None


def _finalize(system, eq, lam, z_hat, iterations):
    z = z_hat * eq.scale
    gram = system.design.T @ system.design
    rhs = system.design.T @ system.target - lam * system.constraint_lin
    shifted = gram + lam * system.constraint_quad
    residual = np.linalg.norm(shifted @ z - rhs)
    scale = np.linalg.norm(shifted) * np.linalg.norm(z) + np.linalg.norm(rhs)
    stationarity = residual / scale if scale > 0 else residual
    constraint = float(
        z @ system.constraint_quad @ z + 2.0 * system.constraint_lin @ z
    )
    min_eig = float(np.linalg.eigvalsh(shifted).min())
    min_eig_ratio = min_eig / float(np.linalg.norm(gram, 2))
    k = system.dimension
    position = z[:k].copy()
    power = None
    if system.estimates_power:
        u = z[k + 1]
        if u > 0.0:
            power = 5.0 * system.ple * np.log10(u)
    return Estimate(
        z=z,
        position_m=position,
        transmit_power_dbm=power,
        power_valid=power is not None,
        multiplier=float(lam),
        iterations=iterations,
        kkt_stationarity=float(stationarity),
        kkt_constraint=constraint,
        kkt_min_eig_ratio=min_eig_ratio,
    )


def solve(system, tol_phi=0.0, tol_lambda=0.0, max_iter=200):
    """Solve the joint position/power GTRS by bisection on the multiplier.

    With the default tolerances the bisection runs until the bracket
    collapses to adjacent floating-point numbers, keeping the multiplier
    with the smallest constraint residual seen.  ``tol_phi`` > 0 allows an
    early stop on the residual magnitude; ``tol_lambda`` > 0 on the bracket
    width.
    """
    if not system.estimates_power:
        raise ValueError("system was built with known power; use solve_known_power")
    eq = _Equilibrated(system)
    lam, z_hat, iterations = _bisect(eq, tol_phi, tol_lambda, max_iter)
    return _finalize(system, eq, lam, z_hat, iterations)


def solve_known_power(system, tol_phi=0.0, tol_lambda=0.0, max_iter=200):
    """Position-only GTRS solve for a system built with the power folded in."""
    if system.estimates_power:
        raise ValueError("system estimates power; use solve")
    eq = _Equilibrated(system)
    lam, z_hat, iterations = _bisect(eq, tol_phi, tol_lambda, max_iter)
    return _finalize(system, eq, lam, z_hat, iterations)
