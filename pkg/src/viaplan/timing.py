"""Minimal admissible duration synthesis under velocity and acceleration limits.

Given a spline in phase space, the time-domain profiles are
q-dot(s) = a(s)/T + b(s) and q-ddot(s) = c(s)/T^2 + d(s)/T, where a, c collect
the position-dependent parts and b, d the boundary-velocity parts.  On a
uniform phase grid each evaluation point admits a closed-form minimal duration
(linear inequalities in 1/T for velocities, quadratics for accelerations); the
synthesized duration is the most conservative of these, which saturates at
least one bound at one grid point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spline import BoundaryConditions, SplineBasis, build_basis


class InfeasibleError(Exception):
    """No finite duration can satisfy the kinodynamic limits."""


@dataclass(frozen=True)
class KinodynamicLimits:
    """Per-DoF box bounds on velocity, acceleration and (optionally) position."""

    qd_min: np.ndarray
    qd_max: np.ndarray
    qdd_min: np.ndarray
    qdd_max: np.ndarray
    q_min: np.ndarray | None = None
    q_max: np.ndarray | None = None

    def __post_init__(self):
        for name in ("qd_min", "qd_max", "qdd_min", "qdd_max", "q_min", "q_max"):
            val = getattr(self, name)
            if val is not None:
                object.__setattr__(self, name, np.atleast_1d(np.asarray(val, dtype=float)))
        if not (np.all(self.qd_min < 0.0) and np.all(self.qd_max > 0.0)):
            raise ValueError("velocity bounds must straddle zero")
        if not (np.all(self.qdd_min < 0.0) and np.all(self.qdd_max > 0.0)):
            raise ValueError("acceleration bounds must straddle zero")
        if (self.q_min is None) != (self.q_max is None):
            raise ValueError("q_min and q_max must be given together")
        if self.q_min is not None and not np.all(self.q_min < self.q_max):
            raise ValueError("q_min must be below q_max")

    @classmethod
    def symmetric(cls, qd: float, qdd: float, dof: int,
                  q_range: tuple[float, float] | None = None) -> "KinodynamicLimits":
        ones = np.ones(dof)
        q_min = q_max = None
        if q_range is not None:
            q_min, q_max = q_range[0] * ones, q_range[1] * ones
        return cls(-qd * ones, qd * ones, -qdd * ones, qdd * ones, q_min, q_max)


@dataclass(frozen=True)
class PhaseGrid:
    """Uniform evaluation grid s_k = k/K, k = 0..K."""

    k: int

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("phase grid needs K >= 2")

    @property
    def n_points(self) -> int:
        return self.k + 1

    @property
    def points(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.k + 1)


@dataclass(frozen=True)
class Trajectory:
    """A synthesized trajectory: spline shape plus total duration."""

    basis: SplineBasis
    q_via: np.ndarray  # (N, D)
    bc: BoundaryConditions
    duration: float
    degenerate: bool = False

    def position(self, s) -> np.ndarray:
        if self.degenerate:
            s_arr = np.atleast_1d(np.asarray(s, dtype=float))
            out = np.tile(self.bc.q0, (s_arr.shape[0], 1))
            return out[0] if np.ndim(s) == 0 else out
        u = self.basis.pack(self.q_via, self.bc, self.duration)
        vals = self.basis.eval_matrix(s, 0) @ u
        return vals[0] if np.ndim(s) == 0 else vals

    def velocity(self, s) -> np.ndarray:
        return self._derivative(s, 1)

    def acceleration(self, s) -> np.ndarray:
        return self._derivative(s, 2)

    def _derivative(self, s, order: int) -> np.ndarray:
        s_arr = np.atleast_1d(np.asarray(s, dtype=float))
        if self.degenerate:
            out = np.zeros((s_arr.shape[0], self.bc.dof))
        else:
            u = self.basis.pack(self.q_via, self.bc, self.duration)
            out = self.basis.eval_matrix(s_arr, order) @ u / self.duration**order
        return out[0] if np.ndim(s) == 0 else out

    def at_time(self, t: float, order: int = 0) -> np.ndarray:
        """Evaluate at absolute time t in [0, T] (clamped)."""
        if self.degenerate:
            return self.position(0.0) if order == 0 else np.zeros(self.bc.dof)
        s = min(max(t / self.duration, 0.0), 1.0)
        return (self.position, self.velocity, self.acceleration)[order](s)

    def sample_grid(self, grid: PhaseGrid):
        """(positions, velocities, accelerations) on the phase grid."""
        if self.degenerate:
            n = grid.n_points
            d = self.bc.dof
            return (np.tile(self.bc.q0, (n, 1)), np.zeros((n, d)), np.zeros((n, d)))
        e0, e1, e2 = self.basis.grid_matrices(grid.n_points)
        u = self.basis.pack(self.q_via, self.bc, self.duration)
        return (e0 @ u, e1 @ u / self.duration, e2 @ u / self.duration**2)


def min_duration_at_point(a, b, c, d, limits: KinodynamicLimits) -> float:
    """Closed-form minimal duration for one evaluation point.

    a, b, c, d are D-vectors with q-dot = a/T + b and q-ddot = c/T^2 + d/T.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    c = np.atleast_2d(np.asarray(c, dtype=float))
    d = np.atleast_2d(np.asarray(d, dtype=float))
    return min_duration_arrays(a, b, c, d, limits)


def min_duration_arrays(a, b, c, d, limits: KinodynamicLimits) -> float:
    """Minimal duration over stacked evaluation points, shape (..., D)."""
    if np.any(b > limits.qd_max) or np.any(b < limits.qd_min):
        raise InfeasibleError("boundary velocities exceed the velocity limits")
    with np.errstate(divide="ignore", invalid="ignore"):
        safe_a = np.where(a == 0.0, 1.0, a)
        x_vel = np.where(a > 0.0, (limits.qd_max - b) / safe_a,
                         np.where(a < 0.0, (limits.qd_min - b) / safe_a, np.inf))
    qdd_max = np.broadcast_to(limits.qdd_max, c.shape)
    qdd_min = np.broadcast_to(limits.qdd_min, c.shape)
    x_hi = _smallest_positive_root_arr(c, d, qdd_max)
    x_lo = _smallest_positive_root_arr(c, d, qdd_min)
    x = np.minimum(np.minimum(x_vel, x_hi), x_lo)
    x_min = float(np.min(x))
    if np.isinf(x_min):
        return 0.0
    if x_min <= 0.0:
        raise InfeasibleError("a kinodynamic limit is active at infinite duration")
    return 1.0 / x_min


def _smallest_positive_root_arr(c: np.ndarray, d: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Smallest x > 0 with c x^2 + d x = r, elementwise; inf where none."""
    out = np.full(np.broadcast(c, d, r).shape, np.inf)
    c, d, r = np.broadcast_arrays(c, d, r)
    lin = (c == 0.0) & (d != 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        x_lin = r / np.where(d == 0.0, 1.0, d)
    out = np.where(lin & (x_lin > 0.0), x_lin, out)
    quad = c != 0.0
    disc = d**2 + 4.0 * c * r
    ok = quad & (disc >= 0.0)
    sq = np.sqrt(np.where(ok, disc, 0.0))
    sgn = np.where(d >= 0.0, 1.0, -1.0)
    qv = -0.5 * (d + sgn * sq)
    with np.errstate(divide="ignore", invalid="ignore"):
        x1 = qv / np.where(c == 0.0, 1.0, c)
        x2 = -r / np.where(qv == 0.0, 1.0, qv)
    for x, extra in ((x1, ok), (x2, ok & (qv != 0.0))):
        out = np.minimum(out, np.where(extra & (x > 0.0), x, np.inf))
    return out


def duration_splits(basis: SplineBasis, q_via, bc: BoundaryConditions, grid: PhaseGrid):
    """(a, b, c, d) arrays of shape (K+1, D) for the duration closed form."""
    _, e1, e2 = basis.grid_matrices(grid.n_points)
    u_a, u_b = basis.pack_split(q_via, bc)
    return e1 @ u_a, e1 @ u_b, e2 @ u_a, e2 @ u_b


def min_duration(basis: SplineBasis, q_via, bc: BoundaryConditions,
                 limits: KinodynamicLimits, grid: PhaseGrid) -> float:
    """Most conservative per-point minimal duration over the phase grid."""
    a, b, c, d = duration_splits(basis, q_via, bc, grid)
    return min_duration_arrays(a, b, c, d, limits)


def synthesize(basis: SplineBasis, q_via, bc: BoundaryConditions,
               limits: KinodynamicLimits, grid: PhaseGrid) -> Trajectory:
    """Build the kinodynamically admissible trajectory of minimal duration."""
    pts = np.zeros((0, bc.dof)) if q_via is None else np.asarray(q_via, dtype=float)
    pts = pts.reshape(basis.n_via, bc.dof)
    duration = min_duration(basis, pts, bc, limits, grid)
    return Trajectory(basis, pts, bc, duration, degenerate=(duration == 0.0))


def synthesize_direct(bc: BoundaryConditions, limits: KinodynamicLimits,
                      grid: PhaseGrid) -> Trajectory:
    """No-via-point trajectory: the unique clamped cubic between the states."""
    basis = build_basis(0, bc.dof)
    return synthesize(basis, None, bc, limits, grid)
