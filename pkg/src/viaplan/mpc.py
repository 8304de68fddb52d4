"""Online re-optimization: full-horizon MPC steps under a wall-clock budget.

Each step first tries the deterministic no-via-point trajectory (stopping
primitive); otherwise it initializes the evolution strategy by warm-starting
from the time-shifted previous solution or by exploring from a straight-line
guess, runs generations until the step budget expires, and extracts a finely
sampled short-horizon reference for the tracking plant.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .costs import CostReport, CostWeights, evaluate_total
from .optimizer import EvolutionStrategy, build_prior
from .planner import evaluate_candidates, straight_line_init, PlanningProblem
from .spline import BoundaryConditions, build_basis, via_timings
from .timing import (InfeasibleError, KinodynamicLimits, PhaseGrid, Trajectory,
                     synthesize, synthesize_direct)


class ExpiredError(Exception):
    """The previous solution is shorter than the elapsed time."""


@dataclass
class MpcConfig:
    dt_mpc: float = 0.08
    t_stop: float = 1.0
    n_max: int = 4
    alpha: float = 2.0
    pop_size: int = 32
    grid_k: int = 20
    explore_sigma: float | None = None     # None: 0.5 * |goal - start|
    warmstart_sigma: float | None = None   # None: 0.05 * |goal - start|
    weights: CostWeights = field(default_factory=CostWeights)
    plant_dt: float = 1e-3
    seed: int = 0
    iterations_per_step: int | None = None  # None: wall-clock budget
    goal_tol: float = 1e-3
    vel_tol: float = 1e-3
    mode: str = "sep"
    use_chol: bool = True

    def __post_init__(self):
        if self.dt_mpc <= 0.0 or self.t_stop <= 0.0 or self.alpha <= 0.0:
            raise ValueError("dt_mpc, t_stop and alpha must be positive")
        if self.n_max < 1:
            raise ValueError("n_max must be at least 1")
        if (self.explore_sigma is not None and self.warmstart_sigma is not None
                and not self.explore_sigma > self.warmstart_sigma > 0.0):
            raise ValueError("need explore_sigma > warmstart_sigma > 0")


@dataclass
class ShortHorizon:
    times: np.ndarray
    q: np.ndarray
    qd: np.ndarray
    qdd: np.ndarray


@dataclass
class MpcStepResult:
    solution: Trajectory | None
    report: CostReport | None
    valid: bool
    mode: str                  # direct | warmstart | explore
    iterations_run: int
    short_horizon: ShortHorizon | None
    step_seconds: float


def direct_trajectory(q, qd, qT, qdT, limits: KinodynamicLimits,
                      grid: PhaseGrid) -> Trajectory:
    """The unique minimal-duration cubic from the current to the goal state."""
    bc = BoundaryConditions(q, qd, qT, qdT)
    return synthesize_direct(bc, limits, grid)


def select_n_via(t_prev: float, alpha: float, n_max: int) -> int:
    """Via-point count rule: N = max(1, min(ceil(alpha * T), n_max))."""
    if t_prev < 0.0:
        raise ValueError("duration must be non-negative")
    return max(1, min(int(np.ceil(alpha * t_prev)), n_max))


def warm_start(prev_solution: Trajectory, elapsed: float,
               new_bc: BoundaryConditions, alpha: float, n_max: int,
               warmstart_sigma: float):
    """Time-shifted previous solution as the next initial mean.

    Returns (mean, sigma_scale, n_via); raises ExpiredError when the previous
    solution has no remaining tail.
    """
    t_rem = prev_solution.duration - elapsed
    if t_rem <= 0.0:
        raise ExpiredError("previous solution expired")
    n_via = select_n_via(t_rem, alpha, n_max)
    t_via = elapsed + via_timings(n_via) * t_rem
    mean = np.stack([prev_solution.at_time(t) for t in t_via]).reshape(-1)
    return mean, warmstart_sigma, n_via


def explore_init(bc: BoundaryConditions, n_max: int, explore_sigma: float):
    """Straight-line mean with high variance and the maximal via count."""
    return straight_line_init(bc, n_max), explore_sigma, n_max


def extract_short_horizon(traj: Trajectory, dt_mpc: float,
                          plant_dt: float) -> ShortHorizon:
    """Sample q, qd, qdd at plant resolution over min(dt_mpc, T)."""
    if plant_dt > dt_mpc:
        raise ValueError("plant_dt must not exceed dt_mpc")
    return extract_reference(traj, 0.0, dt_mpc, plant_dt)


def extract_reference(traj: Trajectory, t0: float, duration: float,
                      plant_dt: float) -> ShortHorizon:
    """Reference series from traj over [t0, min(t0 + duration, T)]."""
    t_end = min(t0 + duration, traj.duration)
    n_whole = int(np.floor((t_end - t0) / plant_dt + 1e-12))
    times = t0 + plant_dt * np.arange(n_whole + 1)
    if times[-1] < t_end - 1e-12:
        times = np.append(times, t_end)
    q = np.stack([traj.at_time(t, 0) for t in times])
    qd = np.stack([traj.at_time(t, 1) for t in times])
    qdd = np.stack([traj.at_time(t, 2) for t in times])
    return ShortHorizon(times=times - t0, q=q, qd=qd, qdd=qdd)


def _sigma_defaults(config: MpcConfig, bc: BoundaryConditions):
    dist = float(np.linalg.norm(bc.qT - bc.q0)) or 1.0
    explore = config.explore_sigma if config.explore_sigma is not None else 0.5 * dist
    warm = config.warmstart_sigma if config.warmstart_sigma is not None else 0.05 * dist
    return explore, warm


def mpc_step(q, qd, qT, qdT, limits: KinodynamicLimits, config: MpcConfig,
             checker=None, push_ctx=None, prev_result: MpcStepResult | None = None,
             seed: int = 0) -> MpcStepResult:
    """One full-horizon MPC step (direct gate, then budgeted optimization)."""
    t_start = time.monotonic()
    grid = PhaseGrid(config.grid_k)
    bc = BoundaryConditions(q, qd, qT, qdT)
    explore_sigma, warmstart_sigma = _sigma_defaults(config, bc)

    try:
        direct = direct_trajectory(q, qd, qT, qdT, limits, grid)
        direct_report = evaluate_total(direct, config.weights, limits, grid,
                                       checker, push_ctx)
        if direct_report.valid and direct.duration <= config.t_stop:
            horizon = extract_short_horizon(direct, config.dt_mpc, config.plant_dt)
            return MpcStepResult(solution=direct, report=direct_report,
                                 valid=True, mode="direct", iterations_run=0,
                                 short_horizon=horizon,
                                 step_seconds=time.monotonic() - t_start)
    except InfeasibleError:
        pass

    mode = "explore"
    init = None
    if prev_result is not None and prev_result.valid and prev_result.solution is not None:
        try:
            init = warm_start(prev_result.solution, config.dt_mpc, bc,
                              config.alpha, config.n_max, warmstart_sigma)
            mode = "warmstart"
        except ExpiredError:
            init = None
    if init is None:
        init = explore_init(bc, config.n_max, explore_sigma)
    mean, sigma_scale, n_via = init

    basis = build_basis(n_via, bc.dof)
    prior = build_prior(basis, bc)
    transform = prior.chol if config.use_chol else None
    scale = prior.scale if config.use_chol else 1.0
    problem = PlanningProblem(bc, limits, n_via=n_via, pop_size=config.pop_size,
                              grid=grid, weights=config.weights, checker=checker,
                              push_ctx=push_ctx, seed=seed, mode=config.mode,
                              use_chol=config.use_chol)
    es = EvolutionStrategy(mean=mean, sigma_diag=(sigma_scale / scale) ** 2,
                           pop_size=config.pop_size, transform=transform,
                           mode=config.mode, seed=seed)
    iterations = 0
    while True:
        candidates = es.sample()
        _, _, costs = evaluate_candidates(basis, candidates, problem)
        es.update(candidates, costs)
        iterations += 1
        if config.iterations_per_step is not None:
            if iterations >= config.iterations_per_step:
                break
        elif time.monotonic() - t_start >= config.dt_mpc:
            break

    try:
        solution = synthesize(basis, es.mean.reshape(-1, bc.dof), bc, limits, grid)
        report = evaluate_total(solution, config.weights, limits, grid,
                                checker, push_ctx)
        valid = report.valid
    except InfeasibleError:
        solution, report, valid = None, None, False

    horizon = None
    if solution is not None:
        horizon = extract_short_horizon(solution, config.dt_mpc, config.plant_dt)
    return MpcStepResult(solution=solution, report=report, valid=valid,
                         mode=mode, iterations_run=iterations,
                         short_horizon=horizon,
                         step_seconds=time.monotonic() - t_start)


# -- tracking plants ------------------------------------------------------


class ExactPlant:
    """Perfectly tracks the emitted reference."""

    def __init__(self, q, qd=None):
        self.q = np.asarray(q, dtype=float).copy()
        self.qd = np.zeros_like(self.q) if qd is None else np.asarray(qd, dtype=float).copy()

    def advance(self, horizon: ShortHorizon) -> None:
        self.q = horizon.q[-1].copy()
        self.qd = horizon.qd[-1].copy()


class LagPlant(ExactPlant):
    """First-order tracking lag: the state pulls toward the reference."""

    def __init__(self, q, qd=None, time_constant: float = 0.05):
        super().__init__(q, qd)
        self.time_constant = time_constant

    def advance(self, horizon: ShortHorizon) -> None:
        for i in range(1, len(horizon.times)):
            dt = horizon.times[i] - horizon.times[i - 1]
            k = 1.0 - np.exp(-dt / self.time_constant)
            self.q = self.q + k * (horizon.q[i] - self.q)
            self.qd = self.qd + k * (horizon.qd[i] - self.qd)


@dataclass
class EpisodeLog:
    rows: list
    goal_reached: bool
    steps: int
    final_distance: float


def run_closed_loop(q0, qd0, qT, qdT, limits: KinodynamicLimits,
                    config: MpcConfig, checker=None, push_ctx=None,
                    max_steps: int = 200, plant=None,
                    disturbances: dict | None = None) -> EpisodeLog:
    """Step the MPC at 1/dt_mpc until the goal state is reached (or budget)."""
    qT = np.asarray(qT, dtype=float)
    qdT = np.asarray(qdT, dtype=float)
    if plant is None:
        plant = ExactPlant(q0, qd0)
    disturbances = disturbances or {}
    rows = []
    prev: MpcStepResult | None = None
    fallback: tuple[Trajectory, float] | None = None
    t_sim = 0.0
    goal_reached = False
    step = 0
    for step in range(max_steps):
        if step in disturbances:
            plant.q = plant.q + np.asarray(disturbances[step], dtype=float)
            prev = None  # stale plan; force explore / direct re-entry
            fallback = None
        dist = float(np.linalg.norm(plant.q - qT))
        speed = float(np.linalg.norm(plant.qd - qdT))
        if dist < config.goal_tol and speed < config.vel_tol:
            goal_reached = True
            break
        result = mpc_step(plant.q, plant.qd, qT, qdT, limits, config,
                          checker=checker, push_ctx=push_ctx, prev_result=prev,
                          seed=config.seed + step)
        horizon = result.short_horizon
        if result.valid and result.solution is not None:
            fallback = (result.solution, 0.0)
        elif fallback is not None:
            traj, offset = fallback
            if offset < traj.duration:
                horizon = extract_reference(traj, offset, config.dt_mpc,
                                            config.plant_dt)
                fallback = (traj, offset + config.dt_mpc)
            else:
                horizon = None
        if horizon is None:
            # Hold position with zero velocity.
            horizon = ShortHorizon(times=np.array([0.0, config.dt_mpc]),
                                   q=np.stack([plant.q, plant.q]),
                                   qd=np.zeros((2, plant.q.shape[0])),
                                   qdd=np.zeros((2, plant.q.shape[0])))
        plant.advance(horizon)
        if fallback is not None and result.valid:
            fallback = (fallback[0], config.dt_mpc)
        rows.append({
            "step": step, "t": t_sim, "q": plant.q.copy(), "qd": plant.qd.copy(),
            "mode": result.mode, "valid": result.valid,
            "step_cost": result.report.total if result.report else float("nan"),
            "step_seconds": result.step_seconds,
            "iterations": result.iterations_run,
        })
        prev = result if result.valid else None
        t_sim += config.dt_mpc
    final_dist = float(np.linalg.norm(plant.q - qT))
    if not goal_reached:
        goal_reached = final_dist < config.goal_tol and \
            float(np.linalg.norm(plant.qd - qdT)) < config.vel_tol
    return EpisodeLog(rows=rows, goal_reached=goal_reached,
                      steps=step, final_distance=final_dist)


# -- greedy short-horizon baseline ----------------------------------------


def greedy_step(q, qd, qT, limits: KinodynamicLimits, config: MpcConfig,
                checker=None, horizon_dist: float = 0.15, n_samples: int = 32,
                seed: int = 0):
    """Short-horizon baseline: sample nearby endpoints, pick the valid one
    closest to the goal.  Returns a Trajectory or None (no valid motion)."""
    rng = np.random.default_rng(seed)
    grid = PhaseGrid(config.grid_k)
    q = np.asarray(q, dtype=float)
    qT = np.asarray(qT, dtype=float)
    to_goal = qT - q
    dist = float(np.linalg.norm(to_goal))
    local_goal = qT if dist <= horizon_dist else q + to_goal / dist * horizon_dist
    endpoints = [local_goal]
    endpoints.extend(local_goal + (horizon_dist / 2.0)
                     * rng.standard_normal((n_samples - 1, q.shape[0])))
    best = None
    best_cost = np.inf
    for end in endpoints:
        if float(np.linalg.norm(end - q)) > horizon_dist:
            continue
        try:
            traj = direct_trajectory(q, qd, end, np.zeros_like(q), limits, grid)
        except InfeasibleError:
            continue
        report = evaluate_total(traj, config.weights, limits, grid, checker)
        if not report.valid:
            continue
        cost = float(np.sum((end - qT) ** 2))
        if cost < best_cost:
            best_cost = cost
            best = traj
    return best


def run_greedy_loop(q0, qd0, qT, qdT, limits: KinodynamicLimits,
                    config: MpcConfig, checker=None, max_steps: int = 200,
                    horizon_dist: float = 0.15) -> EpisodeLog:
    """Closed loop around the greedy baseline (stalls in concave regions)."""
    qT = np.asarray(qT, dtype=float)
    plant = ExactPlant(q0, qd0)
    rows = []
    t_sim = 0.0
    goal_reached = False
    step = 0
    for step in range(max_steps):
        dist = float(np.linalg.norm(plant.q - qT))
        if dist < config.goal_tol and float(np.linalg.norm(plant.qd)) < config.vel_tol:
            goal_reached = True
            break
        t0 = time.monotonic()
        traj = greedy_step(plant.q, plant.qd, qT, limits, config, checker,
                           horizon_dist=horizon_dist, seed=config.seed + step)
        if traj is not None:
            horizon = extract_short_horizon(traj, config.dt_mpc, config.plant_dt)
            plant.advance(horizon)
        rows.append({
            "step": step, "t": t_sim, "q": plant.q.copy(), "qd": plant.qd.copy(),
            "mode": "greedy", "valid": traj is not None,
            "step_cost": float("nan"),
            "step_seconds": time.monotonic() - t0,
            "iterations": 0,
        })
        t_sim += config.dt_mpc
    return EpisodeLog(rows=rows, goal_reached=goal_reached, steps=step,
                      final_distance=float(np.linalg.norm(plant.q - qT)))
