"""Offline stochastic trajectory optimization loop.

Sample via-point sets, synthesize minimal-duration trajectories, evaluate them
on the phase grid, update the evolution strategy; repeat until the best cost
stalls or the iteration budget runs out.  The returned solution is synthesized
from the final sampling mean; the best evaluated candidate is also exposed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .costs import CostReport, CostWeights, PushContext, evaluate_total
from .optimizer import EvolutionStrategy, build_prior, converged
from .spline import BoundaryConditions, build_basis, via_timings
from .timing import (InfeasibleError, KinodynamicLimits, PhaseGrid, Trajectory,
                     synthesize)


@dataclass
class PlanningProblem:
    bc: BoundaryConditions
    limits: KinodynamicLimits
    n_via: int
    pop_size: int = 16
    grid: PhaseGrid = field(default_factory=lambda: PhaseGrid(50))
    weights: CostWeights = field(default_factory=CostWeights)
    checker: object | None = None
    push_ctx: PushContext | None = None
    max_iterations: int = 500
    tol: float = 1e-6
    seed: int = 0
    mode: str = "sep"
    use_chol: bool = True

    def __post_init__(self):
        if self.n_via < 1:
            raise ValueError("the stochastic loop needs n_via >= 1")
        if self.pop_size < 4:
            raise ValueError("population size must be at least 4")


@dataclass
class SolveResult:
    trajectory: Trajectory
    report: CostReport
    best_trajectory: Trajectory
    best_report: CostReport
    best_candidate: np.ndarray
    history: list            # per-generation best cost
    history_best: list       # best-so-far cost (non-increasing)
    iterations: int
    converged: bool
    first_valid_iter: int | None = None


def straight_line_init(bc: BoundaryConditions, n_via: int) -> np.ndarray:
    """Via-points on the straight segment from q0 to qT, stacked."""
    s = via_timings(n_via)
    pts = bc.q0 + np.outer(s, bc.qT - bc.q0)
    return pts.reshape(-1)


def evaluate_candidates(basis, candidates: np.ndarray, problem: PlanningProblem):
    """Synthesize and score a population; infeasible candidates rank last."""
    dof = problem.bc.dof
    trajs: list[Trajectory | None] = []
    reports: list[CostReport | None] = []
    costs = np.empty(candidates.shape[0])
    infeasible_cost = 10.0 * problem.weights.invalid_penalty
    for i, x in enumerate(candidates):
        try:
            traj = synthesize(basis, x.reshape(-1, dof), problem.bc,
                              problem.limits, problem.grid)
        except InfeasibleError:
            trajs.append(None)
            reports.append(None)
            costs[i] = infeasible_cost
            continue
        report = evaluate_total(traj, problem.weights, problem.limits,
                                problem.grid, problem.checker, problem.push_ctx)
        trajs.append(traj)
        reports.append(report)
        costs[i] = report.total
    return trajs, reports, costs


def solve(problem: PlanningProblem, init_mean: np.ndarray | None = None,
          init_sigma_scale: float | None = None) -> SolveResult:
    """Run the optimization loop and return mean and best-ever solutions."""
    bc = problem.bc
    basis = build_basis(problem.n_via, bc.dof)
    prior = build_prior(basis, bc)
    dim = problem.n_via * bc.dof

    if init_mean is None:
        init_mean = straight_line_init(bc, problem.n_via)
    init_mean = np.asarray(init_mean, dtype=float).reshape(dim)
    if init_sigma_scale is None:
        init_sigma_scale = 0.5 * float(np.linalg.norm(bc.qT - bc.q0)) or 0.5

    transform = prior.chol if problem.use_chol else None
    scale = prior.scale if problem.use_chol else 1.0
    es = EvolutionStrategy(mean=init_mean,
                           sigma_diag=(init_sigma_scale / scale) ** 2,
                           pop_size=problem.pop_size, transform=transform,
                           mode=problem.mode, seed=problem.seed)

    history: list[float] = []
    history_best: list[float] = []
    best_cost = np.inf
    best: tuple[np.ndarray, Trajectory, CostReport] | None = None
    iterations = 0
    did_converge = False
    first_valid: int | None = None
    for iterations in range(1, problem.max_iterations + 1):
        candidates = es.sample()
        trajs, reports, costs = evaluate_candidates(basis, candidates, problem)
        if first_valid is None and any(r is not None and r.valid for r in reports):
            first_valid = iterations
        es.update(candidates, costs)
        i_best = int(np.argmin(costs))
        if trajs[i_best] is not None and costs[i_best] < best_cost:
            best_cost = costs[i_best]
            best = (candidates[i_best].copy(), trajs[i_best], reports[i_best])
        # Convergence watches the per-generation best: it only stalls once the
        # sampling distribution has collapsed onto a local optimum.
        history.append(float(costs[i_best]))
        history_best.append(float(best_cost))
        if converged(history, problem.tol):
            did_converge = True
            break

    if best is None:
        raise InfeasibleError("no candidate admitted a finite duration")

    try:
        mean_traj = synthesize(basis, es.mean.reshape(-1, bc.dof), bc,
                               problem.limits, problem.grid)
        mean_report = evaluate_total(mean_traj, problem.weights, problem.limits,
                                     problem.grid, problem.checker,
                                     problem.push_ctx)
    except InfeasibleError:
        mean_traj, mean_report = best[1], best[2]

    return SolveResult(trajectory=mean_traj, report=mean_report,
                       best_trajectory=best[1], best_report=best[2],
                       best_candidate=best[0], history=history,
                       history_best=history_best, iterations=iterations,
                       converged=did_converge, first_valid_iter=first_valid)
