"""Command-line harness: offline planning, closed-loop MPC, and the two
ablation studies (via-point count, covariance factorization), all driven by a
JSON config and emitting CSV artifacts.

Exit codes: 0 success, 1 experiment-level failure, 2 usage/config error.
Identical config + seed reproduces byte-identical CSV; for the mpc command
this requires the fixed `iterations_per_step` budget (wall-clock budgets make
iteration counts machine-dependent, so step_ms is then written as 0).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .costs import CostWeights
from .mpc import LagPlant, MpcConfig, run_closed_loop, run_greedy_loop
from .planner import PlanningProblem, solve
from .spline import BoundaryConditions
from .timing import InfeasibleError, KinodynamicLimits, PhaseGrid
from .worlds import (Disk, Rect, World2D, bundled_cluttered_world,
                     single_obstacle_world)


class ConfigError(Exception):
    pass


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".12g")


def write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) if not isinstance(v, str) else v for v in row)
                 for row in rows)
    path.write_text("\n".join(lines) + "\n")


def load_config(path: str, sections: dict) -> dict:
    """Parse and strictly validate the JSON config.

    sections maps section name -> (allowed keys, required keys); unknown keys
    anywhere are errors naming the offending key.
    """
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    for name in raw:
        if name not in sections:
            raise ConfigError(f"unknown section '{name}'")
    out = {}
    for name, (allowed, required) in sections.items():
        sec = raw.get(name, {})
        if not isinstance(sec, dict):
            raise ConfigError(f"section '{name}' must be a JSON object")
        for key in sec:
            if key not in allowed:
                raise ConfigError(f"unknown key '{name}.{key}'")
        for key in required:
            if key not in sec:
                raise ConfigError(f"missing key '{name}.{key}'")
        out[name] = sec
    return out


PROBLEM_KEYS = ({"q0", "qd0", "qT", "qdT", "qd_max", "qdd_max", "q_min", "q_max"},
                {"q0", "qT", "qd_max", "qdd_max"})
COSTS_KEYS = ({"duration", "smooth", "jla", "collision", "push", "invalid_penalty"},
              set())
WORLD_KEYS = ({"type", "disks", "rects", "robot_radius", "bounds_lo", "bounds_hi"},
              set())


def build_problem(sec: dict) -> tuple[BoundaryConditions, KinodynamicLimits]:
    q0 = np.asarray(sec["q0"], dtype=float)
    qT = np.asarray(sec["qT"], dtype=float)
    qd0 = np.asarray(sec.get("qd0", np.zeros_like(q0)), dtype=float)
    qdT = np.asarray(sec.get("qdT", np.zeros_like(qT)), dtype=float)
    dof = q0.shape[0]
    ones = np.ones(dof)
    qd_max = np.asarray(sec["qd_max"], dtype=float) * ones \
        if np.ndim(sec["qd_max"]) == 0 else np.asarray(sec["qd_max"], dtype=float)
    qdd_max = np.asarray(sec["qdd_max"], dtype=float) * ones \
        if np.ndim(sec["qdd_max"]) == 0 else np.asarray(sec["qdd_max"], dtype=float)
    q_min = sec.get("q_min")
    q_max = sec.get("q_max")
    if q_min is not None:
        q_min = np.asarray(q_min, dtype=float) * ones if np.ndim(q_min) == 0 \
            else np.asarray(q_min, dtype=float)
    if q_max is not None:
        q_max = np.asarray(q_max, dtype=float) * ones if np.ndim(q_max) == 0 \
            else np.asarray(q_max, dtype=float)
    limits = KinodynamicLimits(-qd_max, qd_max, -qdd_max, qdd_max, q_min, q_max)
    return BoundaryConditions(q0, qd0, qT, qdT), limits


def build_world(sec: dict):
    kind = sec.get("type", "none")
    if kind == "none":
        return None
    if kind == "cluttered2d":
        return bundled_cluttered_world()
    if kind == "single_obstacle":
        return single_obstacle_world()
    if kind == "custom":
        obstacles = [Disk(np.array(d[:2]), d[2]) for d in sec.get("disks", [])]
        obstacles += [Rect(np.array(r[:2]), np.array(r[2:])) for r in sec.get("rects", [])]
        return World2D(obstacles=tuple(obstacles),
                       bounds_lo=np.asarray(sec.get("bounds_lo", [0.0, 0.0]), dtype=float),
                       bounds_hi=np.asarray(sec.get("bounds_hi", [1.0, 1.0]), dtype=float),
                       robot_radius=float(sec.get("robot_radius", 0.0)))
    raise ConfigError(f"unknown key 'world.type' value '{kind}'")


def build_weights(sec: dict) -> CostWeights:
    return CostWeights(**{k: float(v) for k, v in sec.items()})


# -- plan ------------------------------------------------------------------


PLAN_OPT_KEYS = ({"n_via", "pop_size", "runs", "max_iterations", "tol",
                  "init_sigma", "grid_k", "mode", "use_chol", "seed"}, {"n_via"})


def cmd_plan(args) -> int:
    cfg = load_config(args.config, {"problem": PROBLEM_KEYS,
                                    "optimizer": PLAN_OPT_KEYS,
                                    "costs": COSTS_KEYS, "world": WORLD_KEYS})
    bc, limits = build_problem(cfg["problem"])
    world = build_world(cfg["world"])
    weights = build_weights(cfg["costs"])
    opt = cfg["optimizer"]
    runs = int(opt.get("runs", 1))
    base_seed = args.seed if args.seed is not None else int(opt.get("seed", 0))
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    dof = bc.dof
    rows = []
    n_valid = 0
    for i in range(runs):
        seed = base_seed + i
        problem = PlanningProblem(
            bc, limits, n_via=int(opt["n_via"]),
            pop_size=int(opt.get("pop_size", 16)),
            grid=PhaseGrid(int(opt.get("grid_k", 50))), weights=weights,
            checker=world, max_iterations=int(opt.get("max_iterations", 500)),
            tol=float(opt.get("tol", 1e-6)), seed=seed,
            mode=str(opt.get("mode", "sep")),
            use_chol=bool(opt.get("use_chol", True)))
        sigma = opt.get("init_sigma")
        try:
            res = solve(problem, init_sigma_scale=None if sigma is None else float(sigma))
        except InfeasibleError:
            rows.append([seed, float("nan"), float("nan"), False,
                         int(opt.get("max_iterations", 500))])
            continue
        traj, report = res.trajectory, res.report
        if not report.valid and res.best_report.valid:
            traj, report = res.best_trajectory, res.best_report
        n_valid += report.valid
        rows.append([seed, report.total, traj.duration, report.valid,
                     res.iterations])
        s = np.linspace(0.0, 1.0, 101)
        q = traj.position(s)
        qd = traj.velocity(s)
        qdd = traj.acceleration(s)
        traj_rows = [[s_k * traj.duration, *q[k], *qd[k], *qdd[k]]
                     for k, s_k in enumerate(s)]
        header = (["t"] + [f"q{d}" for d in range(dof)]
                  + [f"qd{d}" for d in range(dof)]
                  + [f"qdd{d}" for d in range(dof)])
        write_csv(out_dir / f"trajectory_{seed}.csv", header, traj_rows)
        if not args.quiet:
            print(f"seed {seed}: T={traj.duration:.4f} valid={report.valid} "
                  f"iters={res.iterations}")

    write_csv(out_dir / "plan_runs.csv",
              ["seed", "final_cost", "T", "valid", "iterations"], rows)
    if n_valid == 0:
        print("no valid run", file=sys.stderr)
        return 1
    return 0


# -- mpc -------------------------------------------------------------------


MPC_KEYS = ({"dt_mpc", "t_stop", "alpha", "n_max", "pop_size", "grid_k",
             "explore_sigma", "warmstart_sigma", "plant_dt",
             "iterations_per_step", "max_steps", "goal_tol", "vel_tol", "seed",
             "mode", "use_chol", "plant", "lag_time_constant"}, set())


def parse_disturb(tokens: list[str]) -> dict:
    """Parse `step=40 dq=(0.3,0)` style tokens into {step: dq}."""
    step = None
    dq = None
    for tok in tokens:
        key, _, val = tok.partition("=")
        if key == "step":
            step = int(val)
        elif key == "dq":
            dq = [float(v) for v in val.strip("()").split(",")]
        else:
            raise ConfigError(f"unknown --disturb key '{key}'")
    if step is None or dq is None:
        raise ConfigError("--disturb needs step=<int> and dq=(..)")
    return {step: np.asarray(dq)}


def cmd_mpc(args) -> int:
    cfg = load_config(args.config, {"problem": PROBLEM_KEYS, "costs": COSTS_KEYS,
                                    "world": WORLD_KEYS, "mpc": MPC_KEYS})
    bc, limits = build_problem(cfg["problem"])
    world = build_world(cfg["world"])
    weights = build_weights(cfg["costs"])
    m = cfg["mpc"]
    seed = args.seed if args.seed is not None else int(m.get("seed", 0))
    iters = m.get("iterations_per_step")
    config = MpcConfig(
        dt_mpc=float(m.get("dt_mpc", 0.08)), t_stop=float(m.get("t_stop", 1.0)),
        n_max=int(m.get("n_max", 4)), alpha=float(m.get("alpha", 2.0)),
        pop_size=int(m.get("pop_size", 32)), grid_k=int(m.get("grid_k", 20)),
        explore_sigma=m.get("explore_sigma"),
        warmstart_sigma=m.get("warmstart_sigma"), weights=weights,
        plant_dt=float(m.get("plant_dt", 1e-3)), seed=seed,
        iterations_per_step=None if iters is None else int(iters),
        goal_tol=float(m.get("goal_tol", 1e-3)),
        vel_tol=float(m.get("vel_tol", 1e-3)),
        mode=str(m.get("mode", "sep")), use_chol=bool(m.get("use_chol", True)))
    max_steps = int(m.get("max_steps", 150))
    disturbances = parse_disturb(args.disturb) if args.disturb else None
    plant = None
    if m.get("plant", "exact") == "lag":
        plant = LagPlant(bc.q0, bc.qd0,
                         time_constant=float(m.get("lag_time_constant", 0.05)))

    if args.baseline == "greedy":
        log = run_greedy_loop(bc.q0, bc.qd0, bc.qT, bc.qdT, limits, config,
                              checker=world, max_steps=max_steps)
    else:
        log = run_closed_loop(bc.q0, bc.qd0, bc.qT, bc.qdT, limits, config,
                              checker=world, max_steps=max_steps, plant=plant,
                              disturbances=disturbances)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    dof = bc.dof
    deterministic = config.iterations_per_step is not None
    ep_rows = [[r["step"], r["t"], *r["q"], *r["qd"], r["mode"], r["step_cost"],
                0.0 if deterministic else 1e3 * r["step_seconds"], r["valid"]]
               for r in log.rows]
    header = (["step", "t"] + [f"q{d}" for d in range(dof)]
              + [f"qd{d}" for d in range(dof)]
              + ["mode", "step_cost", "step_ms", "valid"])
    write_csv(out_dir / "episode.csv", header, ep_rows)
    write_csv(out_dir / "summary.csv",
              ["goal_reached", "steps", "final_distance"],
              [[log.goal_reached, log.steps, log.final_distance]])
    if not args.quiet:
        print(f"goal_reached={log.goal_reached} steps={log.steps} "
              f"final_distance={log.final_distance:.6f}")
    if args.baseline is None and not log.goal_reached:
        return 1
    return 0


# -- ablations -------------------------------------------------------------


NVIA_OPT_KEYS = ({"n_list", "seeds", "pop_size", "max_iterations", "tol",
                  "grid_k", "seed", "init_sigma"}, set())


def cmd_ablate_nvia(args) -> int:
    cfg = load_config(args.config, {"problem": PROBLEM_KEYS,
                                    "optimizer": NVIA_OPT_KEYS,
                                    "costs": COSTS_KEYS})
    bc, limits = build_problem(cfg["problem"])
    weights = build_weights(cfg["costs"])
    opt = cfg["optimizer"]
    n_list = [int(n) for n in opt.get("n_list", list(range(1, 17)))]
    seeds = int(opt.get("seeds", 5))
    base_seed = args.seed if args.seed is not None else int(opt.get("seed", 0))
    sigma = opt.get("init_sigma")
    rows = []
    for n_via in n_list:
        for i in range(seeds):
            problem = PlanningProblem(
                bc, limits, n_via=n_via, pop_size=int(opt.get("pop_size", 16)),
                grid=PhaseGrid(int(opt.get("grid_k", 50))), weights=weights,
                max_iterations=int(opt.get("max_iterations", 500)),
                tol=float(opt.get("tol", 1e-6)), seed=base_seed + i)
            res = solve(problem,
                        init_sigma_scale=None if sigma is None else float(sigma))
            rows.append([n_via, res.trajectory.duration, res.iterations])
            if not args.quiet:
                print(f"N={n_via} seed={base_seed + i}: "
                      f"T={res.trajectory.duration:.4f} iters={res.iterations}")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_csv(out_dir / "ablate_nvia.csv", ["N", "T_final", "iterations"], rows)
    return 0


CHOL_OPT_KEYS = ({"n_via", "seeds", "pop_size", "max_iterations", "tol",
                  "grid_k", "seed", "init_sigma"}, set())

CHOL_SETUPS = (("sep_chol", "sep", True), ("sep_plain", "sep", False),
               ("full_chol", "full", True), ("full_plain", "full", False))


def cmd_ablate_chol(args) -> int:
    cfg = load_config(args.config, {"problem": PROBLEM_KEYS,
                                    "optimizer": CHOL_OPT_KEYS,
                                    "costs": COSTS_KEYS, "world": WORLD_KEYS})
    bc, limits = build_problem(cfg["problem"])
    world = build_world(cfg["world"])
    weights = build_weights(cfg["costs"])
    opt = cfg["optimizer"]
    seeds = int(opt.get("seeds", 20))
    base_seed = args.seed if args.seed is not None else int(opt.get("seed", 0))
    sigma = opt.get("init_sigma")
    rows = []
    for name, mode, use_chol in CHOL_SETUPS:
        for i in range(seeds):
            problem = PlanningProblem(
                bc, limits, n_via=int(opt.get("n_via", 6)),
                pop_size=int(opt.get("pop_size", 16)),
                grid=PhaseGrid(int(opt.get("grid_k", 50))), weights=weights,
                checker=world, max_iterations=int(opt.get("max_iterations", 150)),
                tol=float(opt.get("tol", 1e-6)), seed=base_seed + i,
                mode=mode, use_chol=use_chol)
            try:
                res = solve(problem, init_sigma_scale=None if sigma is None
                            else float(sigma))
            except InfeasibleError:
                continue
            first_valid = -1 if res.first_valid_iter is None else res.first_valid_iter
            for it, cost in enumerate(res.history_best, start=1):
                rows.append([name, base_seed + i, it, cost, first_valid])
            if not args.quiet:
                print(f"{name} seed={base_seed + i}: first_valid={first_valid} "
                      f"best={res.history_best[-1]:.4f}")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_csv(out_dir / "ablate_chol.csv",
              ["setup", "seed", "iteration", "best_cost", "first_valid_iter"],
              rows)
    return 0


# -- entry point -----------------------------------------------------------


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="viaplan")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (("plan", cmd_plan), ("mpc", cmd_mpc),
                     ("ablate-nvia", cmd_ablate_nvia),
                     ("ablate-chol", cmd_ablate_chol)):
        p = sub.add_parser(name)
        p.add_argument("config")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out-dir", default=".")
        p.add_argument("--quiet", action="store_true")
        if name == "mpc":
            p.add_argument("--baseline", choices=["greedy"], default=None)
            p.add_argument("--disturb", nargs="*", default=None)
        p.set_defaults(fn=fn)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
