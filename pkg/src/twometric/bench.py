"""Experiment harness: solver ensembles, gap curves, summary, and figure.

A plan pairs problem recipes with solver entries; every (problem, solver)
cell runs independently, writes a trace CSV, and contributes a gap curve
measured against the best objective value any solver found on that
problem.  Outputs are deterministic: wall-time fields are zeroed in the
emitted files and the figure is rendered with fixed metadata, so repeated
runs of the same plan are byte-identical.
"""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .baselines import BaselineConfig, fista_solve, ista_solve, projected_gradient_solve
from .bound import SolverConfig, StationarityConfig, solve_bound_classic, solve_bound_scaled
from .exceptions import ParameterError, TwoMetricError
from .l1 import solve_l1
from .metric import MetricSpec
from .oracle import lasso_oracle, make_lasso, make_quadratic_box
from .report import SolverReport

__all__ = [
    "ProblemSpec",
    "SolverSpec",
    "ExperimentPlan",
    "ComparisonSummary",
    "figure1_plan",
    "run_experiment",
    "estimate_convergence_order",
    "emit_plot",
]

DEFAULT_TARGETS = (1e-2, 1e-4, 1e-6, 1e-8)
GAP_FLOOR = 1e-14

LASSO_METHODS = ("adaptive", "ista", "fista")
BOUND_METHODS = ("classic", "scaled", "projected_gradient")


@dataclass(frozen=True)
class ProblemSpec:
    """Recipe for one problem: generator name plus its parameters."""

    name: str
    generator: str
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class SolverSpec:
    """One solver entry: method name, optional metric, and solver options."""

    name: str
    method: str
    metric: MetricSpec | None = None
    options: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ExperimentPlan:
    problems: tuple[ProblemSpec, ...]
    solvers: tuple[SolverSpec, ...]
    targets: tuple[float, ...] = DEFAULT_TARGETS
    outdir: str | None = None

    def __post_init__(self):
        if not self.problems or not self.solvers:
            raise ParameterError("plan needs at least one problem and one solver")
        names = [p.name for p in self.problems]
        if len(set(names)) != len(names):
            raise ParameterError("problem names must be distinct")
        recipes = [(p.generator, tuple(sorted(p.params.items()))) for p in self.problems]
        if len(set(recipes)) != len(recipes):
            raise ParameterError("problem recipes must be distinct (use distinct seeds)")
        if len({s.name for s in self.solvers}) != len(self.solvers):
            raise ParameterError("solver names must be distinct")


@dataclass
class ComparisonSummary:
    """Per-cell results: counts to each gap target, final value, timing, order."""

    targets: tuple[float, ...]
    problems: list[str]
    solvers: list[str]
    best_objective: dict
    cells: list[dict]

    def to_json_dict(self, zero_time: bool = True) -> dict:
        cells = []
        for cell in self.cells:
            rec = dict(cell)
            if zero_time:
                rec["wall_time_s"] = 0.0
            cells.append(rec)
        return {
            "targets": [format(t, ".0e") for t in self.targets],
            "problems": self.problems,
            "solvers": self.solvers,
            "best_objective": self.best_objective,
            "cells": cells,
        }


def figure1_plan(outdir: str | None = None, seeds=(0, 1, 2, 3, 4),
                 m: int = 50, n: int = 200, density: float = 0.10,
                 gamma_scale: float = 0.1) -> ExperimentPlan:
    """Preset comparing the adaptive solver (Hessian metric) with FISTA and
    proximal gradient on random sparse-recovery instances."""
    problems = tuple(
        ProblemSpec(
            name=f"lasso_m{m}_n{n}_s{seed}",
            generator="lasso",
            params={"m": m, "n": n, "density": density,
                    "gamma_scale": gamma_scale, "seed": seed},
        )
        for seed in seeds
    )
    solvers = (
        SolverSpec(name="adaptive_newton", method="adaptive",
                   metric=MetricSpec(kind="newton", ridge=1e-6),
                   options={"tol": 1e-8, "max_iterations": 2000}),
        SolverSpec(name="fista", method="fista",
                   options={"tol": 1e-5, "max_iterations": 20000}),
        SolverSpec(name="proximal_gradient", method="ista",
                   options={"tol": 1e-5, "max_iterations": 20000}),
    )
    return ExperimentPlan(problems=problems, solvers=solvers, outdir=outdir)


def _build_problem(spec: ProblemSpec):
    """Instantiate a recipe; returns (oracle, gamma_or_None, x0)."""
    p = dict(spec.params)
    if spec.generator == "lasso":
        gamma = p.pop("gamma", None)
        gamma_scale = p.pop("gamma_scale", None)
        inst = make_lasso(m=int(p["m"]), n=int(p["n"]),
                          density=float(p.get("density", 0.1)),
                          gamma=float(gamma) if gamma is not None else 1.0,
                          seed=int(p["seed"]))
        if gamma is None:
            if gamma_scale is None:
                raise ParameterError(f"problem {spec.name}: need gamma or gamma_scale")
            inst = replace(inst, gamma=float(gamma_scale) *
                           float(np.max(np.abs(inst.A.T @ inst.b))))
        oracle = lasso_oracle(inst)
        return oracle, inst.gamma, np.zeros(oracle.n)
    if spec.generator == "quadratic":
        oracle = make_quadratic_box(n=int(p["n"]), cond=float(p.get("cond", 10.0)),
                                    seed=int(p["seed"]))
        return oracle, None, np.ones(oracle.n)
    raise ParameterError(f"unknown problem generator {spec.generator!r}")


def _run_cell(problem: ProblemSpec, solver: SolverSpec) -> SolverReport:
    oracle, gamma, x0 = _build_problem(problem)
    opts = dict(solver.options)
    if solver.method in ("adaptive",):
        if gamma is None:
            raise ParameterError(f"method {solver.method} needs an l1 problem")
        cfg = SolverConfig(sigma=float(opts.get("sigma", 0.1)),
                           beta=float(opts.get("beta", 0.5)),
                           max_iterations=int(opts.get("max_iterations", 100_000)),
                           max_backtracks=int(opts.get("max_backtracks", 60)))
        metric = solver.metric or MetricSpec(kind="newton", ridge=1e-6)
        return solve_l1(oracle, x0, gamma, cfg, metric,
                        tol=float(opts.get("tol", 1e-8)))
    if solver.method in ("ista", "fista"):
        if gamma is None:
            raise ParameterError(f"method {solver.method} needs an l1 problem")
        cfg = BaselineConfig(step=opts.get("step"),
                             max_iterations=int(opts.get("max_iterations", 100_000)),
                             tol=float(opts.get("tol", 1e-8)))
        run = ista_solve if solver.method == "ista" else fista_solve
        return run(oracle, gamma, x0, cfg)
    if solver.method in ("classic", "scaled"):
        scfg = StationarityConfig(epsilon=float(opts.get("eps", 1e-6)))
        cfg = SolverConfig(sigma=float(opts.get("sigma", 0.1)),
                           beta=float(opts.get("beta", 0.5)),
                           max_iterations=int(opts.get("max_iterations", 100_000)),
                           max_backtracks=int(opts.get("max_backtracks", 60)))
        metric = solver.metric or MetricSpec(kind="identity")
        run = solve_bound_classic if solver.method == "classic" else solve_bound_scaled
        return run(oracle, x0, scfg, cfg, metric)
    if solver.method == "projected_gradient":
        cfg = BaselineConfig(step=opts.get("step"),
                             max_iterations=int(opts.get("max_iterations", 100_000)),
                             tol=float(opts.get("eps", opts.get("tol", 1e-6))))
        return projected_gradient_solve(oracle, x0, cfg)
    raise ParameterError(f"unknown solver method {solver.method!r}")


def estimate_convergence_order(gap_sequence, floor: float = GAP_FLOOR,
                               window: int = 8) -> float | None:
    """Least-squares slope of log gap_{k+1} against log gap_k over the
    trailing window of gaps above the numeric floor.

    Slope near 1 means linear convergence, > 1.2 is taken as superlinear
    evidence, and exactly 0 (constant gaps) marks stagnation.  Returns None
    when fewer than 4 usable gaps remain.
    """
    gaps = [float(v) for v in gap_sequence if np.isfinite(v) and v > floor]
    gaps = gaps[-window:]
    if len(gaps) < 4:
        return None
    logs = np.log(np.asarray(gaps))
    x, y = logs[:-1], logs[1:]
    vx = x - x.mean()
    denom = float(vx @ vx)
    if denom == 0.0:
        return 0.0
    return float(vx @ (y - y.mean())) / denom


def _objective_column(report: SolverReport) -> np.ndarray:
    name = "psi" if "psi" in report.columns else "f"
    return report.column(name)


def _iterations_to_targets(gaps: np.ndarray, targets) -> dict:
    out = {}
    for t in targets:
        hits = np.flatnonzero(gaps <= t)
        out[format(t, ".0e")] = int(hits[0]) if hits.size else None
    return out


def run_experiment(plan: ExperimentPlan) -> tuple[list[SolverReport], ComparisonSummary]:
    """Run every (problem, solver) cell; write traces, summary, and figure.

    Cell failures are recorded in the summary and do not abort the
    ensemble.  Returns the successful reports (problem-major order) and
    the summary.
    """
    threads = max(1, int(os.environ.get("TWOMETRIC_THREADS", "1")))
    cells = [(p, s) for p in plan.problems for s in plan.solvers]

    def run_one(cell):
        problem, solver = cell
        t_start = time.perf_counter()
        try:
            report = _run_cell(problem, solver)
            return report, time.perf_counter() - t_start, None
        except TwoMetricError as exc:
            return None, time.perf_counter() - t_start, str(exc)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(run_one, cells))
    else:
        outcomes = [run_one(cell) for cell in cells]

    results = {}
    for (problem, solver), (report, wall, error) in zip(cells, outcomes):
        if report is not None:
            report.meta["problem"] = problem.name
            report.meta["solver"] = solver.name
        results[(problem.name, solver.name)] = (report, wall, error)

    best_objective = {}
    for problem in plan.problems:
        finals = [
            float(_objective_column(rep)[-1])
            for rep, _, _ in (results[(problem.name, s.name)] for s in plan.solvers)
            if rep is not None and rep.trace
        ]
        if finals:
            best_objective[problem.name] = min(finals)

    summary_cells = []
    reports = []
    gap_curves: dict[tuple[str, str], np.ndarray] = {}
    for problem in plan.problems:
        for solver in plan.solvers:
            report, wall, error = results[(problem.name, solver.name)]
            cell = {"problem": problem.name, "solver": solver.name,
                    "wall_time_s": wall}
            if report is None:
                cell.update({"status": "error", "error": error})
                summary_cells.append(cell)
                continue
            reports.append(report)
            objective = _objective_column(report)
            gaps = np.maximum(objective - best_objective[problem.name], 0.0)
            gap_curves[(problem.name, solver.name)] = gaps
            cell.update({
                "status": report.status,
                "iterations": report.iterations,
                "final_objective": float(objective[-1]),
                "iterations_to_gap": _iterations_to_targets(gaps, plan.targets),
                "convergence_order": estimate_convergence_order(gaps),
            })
            summary_cells.append(cell)

    summary = ComparisonSummary(
        targets=plan.targets,
        problems=[p.name for p in plan.problems],
        solvers=[s.name for s in plan.solvers],
        best_objective=best_objective,
        cells=summary_cells,
    )

    if plan.outdir is not None:
        os.makedirs(plan.outdir, exist_ok=True)
        for problem in plan.problems:
            for solver in plan.solvers:
                report, _, _ = results[(problem.name, solver.name)]
                if report is not None:
                    path = os.path.join(plan.outdir, f"{problem.name}_{solver.name}.csv")
                    report.to_csv(path, zero_time=True)
        with open(os.path.join(plan.outdir, "summary.json"), "w") as fh:
            json.dump(summary.to_json_dict(zero_time=True), fh, indent=2, sort_keys=True)
            fh.write("\n")
        emit_plot(summary, gap_curves,
                  os.path.join(plan.outdir, "figure.svg"),
                  os.path.join(plan.outdir, "figure.dat"))
    return reports, summary


def _solver_gap_matrix(summary: ComparisonSummary, gap_curves: dict) -> np.ndarray:
    """Per-solver median gap across problems, padded with NaN; shape
    (max_len, n_solvers)."""
    max_len = max((len(g) for g in gap_curves.values()), default=0)
    out = np.full((max_len, len(summary.solvers)), np.nan)
    for j, solver in enumerate(summary.solvers):
        curves = [gap_curves[(p, solver)] for p in summary.problems
                  if (p, solver) in gap_curves]
        for i in range(max_len):
            vals = [c[i] for c in curves if len(c) > i]
            if vals:
                out[i, j] = float(np.median(vals))
    return out


def emit_plot(summary: ComparisonSummary, gap_curves: dict,
              svg_path: str, dat_path: str) -> None:
    """Render the convergence comparison (iteration vs log10 gap, one line
    per solver) to a deterministic SVG, plus a whitespace-separated data
    file with one gap column per solver and NaN for missing values."""
    if not gap_curves:
        raise ParameterError("no traces to plot")
    mat = _solver_gap_matrix(summary, gap_curves)

    lines = ["# iteration " + " ".join(summary.solvers)]
    for i in range(mat.shape[0]):
        cells = [str(i)]
        for j in range(mat.shape[1]):
            v = mat[i, j]
            cells.append("NaN" if np.isnan(v) else repr(float(v)))
        lines.append(" ".join(cells))
    with open(dat_path, "w") as fh:
        fh.write("\n".join(lines) + "\n")

    with plt.rc_context({"svg.hashsalt": "twometric"}):
        fig, ax = plt.subplots(figsize=(6.4, 4.2))
        iters = np.arange(mat.shape[0])
        for j, solver in enumerate(summary.solvers):
            col = mat[:, j]
            valid = ~np.isnan(col)
            y = np.maximum(col[valid], GAP_FLOOR)
            if valid.sum() == 1:
                ax.semilogy(iters[valid], y, marker="o", label=solver)
            else:
                ax.semilogy(iters[valid], y, label=solver)
        ax.set_xlabel("iteration")
        ax.set_ylabel("objective gap")
        ax.legend()
        ax.grid(True, which="both", alpha=0.3)
        fig.tight_layout()
        fig.savefig(svg_path, format="svg", metadata={"Date": None})
        plt.close(fig)
