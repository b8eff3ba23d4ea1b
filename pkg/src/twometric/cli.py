"""Command-line front end.

Subcommands: solve-bound, solve-lasso, gen, check, benchmark.  Numeric
flags can also come from a JSON config file (--config); explicit flags win
over file values.  Exit codes: 0 success/converged, 1 usage or malformed
input, 2 iteration or backtrack cap, 3 numeric error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

import numpy as np

from . import bench
from .baselines import BaselineConfig
from .bound import (
    SolverConfig,
    StationarityConfig,
    eps_1o_check,
    solve_bound_classic,
    solve_bound_scaled,
)
from .exceptions import NumericError, ParameterError, TwoMetricError
from .l1 import (
    ContinuationConfig,
    default_gamma_start,
    l1_residual,
    solve_l1,
    solve_lasso_continuation,
)
from .metric import MetricSpec
from .oracle import (
    instance_from_json,
    instance_to_json,
    lasso_oracle,
    make_lasso,
    make_nonconvex,
    make_quadratic_box,
)
from .report import STATUS_CONVERGED, STATUS_NUMERIC_ERROR, SolverReport

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CAP = 2
EXIT_NUMERIC = 3


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on usage errors; this CLI reserves 2 for caps
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        sys.exit(EXIT_USAGE)


def _build_parser() -> _Parser:
    parser = _Parser(prog="twometric",
                     description="Two-metric projection solvers and benchmarks")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON file with default flag values")
        p.add_argument("--seed", type=int)
        p.add_argument("--sigma", type=float)
        p.add_argument("--beta", type=float)
        p.add_argument("--max-iterations", type=int, dest="max_iterations")
        p.add_argument("--max-backtracks", type=int, dest="max_backtracks")
        p.add_argument("--metric", choices=["identity", "diagonal", "newton"])
        p.add_argument("--ridge", type=float)
        p.add_argument("--diag-values", dest="diag_values",
                       help="comma-separated diagonal metric entries")
        p.add_argument("--trace", help="write the iteration trace CSV here")
        p.add_argument("--out", help="output directory (point.json, report.json)")

    p = sub.add_parser("solve-bound", help="solve min f(x) s.t. x >= 0")
    common(p)
    p.add_argument("--variant", choices=["classic", "scaled"], default="scaled")
    p.add_argument("--problem", choices=["quadratic", "nonconvex", "lasso"])
    p.add_argument("--n", type=int)
    p.add_argument("--cond", type=float)
    p.add_argument("--instance", help="LASSO instance JSON (its smooth part is minimized)")
    p.add_argument("--eps", type=float)
    p.add_argument("--x0", help="JSON array file with the start point")

    p = sub.add_parser("solve-lasso", help="solve min 0.5||Ax-b||^2 + gamma ||x||_1")
    common(p)
    p.add_argument("--instance", help="instance JSON file")
    p.add_argument("--m", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--density", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--gamma-scale", type=float, dest="gamma_scale",
                   help="gamma as a fraction of ||A'b||_inf")
    p.add_argument("--tol", type=float)
    p.add_argument("--no-continuation", action="store_true", dest="no_continuation")
    p.add_argument("--gamma0", type=float, help="continuation start weight")
    p.add_argument("--eta", type=float, help="continuation reduction factor")

    p = sub.add_parser("gen", help="generate an instance JSON file")
    p.add_argument("--config")
    p.add_argument("--m", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--density", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--gamma-scale", type=float, dest="gamma_scale")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True, help="output file path")

    p = sub.add_parser("check", help="verify stationarity of a point file")
    p.add_argument("--config")
    p.add_argument("--mode", choices=["bound", "l1"], required=True)
    p.add_argument("--point", required=True, help="JSON array file")
    p.add_argument("--instance", help="LASSO instance JSON")
    p.add_argument("--problem", choices=["quadratic", "nonconvex"])
    p.add_argument("--n", type=int)
    p.add_argument("--cond", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--eps", type=float)
    p.add_argument("--gamma", type=float)

    p = sub.add_parser("benchmark", help="run a solver-comparison ensemble")
    p.add_argument("--config")
    p.add_argument("--preset", choices=["figure1"])
    p.add_argument("--plan", help="experiment plan JSON file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seeds", help="comma-separated seeds for the preset")
    return parser


def _merge_config(args: argparse.Namespace) -> argparse.Namespace:
    """Fill unset flags from the JSON config file, if any."""
    path = getattr(args, "config", None)
    if not path:
        return args
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ParameterError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParameterError("config file must hold a JSON object")
    for key, value in doc.items():
        attr = key.replace("-", "_")
        if hasattr(args, attr) and getattr(args, attr) in (None, False):
            setattr(args, attr, value)
    return args


def _pick(args, name, default):
    v = getattr(args, name, None)
    return default if v is None else v


def _metric_from_args(args, default_kind: str) -> MetricSpec:
    kind = _pick(args, "metric", default_kind)
    if kind == "diagonal":
        raw = getattr(args, "diag_values", None)
        if raw is None:
            raise ParameterError("--metric diagonal needs --diag-values")
        values = np.array([float(v) for v in str(raw).split(",")])
        return MetricSpec(kind="diagonal", values=values)
    if kind == "newton":
        return MetricSpec(kind="newton", ridge=float(_pick(args, "ridge", 1e-6)))
    return MetricSpec(kind="identity")


def _solver_config(args) -> SolverConfig:
    return SolverConfig(
        sigma=float(_pick(args, "sigma", 0.1)),
        beta=float(_pick(args, "beta", 0.5)),
        max_iterations=int(_pick(args, "max_iterations", 100_000)),
        max_backtracks=int(_pick(args, "max_backtracks", 60)),
    )


def _load_instance(path):
    try:
        with open(path) as fh:
            return instance_from_json(fh.read())
    except OSError as exc:
        raise ParameterError(f"cannot read instance {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParameterError(f"instance {path} is not valid JSON: {exc}") from exc


def _write_point(path, x) -> None:
    with open(path, "w") as fh:
        fh.write("[" + ", ".join(format(float(v), ".17g") for v in x) + "]\n")


def _read_point(path) -> np.ndarray:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ParameterError(f"cannot read point {path}: {exc}") from exc
    x = np.asarray(doc, dtype=float)
    if x.ndim != 1:
        raise ParameterError("point file must hold a flat JSON array")
    return x


def _emit_outputs(args, report: SolverReport) -> None:
    outdir = getattr(args, "out", None)
    if outdir:
        os.makedirs(outdir, exist_ok=True)
        _write_point(os.path.join(outdir, "point.json"), report.x)
        with open(os.path.join(outdir, "report.json"), "w") as fh:
            fh.write(report.to_json())
            fh.write("\n")
    if getattr(args, "trace", None):
        parent = os.path.dirname(args.trace)
        if parent:
            os.makedirs(parent, exist_ok=True)
        report.to_csv(args.trace)


def _status_exit(status: str) -> int:
    if status == STATUS_CONVERGED:
        return EXIT_OK
    if status == STATUS_NUMERIC_ERROR:
        return EXIT_NUMERIC
    return EXIT_CAP


def _bound_oracle_from_args(args):
    if getattr(args, "instance", None):
        return lasso_oracle(_load_instance(args.instance))
    problem = _pick(args, "problem", "quadratic")
    n = _pick(args, "n", None)
    if n is None:
        raise ParameterError("need --n (or --instance) to define the problem")
    seed = int(_pick(args, "seed", 0))
    if problem == "nonconvex":
        return make_nonconvex(int(n), seed=seed)
    return make_quadratic_box(int(n), cond=float(_pick(args, "cond", 10.0)), seed=seed)


def _cmd_solve_bound(args) -> int:
    eps = float(_pick(args, "eps", 1e-6))
    if eps >= 1.0:
        print(f"warning: eps={eps:g} is outside (0,1); the worst-case bound "
              "does not apply", file=sys.stderr)
    oracle = _bound_oracle_from_args(args)
    cfg = _solver_config(args)
    metric = _metric_from_args(args, "identity")
    scfg = StationarityConfig(epsilon=eps)
    if getattr(args, "x0", None):
        x0 = _read_point(args.x0)
    else:
        x0 = np.ones(oracle.n)
    run = solve_bound_scaled if args.variant == "scaled" else solve_bound_classic
    report = run(oracle, x0, scfg, cfg, metric)
    last = report.trace[-1]
    print(f"status: {report.status}")
    print(f"iterations: {report.iterations}")
    print(f"f: {last['f']:.12g}")
    print(f"scaled gradient norm: {last['scaled_grad_norm']:.6g} (eps {eps:g})")
    print(f"min gradient component: {last['min_grad']:.6g}")
    if "iteration_bound" in report.meta:
        print(f"worst-case iteration bound: {report.meta['iteration_bound']} "
              f"(observed {report.iterations})")
    _emit_outputs(args, report)
    return _status_exit(report.status)


def _lasso_instance_from_args(args):
    if getattr(args, "instance", None):
        inst = _load_instance(args.instance)
        if getattr(args, "gamma", None) is not None:
            inst = replace(inst, gamma=float(args.gamma))
        return inst
    m, n = getattr(args, "m", None), getattr(args, "n", None)
    if m is None or n is None:
        raise ParameterError("need --instance or both --m and --n")
    inst = make_lasso(int(m), int(n), float(_pick(args, "density", 0.1)),
                      gamma=1.0, seed=int(_pick(args, "seed", 0)))
    gamma = getattr(args, "gamma", None)
    if gamma is None:
        scale = float(_pick(args, "gamma_scale", 0.1))
        gamma = scale * float(np.max(np.abs(inst.A.T @ inst.b)))
    return replace(inst, gamma=float(gamma))


def _cmd_solve_lasso(args) -> int:
    inst = _lasso_instance_from_args(args)
    cfg = _solver_config(args)
    metric = _metric_from_args(args, "newton")
    tol = float(_pick(args, "tol", 1e-8))
    oracle = lasso_oracle(inst)
    if getattr(args, "no_continuation", False):
        report = solve_l1(oracle, np.zeros(oracle.n), inst.gamma, cfg, metric, tol=tol)
    else:
        gamma0 = float(_pick(args, "gamma0", max(default_gamma_start(inst), inst.gamma)))
        ccfg = ContinuationConfig(gamma_start=gamma0, gamma_target=inst.gamma,
                                  eta=float(_pick(args, "eta", 0.5)), tol=tol)
        report = solve_lasso_continuation(inst, ccfg, cfg, metric)
    last = report.trace[-1]
    print(f"status: {report.status}")
    print(f"iterations: {report.iterations}")
    print(f"psi: {last['psi']:.12g}")
    print(f"residual: {last['residual']:.6g} (tol {tol:g})")
    print(f"support size: {int(last['support_size'])} of {oracle.n}")
    _emit_outputs(args, report)
    return _status_exit(report.status)


def _cmd_gen(args) -> int:
    m, n = getattr(args, "m", None), getattr(args, "n", None)
    if m is None or n is None:
        raise ParameterError("gen needs --m and --n")
    inst = make_lasso(int(m), int(n), float(_pick(args, "density", 0.1)),
                      gamma=1.0, seed=int(_pick(args, "seed", 0)))
    gamma = getattr(args, "gamma", None)
    if gamma is None:
        scale = float(_pick(args, "gamma_scale", 0.1))
        gamma = scale * float(np.max(np.abs(inst.A.T @ inst.b)))
    inst = replace(inst, gamma=float(gamma))
    with open(args.out, "w") as fh:
        fh.write(instance_to_json(inst))
        fh.write("\n")
    print(f"wrote {args.out} (m={inst.m}, n={inst.n}, gamma={inst.gamma:.6g})")
    return EXIT_OK


def _cmd_check(args) -> int:
    x = _read_point(args.point)
    if args.mode == "l1":
        if not getattr(args, "instance", None):
            raise ParameterError("l1 mode needs --instance")
        inst = _load_instance(args.instance)
        gamma = float(_pick(args, "gamma", inst.gamma))
        oracle = lasso_oracle(inst)
        tol = float(_pick(args, "eps", 1e-8))
        residual = l1_residual(x, oracle.gradient(x), gamma)
        print(f"l1 stationarity residual: {residual:.6g} (threshold {tol:g})")
        return EXIT_OK if residual <= tol else EXIT_USAGE
    oracle = _bound_oracle_from_args(args)
    eps = float(_pick(args, "eps", 1e-6))
    passed, scaled_norm, min_grad = eps_1o_check(x, oracle.gradient(x), eps)
    print(f"scaled gradient norm: {scaled_norm:.6g} (eps {eps:g})")
    print(f"min gradient component: {min_grad:.6g}")
    print("check:", "pass" if passed else "fail")
    return EXIT_OK if passed else EXIT_USAGE


def _plan_from_file(path, outdir) -> bench.ExperimentPlan:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ParameterError(f"cannot read plan {path}: {exc}") from exc
    if not isinstance(doc, dict) or not doc.get("problems") or not doc.get("solvers"):
        raise ParameterError("plan file needs nonempty 'problems' and 'solvers'")
    problems = tuple(
        bench.ProblemSpec(name=p["name"], generator=p["generator"],
                          params=dict(p.get("params", {})))
        for p in doc["problems"]
    )
    solvers = []
    for s in doc["solvers"]:
        metric = None
        if s.get("metric"):
            mdoc = dict(s["metric"])
            values = mdoc.pop("values", None)
            metric = MetricSpec(values=np.asarray(values, dtype=float)
                                if values is not None else None, **mdoc)
        solvers.append(bench.SolverSpec(name=s["name"], method=s["method"],
                                        metric=metric,
                                        options=dict(s.get("options", {}))))
    targets = tuple(float(t) for t in doc.get("targets", bench.DEFAULT_TARGETS))
    return bench.ExperimentPlan(problems=problems, solvers=tuple(solvers),
                                targets=targets, outdir=outdir)


def _cmd_benchmark(args) -> int:
    if getattr(args, "plan", None):
        plan = _plan_from_file(args.plan, args.out)
    elif getattr(args, "preset", None) == "figure1":
        seeds = (0, 1, 2, 3, 4)
        if getattr(args, "seeds", None):
            seeds = tuple(int(s) for s in str(args.seeds).split(","))
        plan = bench.figure1_plan(outdir=args.out, seeds=seeds)
    else:
        raise ParameterError("benchmark needs --preset or --plan")
    reports, summary = bench.run_experiment(plan)
    failed = [c for c in summary.cells if c.get("status") == "error"]
    print(f"ran {len(summary.cells)} cells "
          f"({len(summary.problems)} problems x {len(summary.solvers)} solvers)")
    print(f"outputs in {args.out}: per-cell CSVs, summary.json, figure.svg, figure.dat")
    for cell in failed:
        print(f"cell failed: {cell['problem']} / {cell['solver']}: {cell['error']}",
              file=sys.stderr)
    return EXIT_CAP if failed else EXIT_OK


_COMMANDS = {
    "solve-bound": _cmd_solve_bound,
    "solve-lasso": _cmd_solve_lasso,
    "gen": _cmd_gen,
    "check": _cmd_check,
    "benchmark": _cmd_benchmark,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        args = _merge_config(args)
        return _COMMANDS[args.command](args)
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except TwoMetricError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
