"""Two-metric adaptive projection for min psi(x) = f(x) + gamma*||x||_1.

Each coordinate is classified by the sign of x_i (with gradient tie-breaks
at zero) into a positive-orthant case, a negative-orthant case, or the
dead zone I+ = {i : x_i = 0, |g_i| < gamma}.  The classification fixes a
sign shift (+gamma / -gamma / 0) that turns the subdifferential into the
smooth composite gradient g + shift on the current orthant, and an
orthant-respecting projection that clamps each case to its side and pins
the dead zone to zero.  A continuation wrapper solves a geometric sequence
of regularization weights with warm starts.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

from .exceptions import BacktrackCapError, NumericError, ParameterError
from .metric import IndexPartition, MetricSpec, apply_metric
from .oracle import LassoInstance, OracleProblem, lasso_oracle
from .report import (
    L1_COLUMNS,
    STATUS_BACKTRACK_CAP,
    STATUS_CONVERGED,
    STATUS_ITERATION_CAP,
    STATUS_NUMERIC_ERROR,
    SolverReport,
)
from .bound import SolverConfig

__all__ = [
    "L1State",
    "ContinuationConfig",
    "l1_classify",
    "l1_project",
    "l1_residual",
    "l1_step_direction",
    "linesearch_l1",
    "solve_l1",
    "solve_lasso_continuation",
    "default_gamma_start",
    "gamma_schedule",
]


@dataclass(frozen=True)
class L1State:
    """Point, gradient, and the orthant classification they induce.

    ``shift`` holds +gamma on positive-case coordinates, -gamma on
    negative-case ones, and 0 exactly on the dead zone; ``partition.plus``
    is the dead zone.
    """

    x: np.ndarray
    g: np.ndarray
    gamma: float
    partition: IndexPartition
    shift: np.ndarray
    psi: float | None = None


@dataclass(frozen=True)
class ContinuationConfig:
    """Geometric regularization schedule gamma_start -> gamma_target."""

    gamma_start: float
    gamma_target: float
    eta: float = 0.5
    stage_tol_factor: float = 0.1
    tol: float = 1e-8
    max_stages: int = 100

    def __post_init__(self):
        if not self.gamma_start >= self.gamma_target > 0:
            raise ParameterError(
                f"need gamma_start >= gamma_target > 0, got "
                f"({self.gamma_start}, {self.gamma_target})"
            )
        if not 0.0 < self.eta < 1.0:
            raise ParameterError(f"eta must lie in (0,1), got {self.eta}")
        if self.max_stages < 1:
            raise ParameterError("max_stages must be at least 1")


def _check_gamma(gamma: float) -> float:
    if gamma <= 0:
        raise ParameterError(f"gamma must be positive, got {gamma}")
    return float(gamma)


def l1_classify(x: np.ndarray, g: np.ndarray, gamma: float) -> L1State:
    """Classify coordinates and build the sign shift.

    Positive case: x_i > 0, or x_i = 0 with g_i <= -gamma (shift +gamma).
    Negative case: x_i < 0, or x_i = 0 with g_i >= gamma (shift -gamma).
    Dead zone:     x_i = 0 with |g_i| < gamma strictly (shift 0).
    """
    gamma = _check_gamma(gamma)
    x = np.asarray(x, dtype=float)
    g = np.asarray(g, dtype=float)
    if x.shape != g.shape:
        raise ParameterError(f"x and g shapes differ: {x.shape} vs {g.shape}")
    at_zero = x == 0.0
    pos = (x > 0) | (at_zero & (g <= -gamma))
    neg = (x < 0) | (at_zero & (g >= gamma))
    dead = at_zero & (np.abs(g) < gamma)
    shift = np.where(pos, gamma, np.where(neg, -gamma, 0.0))
    return L1State(x=x, g=g, gamma=gamma,
                   partition=IndexPartition.from_mask(dead), shift=shift)


def l1_project(state: L1State, y: np.ndarray) -> np.ndarray:
    """Orthant-respecting projection attached to the state's classification:
    clamp to [0, inf) on positive-case coordinates, (-inf, 0] on
    negative-case ones, and pin the dead zone to zero."""
    y = np.asarray(y, dtype=float)
    if y.shape != state.x.shape:
        raise ParameterError(f"y has shape {y.shape}, expected {state.x.shape}")
    out = np.where(state.shift > 0, np.maximum(y, 0.0),
                   np.where(state.shift < 0, np.minimum(y, 0.0), 0.0))
    return out


def l1_residual(x: np.ndarray, g: np.ndarray, gamma: float) -> float:
    """Norm of the minimum-norm element of g + gamma * subdiff(||x||_1).

    Component-wise: g_i + gamma where x_i > 0, g_i - gamma where x_i < 0,
    and the distance of g_i to [-gamma, gamma] where x_i = 0.  Zero exactly
    at critical points.
    """
    gamma = _check_gamma(gamma)
    x = np.asarray(x, dtype=float)
    g = np.asarray(g, dtype=float)
    r = np.where(x > 0, g + gamma,
                 np.where(x < 0, g - gamma,
                          np.sign(g) * np.maximum(np.abs(g) - gamma, 0.0)))
    return float(np.linalg.norm(r))


def l1_step_direction(state: L1State, metric: MetricSpec, hessian_source) -> np.ndarray:
    """Step direction p = D (g + shift) with D diagonal on the dead zone."""
    return apply_metric(metric, hessian_source, state.x, state.partition,
                        state.g + state.shift)


def _psi(oracle: OracleProblem, x: np.ndarray, gamma: float) -> float:
    return oracle.value(x) + gamma * float(np.sum(np.abs(x)))


def linesearch_l1(oracle: OracleProblem, state: L1State, p: np.ndarray,
                  cfg: SolverConfig) -> tuple[int, float, np.ndarray, float]:
    """Backtracking on psi with the model decrease taken off the dead zone.

    Accepts the smallest m with psi(x) - psi(x(beta^m)) >=
    sigma * beta^m * <g + shift, p> restricted to the complement of the
    dead zone, where x(alpha) is the orthant projection of x - alpha*p.
    Returns (m, alpha, x_next, psi_next).
    """
    p = np.asarray(p, dtype=float)
    minus = state.partition.minus
    model = float((state.g[minus] + state.shift[minus]) @ p[minus]) if minus.size else 0.0
    psi_x = state.psi if state.psi is not None else _psi(oracle, state.x, state.gamma)
    for m in range(cfg.max_backtracks + 1):
        alpha = cfg.beta**m
        x_alpha = l1_project(state, state.x - alpha * p)
        psi_alpha = _psi(oracle, x_alpha, state.gamma)
        if psi_x - psi_alpha >= cfg.sigma * alpha * model:
            return m, alpha, x_alpha, psi_alpha
    raise BacktrackCapError(
        f"no acceptable step within {cfg.max_backtracks} backtracks",
        diagnostics={"psi": psi_x, "model": model,
                     "norm_p": float(np.linalg.norm(p)),
                     "max_backtracks": cfg.max_backtracks},
    )


def _snap_dust(x: np.ndarray) -> np.ndarray:
    """Zero out rounding dust in place.

    A coordinate at |x_i| ~ 1e-15 classifies into a sign-orthant case whose
    sign-preserving step sizes fall below the backtracking budget (and below
    float resolution), while at exactly zero it is handled correctly by the
    boundary cases.  The threshold is far below any meaningful coordinate
    at the problem scales this library targets.
    """
    if x.size:
        x[np.abs(x) <= 1e-14 * max(1.0, float(np.max(np.abs(x))))] = 0.0
    return x


def _solve_l1_stage(oracle: OracleProblem, x0: np.ndarray, gamma: float,
                    cfg: SolverConfig, metric: MetricSpec, tol: float,
                    stage: int, t0: float,
                    trace: list[dict]) -> tuple[np.ndarray, str]:
    """One regularization stage; appends to the shared trace, returns (x, status).

    The k column is the global row index, so concatenated stages keep a
    single running iteration counter.
    """
    x = _snap_dust(np.asarray(x0, dtype=float).copy())
    psi = _psi(oracle, x, gamma)
    for k in range(cfg.max_iterations + 1):
        g = oracle.gradient(x)
        if not (np.isfinite(psi) and np.all(np.isfinite(g))):
            return x, STATUS_NUMERIC_ERROR
        residual = l1_residual(x, g, gamma)
        state = l1_classify(x, g, gamma)
        row = {
            "k": len(trace),
            "stage": stage, "gamma": gamma, "psi": psi, "residual": residual,
            "n_plus": int(state.partition.plus.size),
            "support_size": int(np.count_nonzero(x)),
            "m_k": 0, "alpha_k": 0.0,
            "time_s": time.perf_counter() - t0,
            "l1_norm": float(np.sum(np.abs(x))), "x": x.copy(),
        }
        trace.append(row)
        if residual <= tol:
            return x, STATUS_CONVERGED
        if k == cfg.max_iterations:
            return x, STATUS_ITERATION_CAP
        try:
            state = replace(state, psi=psi)
            p = l1_step_direction(state, metric, oracle)
            if np.all(p == 0.0):
                raise NumericError("zero step direction while unconverged "
                                   "(degenerate metric)")
            m_k, alpha_k, x_next, psi_next = linesearch_l1(oracle, state, p, cfg)
        except BacktrackCapError:
            return x, STATUS_BACKTRACK_CAP
        except NumericError:
            return x, STATUS_NUMERIC_ERROR
        row["m_k"] = m_k
        row["alpha_k"] = alpha_k
        row["time_s"] = time.perf_counter() - t0
        x, psi = _snap_dust(x_next), psi_next
    return x, STATUS_ITERATION_CAP


def solve_l1(oracle: OracleProblem, x0, gamma: float, cfg: SolverConfig,
             metric: MetricSpec, tol: float = 1e-8) -> SolverReport:
    """Adaptive-projection solve at a single regularization weight.

    Iterates x+ = orthant-project(x - alpha * D(g + shift)) until the
    stationarity residual drops to ``tol`` or a cap is hit.  x0 may have
    any signs.
    """
    gamma = _check_gamma(gamma)
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (oracle.n,):
        raise ParameterError(f"x0 has shape {x0.shape}, expected ({oracle.n},)")
    trace: list[dict] = []
    t0 = time.perf_counter()
    x, status = _solve_l1_stage(oracle, x0, gamma, cfg, metric, tol,
                                stage=0, t0=t0, trace=trace)
    meta = {"gamma": gamma, "tol": tol, "stages": 1}
    return SolverReport(x=x, status=status, trace=trace, columns=L1_COLUMNS,
                        meta=meta)


def default_gamma_start(inst: LassoInstance) -> float:
    """Half the weight above which the all-zero point is optimal."""
    return 0.5 * float(np.max(np.abs(inst.A.T @ inst.b)))


def gamma_schedule(ccfg: ContinuationConfig) -> list[float]:
    """Distinct stage weights from gamma_start down to gamma_target."""
    stages = [float(ccfg.gamma_start)]
    while stages[-1] > ccfg.gamma_target and len(stages) < ccfg.max_stages:
        stages.append(max(ccfg.eta * stages[-1], ccfg.gamma_target))
    return stages


def solve_lasso_continuation(inst: LassoInstance, ccfg: ContinuationConfig,
                             cfg: SolverConfig, metric: MetricSpec,
                             x0=None) -> SolverReport:
    """Warm-started stages with geometrically decreasing regularization.

    Each stage runs :func:`solve_l1` machinery at its weight; early stages
    stop at max(stage_tol_factor * weight, tol), the final stage at tol.
    The combined trace is concatenated with the stage column as marker.
    """
    oracle = lasso_oracle(inst)
    stages = gamma_schedule(ccfg)
    if stages[-1] > ccfg.gamma_target:
        raise ParameterError(
            f"stage cap {ccfg.max_stages} reached before gamma_target; "
            f"schedule ends at {stages[-1]:.3e}"
        )
    x = np.zeros(oracle.n) if x0 is None else np.asarray(x0, dtype=float).copy()
    trace: list[dict] = []
    t0 = time.perf_counter()
    status = STATUS_CONVERGED
    for s, gamma_s in enumerate(stages):
        final = s == len(stages) - 1
        tol_s = ccfg.tol if final else max(ccfg.stage_tol_factor * gamma_s, ccfg.tol)
        x, status = _solve_l1_stage(oracle, x, gamma_s, cfg, metric, tol_s,
                                    stage=s, t0=t0, trace=trace)
        if status != STATUS_CONVERGED:
            break
    meta = {"gamma": ccfg.gamma_target, "gamma_start": ccfg.gamma_start,
            "tol": ccfg.tol, "stages": len(stages), "eta": ccfg.eta}
    return SolverReport(x=x, status=status, trace=trace, columns=L1_COLUMNS,
                        meta=meta)
