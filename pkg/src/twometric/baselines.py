"""Reference first-order solvers: proximal gradient (ISTA), FISTA, and
fixed-step projected gradient.

These share the stopping measures of the main solvers (the l1 stationarity
residual, resp. the scaled-gradient test) so iteration counts are directly
comparable in benchmarks.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .bound import eps_1o_check, omega_measure, partition_bound, project_nonneg
from .exceptions import ParameterError
from .l1 import l1_classify, l1_residual
from .oracle import OracleProblem
from .report import (
    BOUND_COLUMNS,
    L1_COLUMNS,
    STATUS_CONVERGED,
    STATUS_ITERATION_CAP,
    SolverReport,
)

__all__ = [
    "BaselineConfig",
    "soft_threshold",
    "ista_solve",
    "fista_solve",
    "projected_gradient_solve",
]


@dataclass(frozen=True)
class BaselineConfig:
    """Fixed step size (None means 1/L from the oracle), cap, and tolerance."""

    step: float | None = None
    max_iterations: int = 100_000
    tol: float = 1e-8

    def __post_init__(self):
        if self.step is not None and self.step <= 0:
            raise ParameterError(f"step must be positive, got {self.step}")
        if self.max_iterations < 1:
            raise ParameterError("max_iterations must be at least 1")
        if self.tol <= 0:
            raise ParameterError(f"tol must be positive, got {self.tol}")


def soft_threshold(z: np.ndarray, t: float) -> np.ndarray:
    """Proximal operator of t*||.||_1: sign(z) * max(|z| - t, 0)."""
    if t < 0:
        raise ParameterError(f"threshold must be nonnegative, got {t}")
    z = np.asarray(z, dtype=float)
    return np.sign(z) * np.maximum(np.abs(z) - t, 0.0)


def _step_size(oracle: OracleProblem, cfg: BaselineConfig) -> float:
    if cfg.step is not None:
        return cfg.step
    if oracle.lipschitz_constant is None:
        raise ParameterError("no step size given and oracle reports no Lipschitz constant")
    return 1.0 / oracle.lipschitz_constant


def _l1_row(k: int, x: np.ndarray, g: np.ndarray, psi: float, residual: float,
            gamma: float, alpha: float, t0: float) -> dict:
    state = l1_classify(x, g, gamma)
    return {
        "k": k, "stage": 0, "gamma": gamma, "psi": psi, "residual": residual,
        "n_plus": int(state.partition.plus.size),
        "support_size": int(np.count_nonzero(x)),
        "m_k": 0, "alpha_k": alpha,
        "time_s": time.perf_counter() - t0,
        "l1_norm": float(np.sum(np.abs(x))),
    }


def ista_solve(oracle: OracleProblem, gamma: float, x0,
               cfg: BaselineConfig) -> SolverReport:
    """Proximal gradient with constant step: x+ = shrink(x - s*g, gamma*s)."""
    if gamma <= 0:
        raise ParameterError(f"gamma must be positive, got {gamma}")
    step = _step_size(oracle, cfg)
    x = np.asarray(x0, dtype=float).copy()
    trace: list[dict] = []
    t0 = time.perf_counter()
    status = STATUS_ITERATION_CAP
    for k in range(cfg.max_iterations + 1):
        g = oracle.gradient(x)
        psi = oracle.value(x) + gamma * float(np.sum(np.abs(x)))
        residual = l1_residual(x, g, gamma)
        alpha = 0.0 if residual <= cfg.tol or k == cfg.max_iterations else step
        trace.append(_l1_row(k, x, g, psi, residual, gamma, alpha, t0))
        if residual <= cfg.tol:
            status = STATUS_CONVERGED
            break
        if k == cfg.max_iterations:
            break
        x = soft_threshold(x - step * g, gamma * step)
    return SolverReport(x=x, status=status, trace=trace, columns=L1_COLUMNS,
                        meta={"method": "ista", "step": step, "gamma": gamma})


def fista_solve(oracle: OracleProblem, gamma: float, x0,
                cfg: BaselineConfig) -> SolverReport:
    """Accelerated proximal gradient with the standard momentum sequence
    t+ = (1 + sqrt(1 + 4 t^2)) / 2 and no restarts."""
    if gamma <= 0:
        raise ParameterError(f"gamma must be positive, got {gamma}")
    step = _step_size(oracle, cfg)
    x = np.asarray(x0, dtype=float).copy()
    y = x.copy()
    t = 1.0
    trace: list[dict] = []
    t0 = time.perf_counter()
    status = STATUS_ITERATION_CAP
    for k in range(cfg.max_iterations + 1):
        g = oracle.gradient(x)
        psi = oracle.value(x) + gamma * float(np.sum(np.abs(x)))
        residual = l1_residual(x, g, gamma)
        alpha = 0.0 if residual <= cfg.tol or k == cfg.max_iterations else step
        trace.append(_l1_row(k, x, g, psi, residual, gamma, alpha, t0))
        if residual <= cfg.tol:
            status = STATUS_CONVERGED
            break
        if k == cfg.max_iterations:
            break
        x_new = soft_threshold(y - step * oracle.gradient(y), gamma * step)
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        y = x_new + ((t - 1.0) / t_new) * (x_new - x)
        x, t = x_new, t_new
    return SolverReport(x=x, status=status, trace=trace, columns=L1_COLUMNS,
                        meta={"method": "fista", "step": step, "gamma": gamma})


def projected_gradient_solve(oracle: OracleProblem, x0,
                             cfg: BaselineConfig) -> SolverReport:
    """Fixed-step projected gradient for min f(x) s.t. x >= 0:
    x+ = P(x - s*g), stopping on the scaled-gradient test."""
    step = _step_size(oracle, cfg)
    x = project_nonneg(np.asarray(x0, dtype=float))
    trace: list[dict] = []
    t0 = time.perf_counter()
    status = STATUS_ITERATION_CAP
    for k in range(cfg.max_iterations + 1):
        g = oracle.gradient(x)
        f = oracle.value(x)
        passed, scaled_norm, _ = eps_1o_check(x, g, cfg.tol)
        omega = omega_measure(x, g, np.full(oracle.n, step))
        eps_k = min(cfg.tol, omega)
        part = partition_bound(x, g, eps_k)
        alpha = 0.0 if passed or k == cfg.max_iterations else step
        trace.append({
            "k": k, "f": f, "scaled_grad_norm": scaled_norm, "eps_k": eps_k,
            "omega_k": omega, "n_plus": int(part.plus.size), "m_k": 0,
            "alpha_k": alpha, "time_s": time.perf_counter() - t0,
        })
        if passed:
            status = STATUS_CONVERGED
            break
        if k == cfg.max_iterations:
            break
        x = project_nonneg(x - step * g)
    return SolverReport(x=x, status=status, trace=trace, columns=BOUND_COLUMNS,
                        meta={"method": "projected_gradient", "step": step})
