"""Two-metric projection solvers for min f(x) subject to x >= 0.

The classic iteration projects x - alpha*D*g onto the nonnegative orthant,
with the metric D constrained to act diagonally on the near-active window
I+ = {i : 0 <= x_i <= eps_k, g_i > 0}.  The scaled variant multiplies the
metric by the diagonal S (S_ii = min(x_i, 1) where the gradient pushes
toward the boundary) on both sides, which enlarges the worst-case step and
yields an explicit a-priori iteration bound; see
:func:`scaled_iteration_bound`.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .exceptions import BacktrackCapError, NumericError, ParameterError
from .metric import IndexPartition, MetricSpec, apply_metric, metric_bounds
from .oracle import OracleProblem
from .report import (
    BOUND_COLUMNS,
    STATUS_BACKTRACK_CAP,
    STATUS_CONVERGED,
    STATUS_ITERATION_CAP,
    STATUS_NUMERIC_ERROR,
    SolverReport,
)

__all__ = [
    "StationarityConfig",
    "SolverConfig",
    "project_nonneg",
    "scaling_matrix",
    "eps_1o_check",
    "omega_measure",
    "partition_bound",
    "linesearch_bound",
    "solve_bound_classic",
    "solve_bound_scaled",
    "scaled_iteration_bound",
    "scaled_decrease_witness",
    "scaled_alpha_floor",
]


@dataclass(frozen=True)
class StationarityConfig:
    """Stopping tolerance and the fixed diagonal M inside the progress measure.

    M is stored as its diagonal (None means the identity).
    """

    epsilon: float = 1e-6
    M: np.ndarray | None = None

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ParameterError(f"epsilon must be positive, got {self.epsilon}")
        if self.M is not None:
            M = np.asarray(self.M, dtype=float)
            if np.any(M <= 0):
                raise ParameterError("all diagonal entries of M must be strictly positive")
            object.__setattr__(self, "M", M)


@dataclass(frozen=True)
class SolverConfig:
    """Armijo parameters and iteration caps shared by the solvers."""

    sigma: float = 0.1
    beta: float = 0.5
    max_iterations: int = 100_000
    max_backtracks: int = 60

    def __post_init__(self):
        if not 0.0 < self.sigma < 1.0:
            raise ParameterError(f"sigma must lie in (0,1), got {self.sigma}")
        if not 0.0 < self.beta < 1.0:
            raise ParameterError(f"beta must lie in (0,1), got {self.beta}")
        if self.max_iterations < 1 or self.max_backtracks < 1:
            raise ParameterError("iteration caps must be at least 1")


def project_nonneg(x: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the nonnegative orthant."""
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise NumericError("non-finite entries in x")
    return np.maximum(x, 0.0)


def _check_feasible(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise NumericError("non-finite entries in x")
    if np.any(x < 0):
        raise ParameterError("point is infeasible (negative entries)")
    return x


def scaling_matrix(x: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Diagonal of S: min(x_i, 1) where g_i > 0, and 1 elsewhere."""
    x = _check_feasible(x)
    g = np.asarray(g, dtype=float)
    return np.where(g > 0, np.minimum(x, 1.0), 1.0)


def eps_1o_check(x: np.ndarray, g: np.ndarray, eps: float) -> tuple[bool, float, float]:
    """Approximate first-order test: ||S g|| <= eps and min_i g_i >= -eps.

    Returns (passed, ||S g||, min_i g_i).  A component with g_i < -eps
    forces S_ii = 1 and hence ||S g|| > eps, so the norm test alone already
    implies the gradient-sign test; both witnesses are returned anyway.
    """
    if eps <= 0:
        raise ParameterError(f"eps must be positive, got {eps}")
    x = _check_feasible(x)
    g = np.asarray(g, dtype=float)
    s = scaling_matrix(x, g)
    scaled_norm = float(np.linalg.norm(s * g))
    min_gradient = float(np.min(g)) if g.size else 0.0
    return (scaled_norm <= eps) and (min_gradient >= -eps), scaled_norm, min_gradient


def omega_measure(x: np.ndarray, g: np.ndarray, M: np.ndarray | None = None) -> float:
    """Projected-gradient progress measure ||x - P(x - M g)||."""
    x = _check_feasible(x)
    g = np.asarray(g, dtype=float)
    if M is None:
        step = g
    else:
        M = np.asarray(M, dtype=float)
        if np.any(M <= 0):
            raise ParameterError("M must have strictly positive diagonal entries")
        step = M * g
    return float(np.linalg.norm(x - project_nonneg(x - step)))


def partition_bound(x: np.ndarray, g: np.ndarray, eps_k: float) -> IndexPartition:
    """Near-active window {i : 0 <= x_i <= eps_k, g_i > 0} and its complement.

    Both inequalities are closed: x_i == eps_k still lands in the window.
    """
    x = _check_feasible(x)
    g = np.asarray(g, dtype=float)
    if eps_k < 0:
        raise ParameterError(f"eps_k must be nonnegative, got {eps_k}")
    return IndexPartition.from_mask((x <= eps_k) & (g > 0))


def _armijo_model(g: np.ndarray, p: np.ndarray, part: IndexPartition,
                  alpha: float, x: np.ndarray, x_alpha: np.ndarray) -> float:
    """Model decrease: alpha * <g, p> off the window plus actual movement on it."""
    free = float(g[part.minus] @ p[part.minus]) if part.minus.size else 0.0
    window = (float(g[part.plus] @ (x[part.plus] - x_alpha[part.plus]))
              if part.plus.size else 0.0)
    return alpha * free + window


def linesearch_bound(oracle: OracleProblem, x: np.ndarray, p: np.ndarray,
                     part: IndexPartition, cfg: SolverConfig,
                     f_x: float | None = None,
                     g: np.ndarray | None = None) -> tuple[int, float, np.ndarray, float]:
    """Backtracking search for the smallest m with acceptable decrease.

    Candidate points are x(alpha) = P(x - alpha p) with alpha = beta^m; a
    step is accepted once f(x) - f(x(alpha)) covers sigma times the model
    decrease.  Returns (m, alpha, x_next, f_next).
    """
    x = _check_feasible(x)
    p = np.asarray(p, dtype=float)
    if g is None:
        g = oracle.gradient(x)
    if f_x is None:
        f_x = oracle.value(x)
    for m in range(cfg.max_backtracks + 1):
        alpha = cfg.beta**m
        x_alpha = project_nonneg(x - alpha * p)
        f_alpha = oracle.value(x_alpha)
        rhs = cfg.sigma * _armijo_model(g, p, part, alpha, x, x_alpha)
        if f_x - f_alpha >= rhs:
            return m, alpha, x_alpha, f_alpha
    raise BacktrackCapError(
        f"no acceptable step within {cfg.max_backtracks} backtracks",
        diagnostics={"f": f_x, "norm_p": float(np.linalg.norm(p)),
                     "norm_g": float(np.linalg.norm(g)),
                     "max_backtracks": cfg.max_backtracks},
    )


def scaled_iteration_bound(f0: float, f_low: float, lam_min: float, lam_max: float,
                           G: float, L: float, sigma: float, beta: float,
                           eps: float) -> int:
    """Worst-case iteration count for the scaled solver with valid constants.

    ceil of (f0 - f_low) * max(4*lam_max*G, 2*L*lam_max/(1-sigma),
    2*beta*lam_min) / (sigma*beta*lam_min*eps^2).
    """
    if lam_min <= 0 or lam_max <= 0 or G <= 0 or L <= 0:
        raise ParameterError("metric bounds, G and L must be positive")
    if not 0.0 < sigma < 1.0 or not 0.0 < beta < 1.0:
        raise ParameterError("sigma and beta must lie in (0,1)")
    if not 0.0 < eps < 1.0:
        raise ParameterError(f"eps must lie in (0,1), got {eps}")
    if f0 < f_low:
        raise ParameterError("f0 below the stated lower bound")
    top = (f0 - f_low) * max(4.0 * lam_max * G,
                             2.0 * L * lam_max / (1.0 - sigma),
                             2.0 * beta * lam_min)
    return int(np.ceil(top / (sigma * beta * lam_min * eps**2)))


def scaled_alpha_floor(lam_max: float, G: float, L: float, sigma: float) -> float:
    """Step size below which the scaled Armijo test always accepts:
    min(1/(lam_max*G), 2(1-sigma)/(L*lam_max))."""
    return min(1.0 / (lam_max * G), 2.0 * (1.0 - sigma) / (L * lam_max))


def scaled_decrease_witness(lam_min: float, lam_max: float, G: float, L: float,
                            sigma: float, beta: float, eps: float) -> float:
    """Guaranteed per-step decrease of the scaled solver while unconverged:
    sigma * min(alpha_floor*beta*lam_min/4, 1/2) * eps^2."""
    abar = scaled_alpha_floor(lam_max, G, L, sigma)
    return sigma * min(abar * beta * lam_min / 4.0, 0.5) * eps**2


def _solve_bound(oracle: OracleProblem, x0, scfg: StationarityConfig,
                 cfg: SolverConfig, metric: MetricSpec, scaled: bool) -> SolverReport:
    x = _check_feasible(x0).copy()
    if x.shape != (oracle.n,):
        raise ParameterError(f"x0 has shape {x.shape}, expected ({oracle.n},)")
    trace: list[dict] = []
    meta: dict = {"variant": "scaled" if scaled else "classic",
                  "epsilon": scfg.epsilon}
    status = STATUS_ITERATION_CAP
    t0 = time.perf_counter()
    f = oracle.value(x)
    max_grad_norm = 0.0
    lam_lo_run, lam_hi_run = np.inf, 0.0

    for k in range(cfg.max_iterations + 1):
        g = oracle.gradient(x)
        if not (np.isfinite(f) and np.all(np.isfinite(g))):
            status = STATUS_NUMERIC_ERROR
            meta["error"] = "non-finite objective or gradient"
            break
        grad_norm = float(np.linalg.norm(g))
        max_grad_norm = max(max_grad_norm, grad_norm)
        passed, scaled_norm, min_grad = eps_1o_check(x, g, scfg.epsilon)
        omega = omega_measure(x, g, scfg.M)
        eps_k = min(scfg.epsilon, omega)
        part = partition_bound(x, g, eps_k)
        row = {
            "k": k, "f": f, "scaled_grad_norm": scaled_norm, "eps_k": eps_k,
            "omega_k": omega, "n_plus": int(part.plus.size), "m_k": 0,
            "alpha_k": 0.0, "time_s": time.perf_counter() - t0,
            "grad_norm": grad_norm, "min_grad": min_grad, "x": x.copy(),
        }
        trace.append(row)
        if passed:
            status = STATUS_CONVERGED
            break
        if k == cfg.max_iterations:
            status = STATUS_ITERATION_CAP
            break

        try:
            lo, hi = metric_bounds(metric, oracle, x, part)
            lam_lo_run, lam_hi_run = min(lam_lo_run, lo), max(lam_hi_run, hi)
            if scaled:
                s = scaling_matrix(x, g)
                p = s * apply_metric(metric, oracle, x, part, s * g)
            else:
                p = apply_metric(metric, oracle, x, part, g)
            if np.all(p == 0.0):
                raise NumericError("zero step direction while unconverged "
                                   "(degenerate metric)")
            m_k, alpha_k, x_next, f_next = linesearch_bound(
                oracle, x, p, part, cfg, f_x=f, g=g)
        except BacktrackCapError as exc:
            status = STATUS_BACKTRACK_CAP
            meta["error"] = str(exc)
            meta.update(exc.diagnostics)
            break
        except NumericError as exc:
            status = STATUS_NUMERIC_ERROR
            meta["error"] = str(exc)
            break
        row["m_k"] = m_k
        row["alpha_k"] = alpha_k
        row["time_s"] = time.perf_counter() - t0
        x, f = x_next, f_next

    meta["max_grad_norm"] = max_grad_norm
    if np.isfinite(lam_lo_run):
        meta["lambda_min_observed"] = lam_lo_run
        meta["lambda_max_observed"] = lam_hi_run
    if (scaled and status == STATUS_CONVERGED and max_grad_norm > 0
            and oracle.lipschitz_constant is not None and np.isfinite(lam_lo_run)
            and 0.0 < scfg.epsilon < 1.0):
        meta["decrease_witness"] = scaled_decrease_witness(
            lam_lo_run, lam_hi_run, max_grad_norm, oracle.lipschitz_constant,
            cfg.sigma, cfg.beta, scfg.epsilon)
        if oracle.f_low is not None:
            meta["iteration_bound"] = scaled_iteration_bound(
                trace[0]["f"], oracle.f_low, lam_lo_run, lam_hi_run,
                max_grad_norm, oracle.lipschitz_constant, cfg.sigma, cfg.beta,
                scfg.epsilon)
    return SolverReport(x=x, status=status, trace=trace, columns=BOUND_COLUMNS,
                        meta=meta)


def solve_bound_classic(oracle: OracleProblem, x0, scfg: StationarityConfig,
                        cfg: SolverConfig, metric: MetricSpec) -> SolverReport:
    """Classic two-metric projection: x+ = P(x - alpha * D g)."""
    return _solve_bound(oracle, x0, scfg, cfg, metric, scaled=False)


def solve_bound_scaled(oracle: OracleProblem, x0, scfg: StationarityConfig,
                       cfg: SolverConfig, metric: MetricSpec) -> SolverReport:
    """Scaled two-metric projection: x+ = P(x - alpha * S D S g)."""
    return _solve_bound(oracle, x0, scfg, cfg, metric, scaled=True)
