"""Objective oracles and test-problem generators.

An :class:`OracleProblem` bundles a smooth objective with its gradient,
optional Hessian access, and whatever problem constants (Lipschitz bound,
objective lower bound, gradient norm bound) are known for it.  Generators
here produce the random LASSO instances, box-constrained quadratics, and a
quadratic-plus-cosine family used throughout the test suite and benchmarks.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations
from typing import Callable

import numpy as np

from .exceptions import ParameterError

__all__ = [
    "OracleProblem",
    "LassoInstance",
    "make_lasso",
    "lasso_oracle",
    "make_quadratic_box",
    "make_nonconvex",
    "instance_to_json",
    "instance_from_json",
]


@dataclass(frozen=True)
class OracleProblem:
    """Smooth objective f with first- and (optionally) second-order access.

    ``value`` and ``gradient`` must be deterministic: repeated calls at the
    same point return identical results.  ``hessian`` is None when second
    derivatives are unavailable.  The constants are optional metadata:
    ``lipschitz_constant`` bounds the gradient change per unit step,
    ``f_low`` bounds the objective from below on the feasible region, and
    ``gradient_norm_bound`` bounds ||grad f|| along any run.
    """

    n: int
    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    hessian: Callable[[np.ndarray], np.ndarray] | None = None
    lipschitz_constant: float | None = None
    f_low: float | None = None
    gradient_norm_bound: float | None = None
    name: str = "oracle"

    @property
    def has_hessian(self) -> bool:
        return self.hessian is not None


@dataclass(frozen=True)
class LassoInstance:
    """Random sparse-recovery instance: A (m x n), b = A u_true, weight gamma."""

    A: np.ndarray
    b: np.ndarray
    u_true: np.ndarray
    gamma: float
    seed: int

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]


def _check_point(x, n: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (n,):
        raise ParameterError(f"expected a vector of length {n}, got shape {x.shape}")
    return x


def make_lasso(m: int, n: int, density: float, gamma: float, seed: int) -> LassoInstance:
    """Generate a seeded random LASSO instance.

    Entries of A are i.i.d. standard normal; u_true has round(density*n)
    nonzeros (at least one) at uniformly chosen positions with standard
    normal magnitudes; b = A u_true exactly (no noise).  The same seed
    yields a bit-identical instance.
    """
    if m < 1 or n < 1:
        raise ParameterError(f"need m >= 1 and n >= 1, got m={m}, n={n}")
    if not 0.0 < density <= 1.0:
        raise ParameterError(f"density must lie in (0, 1], got {density}")
    if gamma <= 0:
        raise ParameterError(f"gamma must be positive, got {gamma}")
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m, n))
    nnz = max(1, int(round(density * n)))
    support = rng.choice(n, size=nnz, replace=False)
    u = np.zeros(n)
    u[support] = rng.standard_normal(nnz)
    b = A @ u
    return LassoInstance(A=A, b=b, u_true=u, gamma=float(gamma), seed=int(seed))


def _power_iteration_top_eigenvalue(H: np.ndarray, tol: float = 1e-10,
                                    max_iter: int = 10_000) -> float:
    """Largest eigenvalue of a symmetric PSD matrix by power iteration."""
    n = H.shape[0]
    rng = np.random.default_rng(1)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = H @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v = w / norm
        lam_new = float(v @ (H @ v))
        if abs(lam_new - lam) <= tol * max(1.0, abs(lam_new)):
            lam = lam_new
            break
        lam = lam_new
    # nudge above the Rayleigh estimate (which converges from below) so
    # downstream 1/L steps stay valid
    return lam * (1.0 + 1e-7)


def lasso_oracle(inst: LassoInstance) -> OracleProblem:
    """Smooth part of the LASSO objective: f(x) = 0.5 ||Ax - b||^2."""
    A, b = inst.A, inst.b
    n = inst.n
    AtA = A.T @ A

    def value(x):
        r = A @ _check_point(x, n) - b
        return 0.5 * float(r @ r)

    def gradient(x):
        return A.T @ (A @ _check_point(x, n) - b)

    def hessian(x):
        _check_point(x, n)
        return AtA

    L = _power_iteration_top_eigenvalue(AtA)
    return OracleProblem(
        n=n,
        value=value,
        gradient=gradient,
        hessian=hessian,
        lipschitz_constant=L,
        f_low=0.0,
        name=f"lasso_m{inst.m}_n{n}_s{inst.seed}",
    )


def _mixed_sign_center(rng: np.random.Generator, n: int) -> np.ndarray:
    """Random center with alternating signs so some constraints are active."""
    c = np.abs(rng.standard_normal(n)) + 0.25
    signs = np.where(np.arange(n) % 2 == 0, -1.0, 1.0)
    return c * signs


def _enumerate_box_minimum(Q: np.ndarray, c: np.ndarray) -> tuple[np.ndarray, float]:
    """Exact minimizer of 0.5 (x-c)' Q (x-c) over x >= 0 by active-set enumeration.

    Tries every subset of coordinates pinned at zero; the unique KKT point
    of the strictly convex program is the one with feasible free part and
    nonnegative pinned gradients.  Exponential in n; callers keep n <= 12.
    """
    n = len(c)
    Qc = Q @ c
    best_x, best_f = None, np.inf
    for k in range(n + 1):
        for zero_set in combinations(range(n), k):
            free = np.setdiff1d(np.arange(n), zero_set)
            x = np.zeros(n)
            if free.size:
                x[free] = np.linalg.solve(Q[np.ix_(free, free)], Qc[free])
                if np.any(x[free] < -1e-12):
                    continue
            g = Q @ (x - c)
            if zero_set and np.any(g[list(zero_set)] < -1e-10):
                continue
            x = np.maximum(x, 0.0)
            f = 0.5 * float((x - c) @ (Q @ (x - c)))
            if f < best_f:
                best_x, best_f = x, f
    return best_x, best_f


def _projected_gradient_minimum(Q: np.ndarray, c: np.ndarray, L: float,
                                tol: float = 1e-13,
                                max_iter: int = 500_000) -> tuple[np.ndarray, float]:
    """High-accuracy reference minimizer by fixed-step projected gradient."""
    x = np.maximum(c, 0.0)
    for _ in range(max_iter):
        g = Q @ (x - c)
        x_new = np.maximum(x - g / L, 0.0)
        if np.linalg.norm(x - x_new) <= tol:
            x = x_new
            break
        x = x_new
    f = 0.5 * float((x - c) @ (Q @ (x - c)))
    return x, f


def make_quadratic_box(n: int, cond: float = 10.0, seed: int = 0) -> OracleProblem:
    """Convex quadratic f(x) = 0.5 (x-c)' Q (x-c) for the nonnegativity-constrained solvers.

    Q is symmetric positive definite with spectrum spanning [1, cond]; the
    center c mixes signs so the constrained minimizer has active
    coordinates.  Reports L = cond and f_low = value at the exact
    constrained minimizer, computed by active-set enumeration for n <= 12
    and by a tight projected-gradient run otherwise.
    """
    if n < 1:
        raise ParameterError(f"need n >= 1, got {n}")
    if cond < 1:
        raise ParameterError(f"need cond >= 1, got {cond}")
    rng = np.random.default_rng(seed)
    if n == 1:
        eigs = np.array([float(cond)])
    else:
        eigs = np.linspace(1.0, float(cond), n)
    U, _ = np.linalg.qr(rng.standard_normal((n, n)))
    Q = (U * eigs) @ U.T
    Q = 0.5 * (Q + Q.T)
    c = _mixed_sign_center(rng, n)

    if n <= 12:
        _, f_low = _enumerate_box_minimum(Q, c)
    else:
        _, f_low = _projected_gradient_minimum(Q, c, float(cond))

    def value(x):
        d = _check_point(x, n) - c
        return 0.5 * float(d @ (Q @ d))

    def gradient(x):
        return Q @ (_check_point(x, n) - c)

    def hessian(x):
        _check_point(x, n)
        return Q

    return OracleProblem(
        n=n,
        value=value,
        gradient=gradient,
        hessian=hessian,
        lipschitz_constant=float(cond),
        f_low=float(f_low),
        name=f"quadbox_n{n}_c{cond:g}_s{seed}",
    )


def make_nonconvex(n: int, seed: int = 0, a: float = 0.1, omega: float = 2.0,
                   c: np.ndarray | None = None) -> OracleProblem:
    """Quadratic-plus-cosine objective f(x) = 0.5||x-c||^2 + a * sum_i cos(omega x_i).

    Curvature per coordinate is 1 - a*omega^2*cos(omega x_i), so
    L = 1 + a*omega^2 is certified for any a >= 0.  The defaults keep
    a*omega^2 < 1 (positive curvature everywhere); pass a larger ``a`` for
    genuinely indefinite curvature.  Bounded below by -a*n.
    """
    if n < 1:
        raise ParameterError(f"need n >= 1, got {n}")
    if a < 0 or omega <= 0:
        raise ParameterError(f"need a >= 0 and omega > 0, got a={a}, omega={omega}")
    if c is None:
        rng = np.random.default_rng(seed)
        c = _mixed_sign_center(rng, n)
    else:
        c = _check_point(c, n).copy()
    a = float(a)
    omega = float(omega)

    def value(x):
        d = _check_point(x, n) - c
        return 0.5 * float(d @ d) + a * float(np.sum(np.cos(omega * x)))

    def gradient(x):
        x = _check_point(x, n)
        return (x - c) - a * omega * np.sin(omega * x)

    def hessian(x):
        x = _check_point(x, n)
        return np.diag(1.0 - a * omega**2 * np.cos(omega * x))

    return OracleProblem(
        n=n,
        value=value,
        gradient=gradient,
        hessian=hessian,
        lipschitz_constant=1.0 + a * omega**2,
        f_low=-a * n,
        name=f"qcos_n{n}_s{seed}",
    )


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def instance_to_json(inst: LassoInstance) -> str:
    """Serialize an instance to JSON with 17 significant digits (round-trip exact)."""
    parts = [
        f'"m": {inst.m}',
        f'"n": {inst.n}',
        f'"gamma": {_fmt(inst.gamma)}',
        f'"seed": {inst.seed}',
        '"A": [' + ", ".join(_fmt(v) for v in inst.A.ravel(order="C")) + "]",
        '"b": [' + ", ".join(_fmt(v) for v in inst.b) + "]",
        '"u_true": [' + ", ".join(_fmt(v) for v in inst.u_true) + "]",
    ]
    return "{" + ", ".join(parts) + "}"


def instance_from_json(text: str) -> LassoInstance:
    """Inverse of :func:`instance_to_json`."""
    doc = json.loads(text)
    try:
        m, n = int(doc["m"]), int(doc["n"])
        A = np.asarray(doc["A"], dtype=float)
        b = np.asarray(doc["b"], dtype=float)
        u = np.asarray(doc["u_true"], dtype=float)
        gamma = float(doc["gamma"])
        seed = int(doc["seed"])
    except (KeyError, TypeError) as exc:
        raise ParameterError(f"malformed instance document: {exc}") from exc
    if A.size != m * n or b.shape != (m,) or u.shape != (n,):
        raise ParameterError(
            f"inconsistent dimensions: m={m}, n={n}, |A|={A.size}, |b|={b.size}, |u|={u.size}"
        )
    if gamma <= 0:
        raise ParameterError(f"gamma must be positive, got {gamma}")
    return LassoInstance(A=A.reshape(m, n), b=b, u_true=u, gamma=gamma, seed=seed)
