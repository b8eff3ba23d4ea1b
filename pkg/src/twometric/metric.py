"""Positive-definite step metrics under the partial-diagonal constraint.

Both solver families split coordinates into a near-active set (``plus``)
and its complement (``minus``) and require the metric D to act diagonally
on the near-active block: D[i, j] = 0 for i in plus, j != i.  The
``newton`` kind applies the inverse of a ridged Hessian, coordinate-wise on
the plus set and through a Cholesky solve on the minus block; a ``literal``
flag switches to plain multiplication by the ridged Hessian for fidelity
experiments.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .exceptions import MetricError, NumericError, ParameterError

__all__ = ["MetricSpec", "IndexPartition", "apply_metric", "metric_bounds"]

KINDS = ("identity", "diagonal", "newton")


@dataclass(frozen=True)
class MetricSpec:
    """Recipe for the step metric D.

    kind "identity": D = I.
    kind "diagonal": D = diag(values), entries clipped into
        [lambda_floor, lambda_cap].
    kind "newton":   D = inverse of (hessian + ridge*I), applied per-block;
        with literal=True, D = hessian + ridge*I itself.

    The eigenvalues of the applied metric are kept inside
    [lambda_floor, lambda_cap] by clipping diagonal entries and, for the
    newton block, by raising the ridge when needed.
    """

    kind: str = "identity"
    values: np.ndarray | None = None
    ridge: float = 1e-6
    lambda_floor: float = 1e-8
    lambda_cap: float = 1e8
    literal: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown metric kind {self.kind!r}, expected one of {KINDS}")
        if self.lambda_floor <= 0 or self.lambda_cap < self.lambda_floor:
            raise ParameterError(
                f"need 0 < lambda_floor <= lambda_cap, got "
                f"({self.lambda_floor}, {self.lambda_cap})"
            )
        if self.kind == "diagonal":
            if self.values is None:
                raise ParameterError("diagonal metric needs explicit values")
            object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.kind == "newton" and self.ridge < 0:
            raise ParameterError(f"ridge must be nonnegative, got {self.ridge}")


@dataclass(frozen=True)
class IndexPartition:
    """Disjoint split of {0..n-1} into the near-active set and its complement."""

    plus: np.ndarray
    minus: np.ndarray
    n: int

    @classmethod
    def from_mask(cls, plus_mask: np.ndarray) -> "IndexPartition":
        plus_mask = np.asarray(plus_mask, dtype=bool)
        return cls(
            plus=np.flatnonzero(plus_mask),
            minus=np.flatnonzero(~plus_mask),
            n=plus_mask.size,
        )

    def __post_init__(self):
        merged = np.concatenate([self.plus, self.minus])
        if merged.size != self.n or np.unique(merged).size != self.n:
            raise ParameterError("plus/minus sets must partition {0..n-1}")


def _hessian_at(hessian_source, x: np.ndarray) -> np.ndarray:
    if hessian_source is None:
        raise ParameterError("newton metric needs a Hessian source")
    if hasattr(hessian_source, "hessian"):
        if not getattr(hessian_source, "has_hessian", True):
            raise ParameterError("oracle does not expose a Hessian")
        H = hessian_source.hessian(x)
    else:
        H = hessian_source
    H = np.asarray(H, dtype=float)
    if not np.all(np.isfinite(H)):
        raise NumericError("non-finite Hessian entries")
    return H


def _check_block_spectrum_cap(spec: MetricSpec, block: np.ndarray, ridge: float) -> None:
    # Gershgorin bound on the largest ridged eigenvalue; keeps 1/eig above
    # lambda_floor.
    radii = np.sum(np.abs(block), axis=1) - np.abs(np.diag(block))
    upper = float(np.max(np.diag(block) + radii)) + ridge
    if upper > 1.0 / spec.lambda_floor:
        raise MetricError(
            f"ridged Hessian spectrum reaches {upper:.3e} > 1/lambda_floor="
            f"{1.0 / spec.lambda_floor:.3e}; raise lambda_floor or rescale the problem"
        )


def _block_ridge_and_factor(spec: MetricSpec, block: np.ndarray):
    """Effective ridge and Cholesky factor of (block + ridge*I).

    Starts from max(spec.ridge, 1/lambda_cap) and, only if the first
    factorization fails (indefinite block), raises the ridge just enough to
    push the smallest ridged eigenvalue to 1/lambda_cap.  Both apply_metric
    and metric_bounds go through here so the certified bounds describe the
    metric as actually applied.
    """
    ridge = max(spec.ridge, 1.0 / spec.lambda_cap)
    _check_block_spectrum_cap(spec, block, ridge)
    eye = np.eye(block.shape[0])
    try:
        return ridge, cho_factor(block + ridge * eye, lower=True)
    except np.linalg.LinAlgError:
        pass
    eig_min = float(np.linalg.eigvalsh(block)[0])
    ridge = max(ridge, 1.0 / spec.lambda_cap - eig_min)
    _check_block_spectrum_cap(spec, block, ridge)
    try:
        return ridge, cho_factor(block + ridge * eye, lower=True)
    except np.linalg.LinAlgError as exc:
        raise MetricError(
            f"could not factor the minus-block within eigenvalue bounds "
            f"(ridge {ridge:.3e}, block size {block.shape[0]})"
        ) from exc


def apply_metric(spec: MetricSpec, hessian_source, x: np.ndarray,
                 part: IndexPartition, v: np.ndarray) -> np.ndarray:
    """Return p = D v for the metric described by ``spec``.

    D acts diagonally on ``part.plus`` (so perturbing v on the minus set
    never changes p on the plus set) and as a dense SPD block on
    ``part.minus``.
    """
    v = np.asarray(v, dtype=float)
    if v.shape != (part.n,):
        raise ParameterError(f"v has shape {v.shape}, expected ({part.n},)")
    if not np.all(np.isfinite(v)):
        raise NumericError("non-finite entries in v")

    if spec.kind == "identity":
        return v.copy()

    if spec.kind == "diagonal":
        d = np.clip(spec.values, spec.lambda_floor, spec.lambda_cap)
        if d.shape != (part.n,):
            raise ParameterError(f"diagonal values have shape {d.shape}, expected ({part.n},)")
        return d * v

    H = _hessian_at(hessian_source, np.asarray(x, dtype=float))
    p = np.zeros(part.n)
    plus, minus = part.plus, part.minus
    if spec.literal:
        ridge = max(spec.ridge, 0.0)
        if plus.size:
            p[plus] = (H[plus, plus] + ridge) * v[plus]
        if minus.size:
            block = H[np.ix_(minus, minus)]
            p[minus] = block @ v[minus] + ridge * v[minus]
        return p
    if plus.size:
        d = 1.0 / (H[plus, plus] + max(spec.ridge, 1.0 / spec.lambda_cap))
        p[plus] = np.clip(d, spec.lambda_floor, spec.lambda_cap) * v[plus]
    if minus.size:
        block = H[np.ix_(minus, minus)]
        _, factor = _block_ridge_and_factor(spec, block)
        p[minus] = cho_solve(factor, v[minus])
    return p


def metric_bounds(spec: MetricSpec, hessian_source, x: np.ndarray,
                  part: IndexPartition) -> tuple[float, float]:
    """Certified eigenvalue bounds (lo, hi) of the applied metric D.

    For the newton kind the minus-block bounds are the reciprocals of the
    ridged block's extreme eigenvalues (dense symmetric eigensolve; fine at
    the problem sizes this library targets).
    """
    if spec.kind == "identity":
        return 1.0, 1.0
    if spec.kind == "diagonal":
        d = np.clip(spec.values, spec.lambda_floor, spec.lambda_cap)
        return float(np.min(d)), float(np.max(d))

    H = _hessian_at(hessian_source, np.asarray(x, dtype=float))
    lows, highs = [], []
    plus, minus = part.plus, part.minus
    if spec.literal:
        ridge = max(spec.ridge, 0.0)
        if plus.size:
            d = H[plus, plus] + ridge
            lows.append(float(np.min(d)))
            highs.append(float(np.max(d)))
        if minus.size:
            eigs = np.linalg.eigvalsh(H[np.ix_(minus, minus)]) + ridge
            lows.append(float(eigs[0]))
            highs.append(float(eigs[-1]))
        return min(lows), max(highs)
    if plus.size:
        d = 1.0 / (H[plus, plus] + max(spec.ridge, 1.0 / spec.lambda_cap))
        d = np.clip(d, spec.lambda_floor, spec.lambda_cap)
        lows.append(float(np.min(d)))
        highs.append(float(np.max(d)))
    if minus.size:
        block = H[np.ix_(minus, minus)]
        ridge, _ = _block_ridge_and_factor(spec, block)
        eigs = np.linalg.eigvalsh(block) + ridge
        lows.append(1.0 / float(eigs[-1]))
        highs.append(1.0 / float(eigs[0]))
    if not lows:
        return 1.0, 1.0
    return min(lows), max(highs)
