"""Kernel expansions: evaluation, RKHS inner products, incremental updates, averages.

A function is stored as scale * sum_i coeffs[i] * K(points[i], .). The global
scale factor lets an update of the form s*f + c*K_x touch only one float; it
is folded back into the coefficients when it risks leaving a safe magnitude
window, which changes nothing observable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .kernels import KernelSpec

# Fold the scale into the coefficients well before the hard window
# [1e-300, 1e300]; folding is observationally invisible.
_FOLD_LO = 1e-100
_FOLD_HI = 1e100


@dataclass(frozen=True)
class RkhsFunction:
    kernel: KernelSpec
    points: np.ndarray  # (n, d)
    coeffs: np.ndarray  # (n,)
    scale: float = 1.0

    def __post_init__(self):
        if self.points.ndim != 2 or self.coeffs.ndim != 1:
            raise ValueError("points must be (n, d) and coeffs (n,)")
        if len(self.points) != len(self.coeffs):
            raise ValueError("points and coeffs must have equal length")
        if not np.isfinite(self.scale):
            raise ValueError("scale must be finite")

    def __len__(self) -> int:
        return len(self.coeffs)


def zero(kernel: KernelSpec) -> RkhsFunction:
    """The empty expansion (the zero function)."""
    return RkhsFunction(kernel, np.zeros((0, 1)), np.zeros(0), 1.0)


def unit(kernel: KernelSpec, x) -> RkhsFunction:
    """The representer K_x."""
    pt = np.asarray(x, dtype=float).reshape(1, -1)
    return RkhsFunction(kernel, pt, np.ones(1), 1.0)


def _check_dim(f: RkhsFunction, x: np.ndarray):
    if len(f) and x.shape[0] != f.points.shape[1]:
        raise ValueError(f"dimension mismatch: {x.shape[0]} vs {f.points.shape[1]}")


def evaluate(f: RkhsFunction, x) -> float:
    """f(x) = scale * sum_i coeffs[i] * K(points[i], x); 0 for the empty expansion."""
    xv = np.asarray(x, dtype=float).reshape(-1)
    if len(f) == 0:
        return 0.0
    _check_dim(f, xv)
    row = kernels.cross_gram(f.kernel, xv.reshape(1, -1), f.points)[0]
    return float(f.scale * (row @ f.coeffs))


def values(f: RkhsFunction, X) -> np.ndarray:
    """f evaluated at each row of X."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if len(f) == 0:
        return np.zeros(X.shape[0])
    return f.scale * (kernels.cross_gram(f.kernel, X, f.points) @ f.coeffs)


def scale_then_append(f: RkhsFunction, s: float, c: float, x) -> RkhsFunction:
    """The expansion of s*f + c*K_x.

    s = 0 clears the existing expansion. A scale heading out of its safe
    window is folded into the coefficients first.
    """
    if not np.isfinite(s):
        raise ValueError("scale factor must be finite")
    pt = np.asarray(x, dtype=float).reshape(-1)
    if s == 0.0 or len(f) == 0:
        return RkhsFunction(f.kernel, pt.reshape(1, -1), np.array([float(c)]), 1.0)
    _check_dim(f, pt)
    new_scale = f.scale * s
    if _FOLD_LO < abs(new_scale) < _FOLD_HI:
        coeffs = np.append(f.coeffs, c / new_scale)
        return RkhsFunction(f.kernel, np.vstack([f.points, pt]), coeffs, new_scale)
    coeffs = np.append(f.coeffs * new_scale, float(c))
    return RkhsFunction(f.kernel, np.vstack([f.points, pt]), coeffs, 1.0)


def fold_scale(f: RkhsFunction) -> RkhsFunction:
    """Push the global scale into the coefficients (observationally invisible)."""
    return RkhsFunction(f.kernel, f.points, f.coeffs * f.scale, 1.0)


def rkhs_norm_sq(f: RkhsFunction) -> float:
    """scale^2 * c' G c over the support Gram; 0 for the empty expansion."""
    if len(f) == 0:
        return 0.0
    G = kernels.gram(f.kernel, f.points)
    return float(f.scale**2 * (f.coeffs @ G @ f.coeffs))


def inner(f: RkhsFunction, g: RkhsFunction) -> float:
    """RKHS inner product via the cross Gram of the two supports."""
    if f.kernel != g.kernel:
        raise ValueError("inner product requires the same kernel")
    if len(f) == 0 or len(g) == 0:
        return 0.0
    C = kernels.cross_gram(f.kernel, f.points, g.points)
    return float(f.scale * g.scale * (f.coeffs @ C @ g.coeffs))


def distance_sq(f: RkhsFunction, g: RkhsFunction) -> float:
    """Squared RKHS distance, clamped at zero from below."""
    val = rkhs_norm_sq(f) - 2.0 * inner(f, g) + rkhs_norm_sq(g)
    return max(0.0, val)


@dataclass(frozen=True)
class RunningAverage:
    """Incrementally accumulated (weighted) average of kernel expansions."""

    kind: str  # "uniform" | "weighted"
    accumulated: RkhsFunction | None = None
    total_weight: float = 0.0

    def __post_init__(self):
        if self.kind not in ("uniform", "weighted"):
            raise ValueError(f"unknown average kind {self.kind!r}")


def new_average(kind: str) -> RunningAverage:
    return RunningAverage(kind=kind)


def _add_expansions(acc: RkhsFunction, f: RkhsFunction, w: float) -> RkhsFunction:
    """acc + w*f, merging aligned support prefixes instead of re-evaluating."""
    fc = f.coeffs * (f.scale * w)
    if len(acc) == 0:
        return RkhsFunction(acc.kernel, f.points, fc.copy(), 1.0)
    if len(f) == 0:
        return acc
    short, long_ = (acc, f) if len(acc) <= len(f) else (f, acc)
    if np.array_equal(long_.points[: len(short)], short.points):
        if len(acc) <= len(f):
            coeffs = fc.copy()
            coeffs[: len(acc)] += acc.scale * acc.coeffs
            return RkhsFunction(acc.kernel, f.points, coeffs, 1.0)
        coeffs = acc.scale * acc.coeffs
        coeffs[: len(f)] += fc
        return RkhsFunction(acc.kernel, acc.points, coeffs, 1.0)
    # Disjoint supports: concatenate.
    return RkhsFunction(
        acc.kernel,
        np.vstack([acc.points, f.points]),
        np.concatenate([acc.scale * acc.coeffs, fc]),
        1.0,
    )


def push_average(avg: RunningAverage, f: RkhsFunction, weight: float = 1.0) -> RunningAverage:
    """Accumulate weight*f; uniform averages ignore the weight (treated as 1)."""
    w = 1.0 if avg.kind == "uniform" else float(weight)
    if avg.kind == "weighted" and not w > 0:
        raise ValueError("weighted average needs a positive weight")
    acc = avg.accumulated if avg.accumulated is not None else zero(f.kernel)
    if acc.kernel != f.kernel:
        raise ValueError("average and pushed function must share the kernel")
    return RunningAverage(avg.kind, _add_expansions(acc, f, w), avg.total_weight + w)


def finalize_average(avg: RunningAverage) -> RkhsFunction:
    """accumulated / total_weight."""
    if avg.total_weight <= 0 or avg.accumulated is None:
        raise RuntimeError("cannot finalize an average with zero total weight")
    acc = avg.accumulated
    return RkhsFunction(acc.kernel, acc.points, acc.coeffs, acc.scale / avg.total_weight)
