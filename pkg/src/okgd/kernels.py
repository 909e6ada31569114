"""Mercer kernels: pointwise evaluation, Gram matrices, and the uniform diagonal bound."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

FAMILIES = ("gaussian", "linear", "polynomial")


@dataclass(frozen=True)
class KernelSpec:
    """Parameters of one kernel family.

    gaussian:    K(x, x') = exp(-|x - x'|^2 / (2 * bandwidth^2))
    linear:      K(x, x') = <x, x'>
    polynomial:  K(x, x') = (<x, x'> + offset)^degree
    """

    family: str
    bandwidth: float = 1.0
    degree: int = 2
    offset: float = 0.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        if self.family == "gaussian" and not self.bandwidth > 0:
            raise ValueError("gaussian bandwidth must be positive")
        if self.family == "polynomial":
            if int(self.degree) != self.degree or self.degree < 1:
                raise ValueError("polynomial degree must be a positive integer")
            if self.offset < 0:
                raise ValueError("polynomial offset must be nonnegative")


def _as_matrix(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    if pts.ndim != 2:
        raise ValueError("points must be a list of equal-dimension vectors")
    return pts


def evaluate(kernel: KernelSpec, x, x2) -> float:
    """K(x, x2) for two vectors of the same dimension."""
    a = np.asarray(x, dtype=float).reshape(-1)
    b = np.asarray(x2, dtype=float).reshape(-1)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    if kernel.family == "gaussian":
        d = a - b
        return float(np.exp(-(d @ d) / (2.0 * kernel.bandwidth**2)))
    if kernel.family == "linear":
        return float(a @ b)
    return float((a @ b + kernel.offset) ** kernel.degree)


def cross_gram(kernel: KernelSpec, points_a, points_b) -> np.ndarray:
    """Matrix of K(a_i, b_j); rows index points_a, columns points_b."""
    A = _as_matrix(points_a)
    B = _as_matrix(points_b)
    if A.shape[1] != B.shape[1]:
        raise ValueError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    if kernel.family == "gaussian":
        # Explicit differences keep the matrix exactly symmetric for A == B.
        diff = A[:, None, :] - B[None, :, :]
        return np.exp(-np.sum(diff * diff, axis=2) / (2.0 * kernel.bandwidth**2))
    inner = A @ B.T
    if kernel.family == "linear":
        return inner
    return (inner + kernel.offset) ** kernel.degree


def gram(kernel: KernelSpec, points) -> np.ndarray:
    """Square Gram matrix over a nonempty point list."""
    P = _as_matrix(points)
    if P.shape[0] == 0:
        raise ValueError("gram requires a nonempty point list")
    return cross_gram(kernel, P, P)


def diag(kernel: KernelSpec, points) -> np.ndarray:
    """Vector of K(x_i, x_i)."""
    P = _as_matrix(points)
    if kernel.family == "gaussian":
        return np.ones(P.shape[0])
    sq = np.sum(P * P, axis=1)
    if kernel.family == "linear":
        return sq
    return (sq + kernel.offset) ** kernel.degree


def kappa_bound(kernel: KernelSpec, support=None) -> float:
    """sup of sqrt(K(x, x)) over the given finite support.

    The gaussian kernel has K(x, x) = 1 everywhere, so its bound is exactly 1
    and the support may be omitted. Other families need a nonempty support.
    """
    if kernel.family == "gaussian":
        return 1.0
    if support is None or len(support) == 0:
        raise ValueError("kappa_bound needs a nonempty support for non-gaussian kernels")
    return float(np.sqrt(np.max(diag(kernel, support))))
