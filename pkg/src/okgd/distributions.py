"""Finite-support synthetic distributions with exactly computable risk.

Both the inputs and the labels have finite support, so the generalization
error of any function is a finite sum, the best-in-space predictor can be
solved for numerically, and every excess risk reported by the experiment
harness is exact up to float rounding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import functions, kernels, losses
from .functions import RkhsFunction
from .kernels import KernelSpec
from .losses import LossModel

_MIN_EIG = 1e-10
_GRAD_TOL = 1e-10


class SolverError(RuntimeError):
    """The best-in-space solve did not reach the required gradient norm."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (gradient norm {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class RegressionLabels:
    """y = target(x) + noise, noise on a finite symmetric support."""

    targets: np.ndarray  # (m,)
    noise_values: np.ndarray  # (k,)
    noise_probs: np.ndarray  # (k,)

    def __post_init__(self):
        if abs(self.noise_probs.sum() - 1.0) > 1e-12 or (self.noise_probs < 0).any():
            raise ValueError("noise probabilities must be nonnegative and sum to 1")
        mirrored = sorted(zip(-self.noise_values, self.noise_probs))
        direct = sorted(zip(self.noise_values, self.noise_probs))
        for (va, pa), (vb, pb) in zip(mirrored, direct):
            if abs(va - vb) > 1e-12 or abs(pa - pb) > 1e-12:
                raise ValueError("noise support must be symmetric")


@dataclass(frozen=True)
class ClassificationLabels:
    """y in {-1, +1} with P(y = +1 | x_i) = p_plus[i]."""

    p_plus: np.ndarray  # (m,)

    def __post_init__(self):
        if ((self.p_plus < 0) | (self.p_plus > 1)).any():
            raise ValueError("p_plus entries must lie in [0, 1]")


@dataclass(frozen=True)
class FiniteDistribution:
    support_x: np.ndarray  # (m, d)
    probs_x: np.ndarray  # (m,)
    labels: RegressionLabels | ClassificationLabels

    def __post_init__(self):
        m = self.support_x.shape[0]
        if self.probs_x.shape != (m,):
            raise ValueError("probs_x must match the support size")
        if abs(self.probs_x.sum() - 1.0) > 1e-12 or (self.probs_x < 0).any():
            raise ValueError("probs_x must be nonnegative and sum to 1")
        n_lab = (
            self.labels.targets.shape[0]
            if isinstance(self.labels, RegressionLabels)
            else self.labels.p_plus.shape[0]
        )
        if n_lab != m:
            raise ValueError("label model must match the support size")

    @property
    def m(self) -> int:
        return self.support_x.shape[0]


def regression_distribution(support_x, probs_x, targets, noise: float) -> FiniteDistribution:
    """Two-point label noise +-noise, each with probability 1/2 (noise 0 allowed)."""
    support = np.atleast_2d(np.asarray(support_x, dtype=float))
    if support.shape[0] == 1 and np.asarray(support_x).ndim == 1:
        support = np.asarray(support_x, dtype=float).reshape(-1, 1)
    targets = np.asarray(targets, dtype=float)
    if noise > 0:
        labels = RegressionLabels(targets, np.array([-noise, noise]), np.array([0.5, 0.5]))
    else:
        labels = RegressionLabels(targets, np.zeros(1), np.ones(1))
    return FiniteDistribution(support, np.asarray(probs_x, dtype=float), labels)


def classification_distribution(support_x, probs_x, p_plus) -> FiniteDistribution:
    support = np.atleast_2d(np.asarray(support_x, dtype=float))
    if support.shape[0] == 1 and np.asarray(support_x).ndim == 1:
        support = np.asarray(support_x, dtype=float).reshape(-1, 1)
    return FiniteDistribution(
        support, np.asarray(probs_x, dtype=float), ClassificationLabels(np.asarray(p_plus, dtype=float))
    )


def label_matrix(dist: FiniteDistribution) -> tuple[np.ndarray, np.ndarray]:
    """Per support point: label values Y (m, k) and conditional probabilities Q."""
    if isinstance(dist.labels, RegressionLabels):
        Y = dist.labels.targets[:, None] + dist.labels.noise_values[None, :]
        Q = np.broadcast_to(dist.labels.noise_probs, Y.shape).copy()
        return Y, Q
    p = dist.labels.p_plus
    Y = np.broadcast_to(np.array([1.0, -1.0]), (dist.m, 2)).copy()
    Q = np.stack([p, 1.0 - p], axis=1)
    return Y, Q


def conditional_mean(dist: FiniteDistribution) -> np.ndarray:
    Y, Q = label_matrix(dist)
    return np.sum(Y * Q, axis=1)


def sample_many(dist: FiniteDistribution, rng: np.random.Generator, n: int):
    """n independent draws; returns (support indices, labels).

    Consumes 2n uniforms in a fixed order, so a replay with the same seed
    reproduces the stream exactly.
    """
    cum_x = np.cumsum(dist.probs_x)
    u = rng.random(n)
    idx = np.minimum(np.searchsorted(cum_x, u, side="right"), dist.m - 1)
    v = rng.random(n)
    if isinstance(dist.labels, RegressionLabels):
        cum_n = np.cumsum(dist.labels.noise_probs)
        j = np.minimum(np.searchsorted(cum_n, v, side="right"), len(cum_n) - 1)
        y = dist.labels.targets[idx] + dist.labels.noise_values[j]
    else:
        y = np.where(v < dist.labels.p_plus[idx], 1.0, -1.0)
    return idx, y


def sample(dist: FiniteDistribution, rng: np.random.Generator):
    """One draw (x, y)."""
    idx, y = sample_many(dist, rng, 1)
    return dist.support_x[idx[0]].copy(), float(y[0])


# ---------------------------------------------------------------------------
# Exact risk and the best-in-space solve


@dataclass(frozen=True)
class RiskOracle:
    """Exact generalization-error computations around the best-in-space predictor."""

    dist: FiniteDistribution
    loss: LossModel
    kernel: KernelSpec
    minimizer: RkhsFunction
    minimizer_values: np.ndarray  # (m,)
    minimizer_norm_sq: float
    risk_at_minimizer: float
    gram: np.ndarray
    grad_norm: float  # RKHS norm of the restricted risk gradient at the minimizer

    @property
    def kappa(self) -> float:
        return kernels.kappa_bound(self.kernel, self.dist.support_x)


def risk_from_values(dist: FiniteDistribution, loss: LossModel, v: np.ndarray) -> float:
    """E(f) from f's values at the support points (an exact finite sum)."""
    Y, Q = label_matrix(dist)
    phi = losses.value(loss, Y, np.asarray(v)[:, None])
    return float(np.sum(dist.probs_x[:, None] * Q * phi))


def mean_derivative_from_values(dist, loss, v: np.ndarray) -> np.ndarray:
    """Per support point, the conditional expectation of dphi(y, v_i)."""
    Y, Q = label_matrix(dist)
    dphi = losses.derivative(loss, Y, np.asarray(v)[:, None])
    return np.sum(Q * dphi, axis=1)


def restricted_gradient_norm(oracle_or_parts, v: np.ndarray) -> float:
    """RKHS norm of sum_i probs[i] * E[dphi | x_i] * K_{x_i} at values v."""
    dist, loss, G = oracle_or_parts
    w = dist.probs_x * mean_derivative_from_values(dist, loss, v)
    return float(np.sqrt(max(0.0, w @ G @ w)))


def _refined_solve(G: np.ndarray, b: np.ndarray) -> np.ndarray:
    c = np.linalg.solve(G, b)
    for _ in range(3):
        r = b - G @ c
        if np.linalg.norm(r) <= 1e-14 * (np.linalg.norm(b) + 1.0):
            break
        c = c + np.linalg.solve(G, r)
    return c


def _scalar_minimizer(loss: LossModel, ys: np.ndarray, qs: np.ndarray) -> float:
    """argmin over v of sum_j qs[j] * phi(ys[j], v), by bisection on the derivative."""

    def dpsi(v):
        return float(qs @ losses.derivative(loss, ys, np.full_like(ys, v)))

    lo, hi = -1.0, 1.0
    for _ in range(64):
        if dpsi(lo) <= 0:
            break
        lo *= 2.0
    for _ in range(64):
        if dpsi(hi) >= 0:
            break
        hi *= 2.0
    if dpsi(lo) > 0 or dpsi(hi) < 0:
        raise SolverError("conditional risk has no finite stationary point", np.inf)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if dpsi(mid) <= 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _descent_polish(dist, loss, G, c: np.ndarray, max_iter: int = 10**6) -> np.ndarray:
    """Full-gradient descent with backtracking on the expansion coefficients.

    The descent direction is the risk gradient restricted to the span,
    whose coefficient vector is probs * E[dphi]; convergence is declared when
    its RKHS norm falls below the solver tolerance.
    """
    obj = lambda cc: risk_from_values(dist, loss, G @ cc)
    current = obj(c)
    step0 = 1.0 / (loss.self_A * np.max(np.diag(G)))
    for _ in range(max_iter):
        v = G @ c
        d = dist.probs_x * mean_derivative_from_values(dist, loss, v)
        sq = float(d @ G @ d)
        if np.sqrt(max(0.0, sq)) <= _GRAD_TOL:
            return c
        s = step0
        for _ in range(120):
            trial = obj(c - s * d)
            if trial <= current - 0.5 * s * sq:
                break
            s *= 0.5
        c = c - s * d
        current = trial
    v = G @ c
    d = dist.probs_x * mean_derivative_from_values(dist, loss, v)
    raise SolverError("descent did not converge", float(np.sqrt(d @ G @ d)))


def solve_f_H(dist: FiniteDistribution, loss: LossModel, kernel: KernelSpec) -> RiskOracle:
    """Best-in-space predictor and its exact risk.

    The risk depends on a function only through its values at the support
    points, and the span of the support representers attains any value
    vector, so the search is over expansions on the support. Least squares
    solves the linear system G c = conditional mean directly; other losses
    warm-start from per-point scalar minimizers and then run full-gradient
    descent on the coefficients until the restricted gradient norm is tiny.
    """
    G = kernels.gram(kernel, dist.support_x)
    min_eig = float(np.linalg.eigvalsh(G)[0])
    if min_eig <= _MIN_EIG:
        raise ValueError(
            f"support Gram is numerically singular (min eigenvalue {min_eig:.3e}); "
            "use distinct, better-separated support points"
        )
    if loss.family == "least_squares":
        target = conditional_mean(dist)
        c = _refined_solve(G, target)
    else:
        Y, Q = label_matrix(dist)
        v_star = np.array(
            [_scalar_minimizer(loss, Y[i], Q[i]) for i in range(dist.m)]
        )
        c = _refined_solve(G, v_star)
    c = _descent_polish(dist, loss, G, c)
    v = G @ c
    grad = restricted_gradient_norm((dist, loss, G), v)
    minimizer = RkhsFunction(kernel, dist.support_x.copy(), c, 1.0)
    return RiskOracle(
        dist=dist,
        loss=loss,
        kernel=kernel,
        minimizer=minimizer,
        minimizer_values=v,
        minimizer_norm_sq=float(c @ G @ c),
        risk_at_minimizer=risk_from_values(dist, loss, v),
        gram=G,
        grad_norm=grad,
    )


def exact_risk(oracle: RiskOracle, f: RkhsFunction) -> float:
    """E(f) as a finite sum over the support and label values."""
    if f.kernel != oracle.kernel:
        raise ValueError("function must use the oracle's kernel")
    return risk_from_values(oracle.dist, oracle.loss, functions.values(f, oracle.dist.support_x))


def excess_risk(oracle: RiskOracle, f: RkhsFunction) -> float:
    """E(f) - E(minimizer), clamped at zero from below."""
    return max(0.0, exact_risk(oracle, f) - oracle.risk_at_minimizer)


def excess_from_values(oracle: RiskOracle, v: np.ndarray) -> float:
    """Excess risk from maintained values at the support points."""
    return max(0.0, risk_from_values(oracle.dist, oracle.loss, v) - oracle.risk_at_minimizer)
