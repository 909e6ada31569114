"""Convex losses with Holder-continuous derivatives and self-bounding constants.

Families and their formulas (y is the label, a the predicted value):

  least_squares      0.5 * (y - a)^2
  huber              0.5 * (y - a)^2 if |y - a| <= 1, else |y - a| - 0.5
  logistic           log(1 + exp(-y * a))
  smoothed_hinge_sq  max(0, 1 - y * a)^2
  p_hinge            max(0, 1 - y * a)^p          for p in (1, 2]
  p_absolute         |y - a|^p                    for p in (1, 2]

Each family declares a pair (alpha, L) such that the derivative in `a` is
(alpha, L)-Holder on the documented label domain (|y| <= 1 for the
classification losses, |y| <= 2 for the regression ones), and derives the
self-bounding constants (A, B) with |d phi|^2 <= A*phi + B from the closed
forms

  A = 2 * alpha^((1-alpha)/(1+alpha)) * L^(2/(1+alpha)) * (1+alpha)
  B = alpha^(-2*alpha/(1+alpha)) * L^(2/(1+alpha)) * (1 - alpha^2)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

FAMILIES = (
    "least_squares",
    "huber",
    "logistic",
    "smoothed_hinge_sq",
    "p_hinge",
    "p_absolute",
)

# Families whose documented label domain is {-1, +1}.
CLASSIFICATION_FAMILIES = ("logistic", "smoothed_hinge_sq", "p_hinge")


def self_bounding_from_holder(alpha: float, holder_L: float) -> tuple[float, float]:
    """Closed-form (A, B) with |phi'|^2 <= A*phi + B from the Holder pair."""
    power = 2.0 / (1.0 + alpha)
    A = 2.0 * alpha ** ((1.0 - alpha) / (1.0 + alpha)) * holder_L**power * (1.0 + alpha)
    B = alpha ** (-2.0 * alpha / (1.0 + alpha)) * holder_L**power * (1.0 - alpha**2)
    return A, B


@dataclass(frozen=True)
class LossModel:
    family: str
    p: float
    alpha: float
    holder_L: float
    self_A: float
    self_B: float

    @property
    def is_classification(self) -> bool:
        return self.family in CLASSIFICATION_FAMILIES


def make_loss(family: str, p: float | None = None) -> LossModel:
    """Build a loss with its declared Holder pair and self-bounding constants."""
    if family not in FAMILIES:
        raise ValueError(f"unknown loss family {family!r}")
    if family in ("p_hinge", "p_absolute"):
        if p is None:
            raise ValueError(f"{family} requires the exponent p")
        if not 1.0 < p <= 2.0:
            raise ValueError("p must lie in (1, 2]")
        alpha = p - 1.0
        L = p if family == "p_hinge" else p * 2.0 ** (2.0 - p)
    else:
        if p is not None:
            raise ValueError(f"{family} takes no exponent p")
        p = 2.0
        alpha, L = {
            "least_squares": (1.0, 1.0),
            "huber": (1.0, 1.0),
            "logistic": (1.0, 0.25),
            "smoothed_hinge_sq": (1.0, 2.0),
        }[family]
    A, B = self_bounding_from_holder(alpha, L)
    return LossModel(family=family, p=float(p), alpha=alpha, holder_L=L, self_A=A, self_B=B)


def _check_finite(*arrays):
    for arr in arrays:
        if not np.all(np.isfinite(arr)):
            raise ValueError("loss inputs must be finite")


def value(loss: LossModel, y, a):
    """phi(y, a); vectorized over broadcastable arrays."""
    y = np.asarray(y, dtype=float)
    a = np.asarray(a, dtype=float)
    _check_finite(y, a)
    fam = loss.family
    if fam == "least_squares":
        out = 0.5 * (y - a) ** 2
    elif fam == "huber":
        r = np.abs(y - a)
        out = np.where(r <= 1.0, 0.5 * r * r, r - 0.5)
    elif fam == "logistic":
        out = np.logaddexp(0.0, -y * a)
    elif fam == "smoothed_hinge_sq":
        out = np.maximum(0.0, 1.0 - y * a) ** 2
    elif fam == "p_hinge":
        out = np.maximum(0.0, 1.0 - y * a) ** loss.p
    else:  # p_absolute
        out = np.abs(y - a) ** loss.p
    return out if out.ndim else float(out)


def derivative(loss: LossModel, y, a):
    """d phi / d a; vectorized over broadcastable arrays."""
    y = np.asarray(y, dtype=float)
    a = np.asarray(a, dtype=float)
    _check_finite(y, a)
    fam = loss.family
    if fam == "least_squares":
        out = a - y
    elif fam == "huber":
        r = a - y
        out = np.clip(r, -1.0, 1.0)
    elif fam == "logistic":
        out = -y * expit(-y * a)
    elif fam == "smoothed_hinge_sq":
        out = -2.0 * y * np.maximum(0.0, 1.0 - y * a)
    elif fam == "p_hinge":
        out = -loss.p * y * np.maximum(0.0, 1.0 - y * a) ** (loss.p - 1.0)
    else:  # p_absolute
        r = a - y
        out = loss.p * np.sign(r) * np.abs(r) ** (loss.p - 1.0)
    return out if out.ndim else float(out)


def holder_params(loss: LossModel) -> tuple[float, float]:
    return loss.alpha, loss.holder_L


def self_bounding_constants(loss: LossModel) -> tuple[float, float]:
    return loss.self_A, loss.self_B
