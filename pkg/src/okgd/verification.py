"""Randomized numerical verification of the standalone loss and series inequalities.

Each check samples its documented domain, computes the inequality slack
(bound side minus bounded side, so nonnegative means the inequality holds),
and reports the worst slack, the failure count against an absolute tolerance,
and up to ten failing witnesses. Constants can be overridden to build
negative controls that must fail, guarding against vacuous samplers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import distributions, losses, optim
from .distributions import RiskOracle
from .losses import LossModel
from .optim import StepSchedule

HOLDER_TOL = 1e-10
SANDWICH_TOL = 1e-9
SELF_BOUND_TOL = 1e-10
GRAD_BOUND_TOL = 1e-8

_MAX_WITNESSES = 10


@dataclass(frozen=True)
class VerificationReport:
    check_name: str
    trials: int
    worst_slack: float
    failures: int
    tolerance: float
    status: str  # "passed" | "failed" | "skipped"
    failure_witnesses: tuple = ()
    notes: str = ""

    @property
    def passed(self) -> bool:
        return self.status == "passed"


def _report(name, slacks, tolerance, witnesses, notes="") -> VerificationReport:
    slacks = np.asarray(slacks, dtype=float)
    bad = slacks < -tolerance
    failures = int(bad.sum())
    worst = float(slacks.min()) if slacks.size else math.inf
    kept = tuple(witnesses[i] for i in np.flatnonzero(bad)[:_MAX_WITNESSES])
    return VerificationReport(
        check_name=name,
        trials=int(slacks.size),
        worst_slack=worst,
        failures=failures,
        tolerance=tolerance,
        status="passed" if failures == 0 else "failed",
        failure_witnesses=kept,
        notes=notes,
    )


def _sample_domain(loss: LossModel, n: int, rng: np.random.Generator):
    """(y, s, s2) from the loss's documented domain, with deliberate
    kink-adjacent mass for the piecewise families."""
    if loss.is_classification:
        y = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    else:
        y = rng.uniform(-2.0, 2.0, n)
    s = rng.uniform(-10.0, 10.0, n)
    s2 = rng.uniform(-10.0, 10.0, n)
    n_kink = n // 10
    if n_kink and loss.family == "huber":
        pick = rng.integers(0, n, n_kink)
        side = np.where(rng.random(n_kink) < 0.5, 1.0, -1.0)
        s[pick] = y[pick] + side + rng.uniform(-1e-3, 1e-3, n_kink)
    elif n_kink and loss.family in ("smoothed_hinge_sq", "p_hinge"):
        pick = rng.integers(0, n, n_kink)
        s[pick] = 1.0 / y[pick] + rng.uniform(-1e-3, 1e-3, n_kink)
    elif n_kink and loss.family == "p_absolute":
        pick = rng.integers(0, n, n_kink)
        s[pick] = y[pick] + rng.uniform(-1e-3, 1e-3, n_kink)
    return y, s, s2


def verify_holder(
    loss: LossModel,
    n_trials: int = 10**6,
    seed: int = 0,
    alpha_override: float | None = None,
    L_override: float | None = None,
) -> VerificationReport:
    """slack = L*|s - s2|^alpha - |dphi(y, s) - dphi(y, s2)| over sampled triples."""
    alpha = loss.alpha if alpha_override is None else alpha_override
    L = loss.holder_L if L_override is None else L_override
    rng = np.random.default_rng(seed)
    y, s, s2 = _sample_domain(loss, n_trials, rng)
    lhs = np.abs(losses.derivative(loss, y, s) - losses.derivative(loss, y, s2))
    slack = L * np.abs(s - s2) ** alpha - lhs
    witnesses = list(zip(y, s, s2))
    return _report(f"holder[{loss.family}]", slack, HOLDER_TOL, witnesses)


def verify_smoothness_sandwich(
    loss: LossModel, n_trials: int = 10**5, seed: int = 0
) -> VerificationReport:
    """Both sides of the two-sided bound on phi(y,s) - phi(y,s2) - (s-s2)*dphi(y,s2):

    lower  alpha * |dphi(y,s) - dphi(y,s2)|^((1+alpha)/alpha) / ((1+alpha) * L^(1/alpha))
    upper  L * |s - s2|^(1+alpha) / (1+alpha)
    """
    alpha, L = loss.alpha, loss.holder_L
    rng = np.random.default_rng(seed)
    y, s, s2 = _sample_domain(loss, n_trials, rng)
    gap = (
        losses.value(loss, y, s)
        - losses.value(loss, y, s2)
        - (s - s2) * losses.derivative(loss, y, s2)
    )
    upper = L * np.abs(s - s2) ** (1.0 + alpha) / (1.0 + alpha)
    dgrad = np.abs(losses.derivative(loss, y, s) - losses.derivative(loss, y, s2))
    lower = alpha * dgrad ** ((1.0 + alpha) / alpha) / ((1.0 + alpha) * L ** (1.0 / alpha))
    slack = np.concatenate([upper - gap, gap - lower])
    witnesses = list(zip(y, s, s2)) * 2
    return _report(f"smoothness_sandwich[{loss.family}]", slack, SANDWICH_TOL, witnesses)


def verify_self_bounding(
    loss: LossModel,
    n_trials: int = 10**6,
    seed: int = 0,
    A_override: float | None = None,
    B_override: float | None = None,
) -> VerificationReport:
    """slack = A*phi(y, s) + B - dphi(y, s)^2 over sampled pairs."""
    A = loss.self_A if A_override is None else A_override
    B = loss.self_B if B_override is None else B_override
    rng = np.random.default_rng(seed)
    y, s, _ = _sample_domain(loss, n_trials, rng)
    slack = A * losses.value(loss, y, s) + B - losses.derivative(loss, y, s) ** 2
    witnesses = list(zip(y, s))
    return _report(f"self_bounding[{loss.family}]", slack, SELF_BOUND_TOL, witnesses)


def verify_gradient_bound_lemma(
    oracle: RiskOracle,
    n_iterates: int = 100,
    seed: int = 0,
    coeff_scale: float = 1.0,
) -> VerificationReport:
    """Conditional moment bound on the gradient magnitude at random iterates.

    For beta in {alpha, 1} and iterates f given by random expansions on the
    support (plus the zero function and the minimizer itself), checks

      E_z |dphi(y, f(x))|^(1+beta) <= 2^beta * L^(1/alpha) * (1+beta) * excess(f)
          + 2^beta * (1 - alpha*beta) / (1+alpha)
          + 2^beta * E_z |dphi(y, minimizer(x))|^(1+beta)

    with every expectation an exact finite sum.
    """
    dist, loss = oracle.dist, oracle.loss
    alpha, L = loss.alpha, loss.holder_L
    rng = np.random.default_rng(seed)
    Y, Q = distributions.label_matrix(dist)
    W = dist.probs_x[:, None] * Q
    d_min = np.abs(losses.derivative(loss, Y, oracle.minimizer_values[:, None]))

    value_sets = [np.zeros(dist.m), oracle.minimizer_values]
    for _ in range(n_iterates):
        c = rng.normal(0.0, coeff_scale, dist.m)
        value_sets.append(oracle.gram @ c)

    slacks, witnesses = [], []
    betas = (alpha, 1.0) if alpha != 1.0 else (1.0,)
    for v in value_sets:
        excess = distributions.excess_from_values(oracle, v)
        d_at = np.abs(losses.derivative(loss, Y, v[:, None]))
        for beta in betas:
            lhs = float(np.sum(W * d_at ** (1.0 + beta)))
            tail = float(np.sum(W * d_min ** (1.0 + beta)))
            rhs = 2.0**beta * (
                L ** (1.0 / alpha) * (1.0 + beta) * excess
                + (1.0 - alpha * beta) / (1.0 + alpha)
                + tail
            )
            slacks.append(rhs - lhs)
            witnesses.append((beta, float(excess)))
    return _report("gradient_bound_lemma", slacks, GRAD_BOUND_TOL, witnesses)


def verify_series_lemma(
    schedule: StepSchedule, horizon: int = 2**20, seed: int = 0
) -> VerificationReport:
    """Finite-horizon proxy for the vanishing of (sum eta)^-1 * sum eta^2.

    Monitors r_t at geometric t: the tail must be decreasing and the horizon
    value must sit below the value at horizon/16. Skipped when the schedule
    does not satisfy the premises (steps vanishing, divergent sum).
    """
    diverges = optim.check_necessary(schedule).holds
    vanishes = schedule.family != "constant" and not (
        schedule.family == "polynomial" and schedule.theta == 0
    )
    if not (diverges and vanishes):
        return VerificationReport(
            check_name="series_lemma",
            trials=0,
            worst_slack=math.inf,
            failures=0,
            tolerance=0.0,
            status="skipped",
            notes="premises unmet (needs vanishing steps with a divergent sum)",
        )
    ts = [2**k for k in range(4, int(math.log2(horizon)) + 1)]
    s1 = s2 = 0.0
    prev = 0
    ratios = []
    for T in ts:
        k = np.arange(prev + 1, T + 1, dtype=float)
        if schedule.family == "polynomial":
            etas = schedule.eta1 * k ** (-schedule.theta)
        else:
            etas = np.where(
                k == 1,
                schedule.eta1,
                schedule.eta1
                * (k * np.log(np.maximum(k, 2.0)) ** schedule.beta)
                ** (-1.0 / (1.0 + schedule.alpha_ref)),
            )
        s1 += float(etas.sum())
        s2 += float(etas @ etas)
        ratios.append(s2 / s1)
        prev = T
    tail = ratios[len(ratios) // 2 :]
    decreases = [a - b for a, b in zip(tail, tail[1:])]
    final_drop = ratios[-5] - ratios[-1]  # horizon/16 vs horizon
    slacks = decreases + [final_drop]
    witnesses = [("tail_step", i) for i in range(len(decreases))] + [("final_drop", 0)]
    return _report(
        "series_lemma",
        slacks,
        0.0,
        witnesses,
        notes="finite-horizon proxy for an asymptotic limit",
    )


def standard_suite(oracle: RiskOracle, schedule: StepSchedule, seed: int = 0):
    """The positive checks across all loss families plus the task-level lemmas."""
    reports = []
    for i, family in enumerate(losses.FAMILIES):
        p = 1.5 if family in ("p_hinge", "p_absolute") else None
        loss = losses.make_loss(family, p)
        reports.append(verify_holder(loss, 10**6, seed + i))
        reports.append(verify_smoothness_sandwich(loss, 10**5, seed + i))
        reports.append(verify_self_bounding(loss, 10**6, seed + i))
    reports.append(verify_gradient_bound_lemma(oracle, 100, seed))
    reports.append(verify_series_lemma(schedule))
    return reports
