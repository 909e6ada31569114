"""Trial execution, trajectory recording, rate fitting, and quantile curves.

A trial runs T_max online steps and records, at each checkpoint t, the exact
excess risk of the iterate, of the uniform iterate average, and of the
step-size-weighted average, together with RKHS distances to the best-in-space
predictor and the running minimum slack of the monitored one-step
inequalities. Checkpoint t reports the iterate before sample t is consumed,
so the first checkpoint of a fresh run sees the zero initializer.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import distributions, losses, optim
from .distributions import FiniteDistribution, RiskOracle
from .kernels import KernelSpec
from .losses import LossModel
from .optim import DivergenceError, OnlineKernelGD, StepSchedule, VariantSpec

METRICS = (
    "excess_last",
    "excess_uniform",
    "excess_weighted",
    "dist_sq_to_fH",
    "max_dist_sq_so_far",
)

SLACK_TOL = 1e-8


@dataclass(frozen=True)
class TrialConfig:
    dist: FiniteDistribution
    loss: LossModel
    kernel: KernelSpec
    schedule: StepSchedule
    variant: VariantSpec
    T_max: int
    checkpoints: tuple[int, ...]
    seeds: tuple[int, ...]
    delta: float = 0.05

    def __post_init__(self):
        cps = self.checkpoints
        if not cps or list(cps) != sorted(set(cps)):
            raise ValueError("checkpoints must be sorted and unique")
        if cps[0] < 1 or cps[-1] != self.T_max:
            raise ValueError("checkpoints must lie in [1, T_max] with the last equal to T_max")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if not self.seeds:
            raise ValueError("at least one seed is required")


def default_checkpoints(T_max: int, first: int = 256) -> tuple[int, ...]:
    """Geometric powers of two from `first` up to T_max (always including T_max)."""
    if T_max < 1:
        raise ValueError("T_max must be positive")
    cps = [t for t in (2**k for k in range(int(math.log2(first)), 64)) if t <= T_max]
    if not cps or cps[-1] != T_max:
        cps.append(T_max)
    return tuple(c for c in cps if c >= 1)


@dataclass(frozen=True)
class TrajectoryRecord:
    """Per-checkpoint metrics of one trial; slack entries are running minima
    over the steps since the previous checkpoint (NaN when not monitored)."""

    seed: int
    checkpoints: tuple[int, ...]
    excess_last: tuple[float, ...]
    excess_uniform: tuple[float, ...]
    excess_weighted: tuple[float, ...]
    dist_sq_to_fH: tuple[float, ...]
    max_dist_sq_so_far: tuple[float, ...]
    min_slack_descent: tuple[float, ...]
    min_slack_bound: tuple[float, ...]
    diverged: bool

    def metric(self, name: str) -> tuple[float, ...]:
        if name not in METRICS:
            raise ValueError(f"unknown metric {name!r}")
        return getattr(self, name)


def iterate_bound_constants(oracle: RiskOracle, eta1: float) -> tuple[float, float]:
    """The constants of the deterministic iterate and weighted-loss bounds.

    C1 = |minimizer|^2 + B/A + 2 * max(sup_y phi(y, 0), sup_z phi(y, minimizer(x)))
    C2 = 2 * sup_z phi(y, minimizer(x)) + eta1 * kappa^2 * B
    """
    Y, _ = distributions.label_matrix(oracle.dist)
    phi_zero = losses.value(oracle.loss, Y, np.zeros_like(Y))
    phi_min = losses.value(oracle.loss, Y, oracle.minimizer_values[:, None])
    sup0 = float(np.max(phi_zero))
    supH = float(np.max(phi_min))
    A, B = oracle.loss.self_A, oracle.loss.self_B
    C1 = oracle.minimizer_norm_sq + B / A + 2.0 * max(sup0, supH)
    C2 = 2.0 * supH + eta1 * oracle.kappa**2 * B
    return C1, C2


def _monitors_active(config: TrialConfig, kappa: float) -> bool:
    if config.variant.name != "plain":
        return False
    cap = optim.max_step_bound(config.loss, kappa)
    sched = config.schedule
    eta_max = sched.eta if sched.family == "constant" else sched.eta1
    return eta_max <= cap + 1e-15


def run_trial(config: TrialConfig, seed: int, oracle: RiskOracle | None = None) -> TrajectoryRecord:
    """One trajectory; a pure function of (config, seed)."""
    if oracle is None:
        oracle = distributions.solve_f_H(config.dist, config.loss, config.kernel)
    dist, loss, sched = config.dist, config.loss, config.schedule
    kappa = oracle.kappa
    kappa_sq = kappa * kappa
    rng = np.random.default_rng(seed)
    idx_stream, y_stream = distributions.sample_many(dist, rng, config.T_max)
    etas = optim.step_sizes(sched, config.T_max)

    opt = OnlineKernelGD(config.kernel, loss, sched, config.variant, probes=dist.support_x)
    opt.register_reference("minimizer", oracle.minimizer)
    m = dist.m
    min_vals = oracle.minimizer_values

    eta_first = float(etas[0])
    monitored = _monitors_active(config, kappa)
    if monitored:
        C1, C2 = iterate_bound_constants(oracle, eta_first)
    dist_sq = opt.distance_sq_to("minimizer")
    max_dist = dist_sq
    slack_descent = math.inf
    slack_bound = math.inf
    sum_eta = 0.0
    sum_eta_sq = 0.0
    sum_eta_sq_phi = 0.0

    cps = config.checkpoints
    cols: dict[str, list[float]] = {k: [] for k in METRICS}
    descents: list[float] = []
    bounds: list[float] = []
    diverged = False
    next_cp = 0

    for t in range(1, config.T_max + 1):
        opt.push_averages()
        if next_cp < len(cps) and t == cps[next_cp]:
            vals = opt.probe_values[:m]
            cols["excess_last"].append(distributions.excess_from_values(oracle, vals))
            cols["excess_uniform"].append(
                distributions.excess_from_values(oracle, opt.average_values("uniform")[:m])
            )
            cols["excess_weighted"].append(
                distributions.excess_from_values(oracle, opt.average_values("weighted")[:m])
            )
            cols["dist_sq_to_fH"].append(dist_sq)
            cols["max_dist_sq_so_far"].append(max_dist)
            descents.append(slack_descent if monitored else math.nan)
            bounds.append(slack_bound if monitored else math.nan)
            slack_descent = math.inf
            slack_bound = math.inf
            next_cp += 1
        i = int(idx_stream[t - 1])
        try:
            info = opt.update(dist.support_x[i], float(y_stream[t - 1]))
        except DivergenceError:
            diverged = True
            break
        d_new = opt.distance_sq_to("minimizer")
        if monitored:
            eta, g, v = info.eta, info.gradient, info.value_before
            y = float(y_stream[t - 1])
            phi_t = float(losses.value(loss, y, v))
            phi_min = float(losses.value(loss, y, float(min_vals[i])))
            rhs = dist_sq + eta * eta * g * g * kappa_sq + 2.0 * eta * (phi_min - phi_t)
            slack_descent = min(slack_descent, rhs - d_new)
            sum_eta += eta
            sum_eta_sq += eta * eta
            sum_eta_sq_phi += eta * eta * phi_t
            s_a = C1 * (1.0 + sum_eta) - d_new
            s_n = C1 * sum_eta - opt.norm_sq
            s_b = (eta_first * oracle.minimizer_norm_sq + C2 * sum_eta_sq) - sum_eta_sq_phi
            slack_bound = min(slack_bound, s_a, s_n, s_b)
        dist_sq = d_new
        if dist_sq > max_dist:
            max_dist = dist_sq
    reached = cols["excess_last"]
    return TrajectoryRecord(
        seed=seed,
        checkpoints=tuple(cps[: len(reached)]),
        excess_last=tuple(cols["excess_last"]),
        excess_uniform=tuple(cols["excess_uniform"]),
        excess_weighted=tuple(cols["excess_weighted"]),
        dist_sq_to_fH=tuple(cols["dist_sq_to_fH"]),
        max_dist_sq_so_far=tuple(cols["max_dist_sq_so_far"]),
        min_slack_descent=tuple(descents),
        min_slack_bound=tuple(bounds),
        diverged=diverged,
    )


def _trial_star(args):
    return run_trial(*args)


def run_sweep(
    config: TrialConfig,
    seeds=None,
    oracle: RiskOracle | None = None,
    workers: int = 1,
) -> list[TrajectoryRecord]:
    """Independent trials, one per seed, folded in seed order regardless of
    execution order. Divergences are recorded per trial, never raised."""
    seeds = list(config.seeds if seeds is None else seeds)
    if not seeds:
        raise ValueError("at least one seed is required")
    if oracle is None:
        oracle = distributions.solve_f_H(config.dist, config.loss, config.kernel)
    if workers <= 1 or len(seeds) == 1:
        return [run_trial(config, s, oracle) for s in seeds]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_trial_star, [(config, s, oracle) for s in seeds]))


# ---------------------------------------------------------------------------
# Rate fits and quantile curves


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r_squared: float
    points_used: int
    points_dropped: int = 0


def fit_rate(points, clamp: float = 1e-16) -> RateFit:
    """Least squares of log(value) on log(T); nonpositive values are dropped."""
    usable = [(t, v) for t, v in points if v > 0]
    dropped = len(list(points)) - len(usable)
    if len(usable) < 2:
        raise ValueError("need at least 2 positive points to fit a rate")
    T = np.array([t for t, _ in usable], dtype=float)
    V = np.maximum(np.array([v for _, v in usable]), clamp)
    lt, lv = np.log(T), np.log(V)
    A = np.stack([lt, np.ones_like(lt)], axis=1)
    (slope, intercept), *_ = np.linalg.lstsq(A, lv, rcond=None)
    resid = lv - (slope * lt + intercept)
    ss_res = float(resid @ resid)
    ss_tot = float(np.sum((lv - lv.mean()) ** 2))
    if ss_tot <= 1e-300:
        r2 = 1.0 if ss_res <= 1e-12 else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return RateFit(float(slope), float(intercept), min(max(r2, 0.0), 1.0), len(usable), dropped)


def _usable_records(records) -> list[TrajectoryRecord]:
    good = [r for r in records if not r.diverged]
    if len(good) < 2:
        raise ValueError("need at least 2 non-diverged records")
    return good


def quantile_curve(records, metric: str, q: float) -> list[tuple[int, float]]:
    """Per checkpoint, the nearest-rank empirical q-quantile across seeds."""
    if not 0 < q < 1:
        raise ValueError("q must lie in (0, 1)")
    good = _usable_records(records)
    cps = good[0].checkpoints
    out = []
    for j, t in enumerate(cps):
        vals = np.sort([r.metric(metric)[j] for r in good])
        rank = max(1, math.ceil(q * len(vals)))
        out.append((t, float(vals[rank - 1])))
    return out


def median_curve(records, metric: str) -> list[tuple[int, float]]:
    good = [r for r in records if not r.diverged]
    if not good:
        raise ValueError("all records diverged")
    cps = good[0].checkpoints
    return [
        (t, float(np.median([r.metric(metric)[j] for r in good])))
        for j, t in enumerate(cps)
    ]


def last_iterate_window_min(record: TrajectoryRecord, T: int) -> float:
    """Minimum recorded iterate excess over checkpoints in [floor(T/2), T]."""
    lo = T // 2
    window = [
        v for t, v in zip(record.checkpoints, record.excess_last) if lo <= t <= T
    ]
    if not window:
        raise ValueError(f"no checkpoints in [{lo}, {T}]")
    return min(window)


def summarize(config: TrialConfig, records, oracle: RiskOracle, drop_first: bool = False) -> dict:
    """Rate fits, quantile curves, checker verdicts, and the run's constants."""
    fits = {}
    for metric in ("excess_last", "excess_uniform", "excess_weighted"):
        pts = median_curve(records, metric)
        if drop_first and len(pts) > 2:
            pts = pts[1:]
        try:
            fit = fit_rate(pts)
            fits[metric] = {
                "slope": fit.slope,
                "intercept": fit.intercept,
                "r_squared": fit.r_squared,
                "points_used": fit.points_used,
                "points_dropped": fit.points_dropped,
            }
        except ValueError as exc:
            fits[metric] = {"error": str(exc)}
    quantiles = {}
    for metric in METRICS:
        quantiles[metric] = {
            "0.5": median_curve(records, metric),
            f"{1 - config.delta:g}": quantile_curve(records, metric, 1 - config.delta),
        }
    verdicts = {
        name: {"status": v.status, "reason": v.reason}
        for name, v in optim.check_all(config.schedule, config.loss.alpha).items()
    }
    eta1 = (
        config.schedule.eta
        if config.schedule.family == "constant"
        else config.schedule.eta1
    )
    C1, C2 = iterate_bound_constants(oracle, eta1)
    kappa = oracle.kappa
    return {
        "rate_fits": fits,
        "quantile_curves": quantiles,
        "checker_verdicts": verdicts,
        "constants": {
            "kappa": kappa,
            "alpha": config.loss.alpha,
            "holder_L": config.loss.holder_L,
            "self_A": config.loss.self_A,
            "self_B": config.loss.self_B,
            "C1": C1,
            "C2": C2,
            "eta_max": optim.max_step_bound(config.loss, kappa),
            "eta_max_necessity": optim.necessity_step_bound(config.loss, kappa),
            "risk_at_minimizer": oracle.risk_at_minimizer,
            "minimizer_norm_sq": oracle.minimizer_norm_sq,
        },
        "n_seeds": len(list(records)),
        "n_diverged": sum(1 for r in records if r.diverged),
    }
