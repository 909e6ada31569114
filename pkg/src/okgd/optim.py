"""Online kernel gradient descent: update rules, step schedules, condition checkers.

The update consumes one sample (x, y) per step and performs

    plain:        f <- f - eta_t * dphi(y, f(x)) * K_x
    regularized:  f <- (1 - lam*eta_t) * f - eta_t * dphi(y, f(x)) * K_x
    projected:    plain step, then radial projection onto the ball |f| <= R

Every step is O(number of probes): the optimizer keeps the current value of f
at a registered set of probe points and advances them by the evaluation
recursion f_new(p) = s*f(p) + c*K(x, p), instead of re-summing the expansion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import functions, kernels, losses
from .functions import RkhsFunction
from .kernels import KernelSpec
from .losses import LossModel

_FOLD_LO = 1e-100
_FOLD_HI = 1e100


class DivergenceError(RuntimeError):
    """A trajectory produced a non-finite quantity."""

    def __init__(self, step: int, value: float):
        super().__init__(f"trajectory diverged at step {step} (value {value!r})")
        self.step = step
        self.value = value


# ---------------------------------------------------------------------------
# Step-size schedules


@dataclass(frozen=True)
class StepSchedule:
    """eta_t families: polynomial eta1*t^-theta, poly_log
    eta1*(t*ln(t)^beta)^(-1/(1+alpha_ref)), or a constant.

    poly_log defines eta_1 = eta1 (the raw formula is singular at t = 1) and
    caps every later value at eta1: for beta above ~1.89 the raw formula
    exceeds eta1 at t = 2, and the family must stay non-increasing. The cap
    changes nothing asymptotically."""

    family: str
    eta1: float = 1.0
    theta: float = 0.0
    beta: float = 2.0
    alpha_ref: float = 1.0
    eta: float = 0.1

    def __post_init__(self):
        if self.family not in ("polynomial", "poly_log", "constant"):
            raise ValueError(f"unknown schedule family {self.family!r}")
        if self.family == "polynomial":
            if not self.eta1 > 0:
                raise ValueError("eta1 must be positive")
            if self.theta < 0:
                raise ValueError("theta must be nonnegative")
        elif self.family == "poly_log":
            if not self.eta1 > 0:
                raise ValueError("eta1 must be positive")
            if not self.beta > 1:
                raise ValueError("beta must exceed 1")
            if not 0 < self.alpha_ref <= 1:
                raise ValueError("alpha_ref must lie in (0, 1]")
        else:
            if not self.eta > 0:
                raise ValueError("constant step must be positive")


def step_size(schedule: StepSchedule, t) -> float:
    """eta_t for t >= 1 (real t accepted; poly_log maps t = 1 to eta1)."""
    if t < 1:
        raise ValueError("step index must be >= 1")
    if schedule.family == "polynomial":
        return schedule.eta1 * float(t) ** (-schedule.theta)
    if schedule.family == "poly_log":
        if t == 1:
            return schedule.eta1
        expo = -1.0 / (1.0 + schedule.alpha_ref)
        return min(
            schedule.eta1,
            schedule.eta1 * (t * math.log(t) ** schedule.beta) ** expo,
        )
    return schedule.eta


def step_sizes(schedule: StepSchedule, T: int) -> np.ndarray:
    """Vector of eta_1..eta_T."""
    t = np.arange(1, T + 1, dtype=float)
    if schedule.family == "polynomial":
        return schedule.eta1 * t ** (-schedule.theta)
    if schedule.family == "constant":
        return np.full(T, schedule.eta)
    out = np.empty(T)
    out[0] = schedule.eta1
    if T > 1:
        expo = -1.0 / (1.0 + schedule.alpha_ref)
        out[1:] = np.minimum(
            schedule.eta1,
            schedule.eta1 * (t[1:] * np.log(t[1:]) ** schedule.beta) ** expo,
        )
    return out


def max_step_bound(loss: LossModel, kappa: float) -> float:
    """Step cap 1 / (A * kappa^2) under which the iterate bounds hold."""
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    return 1.0 / (loss.self_A * kappa**2)


def necessity_step_bound(loss: LossModel, kappa: float) -> float:
    """The smaller cap 1 / (6 * L * kappa^2) assumed by the necessity result."""
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    return 1.0 / (6.0 * loss.holder_L * kappa**2)


# ---------------------------------------------------------------------------
# Analytic step-size condition checkers


@dataclass(frozen=True)
class Verdict:
    status: str  # "holds" | "fails" | "boundary"
    reason: str

    @property
    def holds(self) -> bool:
        return self.status == "holds"


def _check_alpha(alpha: float):
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")


def check_sufficient_expectation(schedule: StepSchedule, alpha: float) -> Verdict:
    """Divergent step sum plus vanishing eta_t^alpha * sum_k eta_k^2."""
    _check_alpha(alpha)
    if schedule.family == "constant":
        return Verdict("fails", "constant steps: eta^alpha * sum eta^2 grows linearly")
    if schedule.family == "poly_log":
        return Verdict(
            "holds",
            "exponent 1/(1+alpha_ref) < 1 gives a divergent step sum and a "
            "summable square series, so eta^alpha * sum eta^2 vanishes",
        )
    theta, crit = schedule.theta, 1.0 / (2.0 + alpha)
    if theta > 1:
        return Verdict("fails", f"theta={theta:g} > 1: step sum converges")
    if theta <= crit:
        return Verdict(
            "fails",
            f"theta={theta:g} <= 1/(2+alpha)={crit:g}: "
            "eta^alpha * sum eta^2 does not vanish",
        )
    return Verdict("holds", f"theta={theta:g} lies in (1/(2+alpha), 1] = ({crit:g}, 1]")


def check_necessary(schedule: StepSchedule) -> Verdict:
    """Divergence of the step sum."""
    if schedule.family == "polynomial":
        if schedule.theta > 1:
            return Verdict("fails", f"theta={schedule.theta:g} > 1: step sum converges")
        return Verdict("holds", f"theta={schedule.theta:g} <= 1: step sum diverges")
    if schedule.family == "poly_log":
        return Verdict("holds", "exponent 1/(1+alpha_ref) < 1: step sum diverges")
    return Verdict("holds", "constant steps: step sum diverges")


def check_almost_sure(schedule: StepSchedule, alpha: float) -> Verdict:
    """Divergent step sum plus summable eta_t^(1+alpha)."""
    _check_alpha(alpha)
    if schedule.family == "constant":
        return Verdict("fails", "constant steps: sum eta^(1+alpha) diverges")
    if schedule.family == "poly_log":
        q = (1.0 + alpha) / (1.0 + schedule.alpha_ref)
        if q > 1:
            return Verdict("holds", f"sum eta^(1+alpha) ~ sum t^-{q:g} converges")
        if q == 1:
            return Verdict(
                "holds",
                f"sum eta^(1+alpha) ~ sum 1/(t log^{schedule.beta:g} t) "
                "converges since beta > 1",
            )
        return Verdict(
            "fails", f"alpha={alpha:g} < alpha_ref: sum eta^(1+alpha) diverges"
        )
    theta, crit = schedule.theta, 1.0 / (1.0 + alpha)
    if theta > 1:
        return Verdict("fails", f"theta={theta:g} > 1: step sum converges")
    if theta <= crit:
        return Verdict(
            "fails",
            f"theta={theta:g} <= 1/(1+alpha)={crit:g}: sum eta^(1+alpha) diverges",
        )
    return Verdict("holds", f"theta={theta:g} lies in (1/(1+alpha), 1] = ({crit:g}, 1]")


def check_all(schedule: StepSchedule, alpha: float) -> dict[str, Verdict]:
    return {
        "sufficient_expectation": check_sufficient_expectation(schedule, alpha),
        "necessary": check_necessary(schedule),
        "almost_sure": check_almost_sure(schedule, alpha),
    }


def probe_series_heuristic(step_fn, alpha: float, horizon: int = 10**7) -> dict[str, Verdict]:
    """Partial-sum probe for schedules outside the parametric families.

    The analytic conditions are asymptotic, so finite evidence can only be
    heuristic; verdicts are flagged as such, with "boundary" when the trend is
    too flat to call.
    """
    _check_alpha(alpha)
    ts = np.unique(np.geomspace(16, horizon, 24).astype(np.int64))
    s1 = s2 = s1a = 0.0
    prev = 0
    vals_suff, vals_as, sums = [], [], []
    for T in ts:
        k = np.arange(prev + 1, T + 1, dtype=float)
        etas = np.array([step_fn(int(i)) for i in k])
        s1 += etas.sum()
        s2 += (etas**2).sum()
        s1a += (etas ** (1.0 + alpha)).sum()
        eta_T = step_fn(int(T))
        vals_suff.append(eta_T**alpha * s2)
        vals_as.append(s1a)
        sums.append(s1)
        prev = int(T)

    def trend(seq, decreasing_to_zero: bool) -> Verdict:
        a, b = seq[len(seq) // 2], seq[-1]
        if decreasing_to_zero:
            if b < 0.5 * a:
                return Verdict("holds", "heuristic: tail decreased by > 2x")
            if b < 0.9 * a:
                return Verdict("boundary", "heuristic: slow decrease, inconclusive")
            return Verdict("fails", "heuristic: no decrease over the probed tail")
        # divergence probe: expect substantial growth of the partial sum
        if b > 2.0 * a:
            return Verdict("holds", "heuristic: partial sum still growing")
        if b > 1.1 * a:
            return Verdict("boundary", "heuristic: slow growth, inconclusive")
        return Verdict("fails", "heuristic: partial sum nearly saturated")

    diverges = trend(sums, decreasing_to_zero=False)
    vanishes = trend(vals_suff, decreasing_to_zero=True)
    summable = trend([vals_as[-1] - v + 1e-300 for v in vals_as], decreasing_to_zero=True)
    combine = lambda a, b: a if a.status != "holds" else b
    return {
        "sufficient_expectation": combine(diverges, vanishes),
        "necessary": diverges,
        "almost_sure": combine(diverges, summable),
    }


# ---------------------------------------------------------------------------
# The optimizer


@dataclass(frozen=True)
class VariantSpec:
    """plain, regularized(lam > 0), or projected(radius > 0)."""

    name: str = "plain"
    lam: float = 0.0
    radius: float = math.inf

    def __post_init__(self):
        if self.name not in ("plain", "regularized", "projected"):
            raise ValueError(f"unknown variant {self.name!r}")
        if self.name == "regularized" and self.lam < 0:
            raise ValueError("lambda must be nonnegative")
        if self.name == "projected" and not self.radius > 0:
            raise ValueError("radius must be positive")


@dataclass(frozen=True)
class StepInfo:
    """What one update did; enough for an observer to monitor inequalities."""

    step: int
    eta: float
    probe_index: int
    value_before: float
    gradient: float
    shrink: float
    projection_scale: float


@dataclass
class _AverageState:
    weight: float = 0.0  # sum of push weights
    weighted_scale: float = 0.0  # sum of weight * scale at push time
    value_sums: np.ndarray = field(default_factory=lambda: np.zeros(0))
    atom_marks: list = field(default_factory=list)  # weighted_scale at append time


class OnlineKernelGD:
    """Mutable per-trial state of the online update.

    Probe points (typically the distribution support) are registered up
    front; the model's value at every probe is maintained in O(1) per probe
    per step. Reference functions (such as the risk minimizer) can be
    registered to track inner products, and running uniform/weighted iterate
    averages are maintained as value sums plus per-atom weights so the
    averaged function can be materialized exactly on demand.

    Confine one instance to one worker; snapshots are safe to share.
    """

    def __init__(
        self,
        kernel: KernelSpec,
        loss: LossModel,
        schedule: StepSchedule,
        variant: VariantSpec = VariantSpec(),
        probes=None,
    ):
        self.kernel = kernel
        self.loss = loss
        self.schedule = schedule
        self.variant = variant
        self.t = 1
        self.scale = 1.0
        self.norm_sq = 0.0
        self._raw: list[float] = []
        self._atom_idx: list[int] = []
        self._probes = np.zeros((0, 1))
        self._probe_vals = np.zeros(0)
        self._key2idx: dict[bytes, int] = {}
        self._rows: dict[int, np.ndarray] = {}
        self._refs: dict[str, dict] = {}
        self._avg = {"uniform": _AverageState(), "weighted": _AverageState()}
        if probes is not None:
            for p in np.asarray(probes, dtype=float):
                self.register_probe(p)

    # -- probes and references ------------------------------------------------

    @property
    def probe_points(self) -> np.ndarray:
        return self._probes

    @property
    def probe_values(self) -> np.ndarray:
        return self._probe_vals

    def _model_value_at(self, x: np.ndarray) -> float:
        if not self._raw:
            return 0.0
        pts = self._probes[self._atom_idx]
        row = kernels.cross_gram(self.kernel, x.reshape(1, -1), pts)[0]
        return float(self.scale * (row @ np.asarray(self._raw)))

    def register_probe(self, x) -> int:
        """Index of x in the probe set, registering it if new (O(expansion size))."""
        xv = np.asarray(x, dtype=float).reshape(-1)
        key = xv.tobytes()
        idx = self._key2idx.get(key)
        if idx is not None:
            return idx
        if len(self._probes) == 0:
            self._probes = xv.reshape(1, -1)
        else:
            if xv.shape[0] != self._probes.shape[1]:
                raise ValueError("probe dimension mismatch")
            self._probes = np.vstack([self._probes, xv])
        idx = len(self._probes) - 1
        self._key2idx[key] = idx
        self._probe_vals = np.append(self._probe_vals, self._model_value_at(xv))
        self._rows.clear()
        for ref in self._refs.values():
            ref["values"] = np.append(ref["values"], functions.evaluate(ref["fn"], xv))
        for kind in self._avg.values():
            if kind.weight > 0:
                avg_fn = self._materialize(kind)
                ext = functions.evaluate(avg_fn, xv) * kind.weight
            else:
                ext = 0.0
            kind.value_sums = np.append(kind.value_sums, ext)
        return idx

    def _row(self, idx: int) -> np.ndarray:
        row = self._rows.get(idx)
        if row is None:
            row = kernels.cross_gram(
                self.kernel, self._probes[idx].reshape(1, -1), self._probes
            )[0]
            self._rows[idx] = row
        return row

    def register_reference(self, name: str, fn: RkhsFunction):
        """Track the inner product of the model with a fixed function."""
        if fn.kernel != self.kernel:
            raise ValueError("reference must share the kernel")
        vals = functions.values(fn, self._probes) if len(self._probes) else np.zeros(0)
        current = functions.inner(self.model(), fn) if self._raw else 0.0
        self._refs[name] = {
            "fn": fn,
            "values": vals,
            "norm_sq": functions.rkhs_norm_sq(fn),
            "inner": current,
        }

    def inner_with(self, name: str) -> float:
        return float(self._refs[name]["inner"])

    def distance_sq_to(self, name: str) -> float:
        ref = self._refs[name]
        return float(max(0.0, self.norm_sq - 2.0 * ref["inner"] + ref["norm_sq"]))

    # -- averages ---------------------------------------------------------------

    def push_averages(self):
        """Add the current iterate to both running averages (weight eta_t for
        the weighted one). Call once per step, before update()."""
        eta = step_size(self.schedule, self.t)
        for kind, w in (("uniform", 1.0), ("weighted", eta)):
            st = self._avg[kind]
            if len(st.value_sums) != len(self._probe_vals):
                st.value_sums = np.resize(st.value_sums, len(self._probe_vals))
            st.value_sums += w * self._probe_vals
            st.weight += w
            st.weighted_scale += w * self.scale

    def average_weight(self, kind: str) -> float:
        return self._avg[kind].weight

    def average_values(self, kind: str) -> np.ndarray:
        """Current average's values at the probes."""
        st = self._avg[kind]
        if st.weight <= 0:
            raise RuntimeError("no iterates pushed yet")
        return st.value_sums / st.weight

    def _materialize(self, st: _AverageState) -> RkhsFunction:
        if not self._raw:
            return functions.zero(self.kernel)
        marks = np.asarray(st.atom_marks)
        coeffs = np.asarray(self._raw) * (st.weighted_scale - marks) / st.weight
        return RkhsFunction(self.kernel, self._probes[self._atom_idx], coeffs, 1.0)

    def average_model(self, kind: str) -> RkhsFunction:
        """The averaged iterate as an explicit expansion."""
        st = self._avg[kind]
        if st.weight <= 0:
            raise RuntimeError("no iterates pushed yet")
        return self._materialize(st)

    # -- the update ---------------------------------------------------------------

    def model(self) -> RkhsFunction:
        """Immutable snapshot of the current iterate."""
        if not self._raw:
            return functions.zero(self.kernel)
        return RkhsFunction(
            self.kernel,
            self._probes[self._atom_idx],
            np.asarray(self._raw),
            self.scale,
        )

    def _fold(self):
        factor = self.scale
        raw = np.asarray(self._raw) * factor
        self._raw = raw.tolist()
        self.scale = 1.0
        for st in self._avg.values():
            st.weighted_scale /= factor
            if st.atom_marks:
                st.atom_marks = (np.asarray(st.atom_marks) / factor).tolist()

    def update(self, x, y: float) -> StepInfo:
        """Consume one sample: one gradient step of the configured variant."""
        t = self.t
        idx = self.register_probe(x)
        v = float(self._probe_vals[idx])
        if not math.isfinite(v):
            raise DivergenceError(t, v)
        g = float(losses.derivative(self.loss, float(y), v))
        if not math.isfinite(g):
            raise DivergenceError(t, g)
        eta = step_size(self.schedule, t)
        s = 1.0
        if self.variant.name == "regularized":
            s = 1.0 - self.variant.lam * eta
            if s <= 0.0:
                raise ValueError(
                    f"lambda * eta_t = {self.variant.lam * eta:g} >= 1 flips the scale sign"
                )
        c = -eta * g
        row = self._row(idx)
        k_xx = float(row[idx])
        new_norm = s * s * self.norm_sq + 2.0 * s * c * v + c * c * k_xx
        if not math.isfinite(new_norm):
            raise DivergenceError(t, new_norm)
        self._probe_vals *= s
        self._probe_vals += c * row
        for ref in self._refs.values():
            ref["inner"] = s * ref["inner"] + c * float(ref["values"][idx])
        self.norm_sq = new_norm
        self.scale *= s
        if not _FOLD_LO < abs(self.scale) < _FOLD_HI:
            self._fold()
        self._raw.append(c / self.scale)
        self._atom_idx.append(idx)
        for st in self._avg.values():
            st.atom_marks.append(st.weighted_scale)

        proj = 1.0
        if self.variant.name == "projected":
            r2 = self.variant.radius**2
            if self.norm_sq > r2:
                proj = self.variant.radius / math.sqrt(self.norm_sq)
                self.scale *= proj
                self._probe_vals *= proj
                for ref in self._refs.values():
                    ref["inner"] *= proj
                self.norm_sq *= proj * proj
                if not _FOLD_LO < abs(self.scale) < _FOLD_HI:
                    self._fold()
        self.t = t + 1
        return StepInfo(t, eta, idx, v, g, s, proj)

    def step(self, x, y: float) -> StepInfo:
        """push_averages() then update(); after k calls the averages cover
        iterates 1..k."""
        self.push_averages()
        return self.update(x, y)
