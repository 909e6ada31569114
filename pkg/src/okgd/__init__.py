"""Online gradient descent in reproducing kernel Hilbert spaces.

A numpy/scipy library for running the unregularized, regularized, and
ball-projected online kernel updates on finite-support synthetic tasks where
the generalization error and its minimizer are exactly computable, plus a
verification lab for the step-size conditions and deterministic inequalities
that govern their convergence.
"""

from .distributions import (
    FiniteDistribution,
    RiskOracle,
    SolverError,
    classification_distribution,
    exact_risk,
    excess_risk,
    regression_distribution,
    sample,
    solve_f_H,
)
from .experiments import (
    RateFit,
    TrajectoryRecord,
    TrialConfig,
    fit_rate,
    last_iterate_window_min,
    quantile_curve,
    run_sweep,
    run_trial,
)
from .functions import (
    RkhsFunction,
    RunningAverage,
    finalize_average,
    new_average,
    push_average,
)
from .kernels import KernelSpec, gram, kappa_bound
from .losses import LossModel, make_loss
from .optim import (
    DivergenceError,
    OnlineKernelGD,
    StepSchedule,
    VariantSpec,
    check_all,
    check_almost_sure,
    check_necessary,
    check_sufficient_expectation,
    max_step_bound,
    step_size,
)

__version__ = "0.1.0"

__all__ = [
    "FiniteDistribution",
    "RiskOracle",
    "SolverError",
    "classification_distribution",
    "exact_risk",
    "excess_risk",
    "regression_distribution",
    "sample",
    "solve_f_H",
    "RateFit",
    "TrajectoryRecord",
    "TrialConfig",
    "fit_rate",
    "last_iterate_window_min",
    "quantile_curve",
    "run_sweep",
    "run_trial",
    "RkhsFunction",
    "RunningAverage",
    "finalize_average",
    "new_average",
    "push_average",
    "KernelSpec",
    "gram",
    "kappa_bound",
    "LossModel",
    "make_loss",
    "DivergenceError",
    "OnlineKernelGD",
    "StepSchedule",
    "VariantSpec",
    "check_all",
    "check_almost_sure",
    "check_necessary",
    "check_sufficient_expectation",
    "max_step_bound",
    "step_size",
]
