"""JSON experiment configs: parsing, validation, and override rewriting.

The schema is documented in the README. Every validation error names the
offending config path. Overrides (dotted key=value assignments) are pure
rewrites: running with an override is identical to running with the
pre-rewritten file.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass

import numpy as np

from . import distributions, experiments, kernels, losses, optim
from .distributions import FiniteDistribution
from .experiments import TrialConfig


class ConfigError(ValueError):
    """A config field is missing, has the wrong type, or an invalid value."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


def _get(d: dict, path: str, key: str, required=True, default=None):
    if key not in d:
        if required:
            raise ConfigError(f"{path}.{key}", "missing required field")
        return default
    return d[key]


def kernel_from_config(d: dict, path: str = "kernel") -> kernels.KernelSpec:
    family = _get(d, path, "family")
    try:
        if family == "gaussian":
            return kernels.KernelSpec("gaussian", bandwidth=float(_get(d, path, "bandwidth")))
        if family == "linear":
            return kernels.KernelSpec("linear")
        if family == "polynomial":
            return kernels.KernelSpec(
                "polynomial",
                degree=int(_get(d, path, "degree")),
                offset=float(d.get("offset", 0.0)),
            )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(path, str(exc)) from exc
    raise ConfigError(f"{path}.family", f"unknown kernel family {family!r}")


def loss_from_config(d: dict, path: str = "loss") -> losses.LossModel:
    family = _get(d, path, "family")
    try:
        return losses.make_loss(family, d.get("p"))
    except (TypeError, ValueError) as exc:
        raise ConfigError(path, str(exc)) from exc


def distribution_from_config(d: dict, path: str = "distribution") -> FiniteDistribution:
    support = np.asarray(_get(d, path, "support_x"), dtype=float)
    if support.ndim == 1:
        support = support.reshape(-1, 1)
    m = support.shape[0]
    probs = np.asarray(d.get("probs_x", [1.0 / m] * m), dtype=float)
    label = _get(d, path, "label_model")
    kind = _get(label, f"{path}.label_model", "type")
    try:
        if kind == "regression":
            targets = np.asarray(_get(label, f"{path}.label_model", "targets"), dtype=float)
            noise = float(label.get("noise", 0.0))
            return distributions.regression_distribution(support, probs, targets, noise)
        if kind == "classification":
            p_plus = np.asarray(_get(label, f"{path}.label_model", "p_plus"), dtype=float)
            return distributions.classification_distribution(support, probs, p_plus)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}.label_model", str(exc)) from exc
    raise ConfigError(f"{path}.label_model.type", f"unknown label model {kind!r}")


def schedule_from_config(
    d: dict, path: str = "schedule", step_cap: float | None = None
) -> optim.StepSchedule:
    family = _get(d, path, "family")
    eta1 = d.get("eta1")
    if eta1 is None and "eta1_factor_of_cap" in d:
        if step_cap is None:
            raise ConfigError(
                f"{path}.eta1_factor_of_cap",
                "needs the loss and kernel context to resolve the step cap",
            )
        eta1 = float(d["eta1_factor_of_cap"]) * step_cap
    try:
        if family == "polynomial":
            if eta1 is None:
                raise ConfigError(f"{path}.eta1", "missing required field")
            return optim.StepSchedule("polynomial", eta1=float(eta1), theta=float(_get(d, path, "theta")))
        if family == "poly_log":
            if eta1 is None:
                raise ConfigError(f"{path}.eta1", "missing required field")
            return optim.StepSchedule(
                "poly_log",
                eta1=float(eta1),
                beta=float(d.get("beta", 2.0)),
                alpha_ref=float(d.get("alpha_ref", 1.0)),
            )
        if family == "constant":
            return optim.StepSchedule("constant", eta=float(_get(d, path, "eta")))
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(path, str(exc)) from exc
    raise ConfigError(f"{path}.family", f"unknown schedule family {family!r}")


def variant_from_config(d: dict, path: str = "variant") -> optim.VariantSpec:
    name = _get(d, path, "variant")
    try:
        if name == "plain":
            return optim.VariantSpec("plain")
        if name == "regularized":
            return optim.VariantSpec("regularized", lam=float(_get(d, path, "lambda")))
        if name == "projected":
            return optim.VariantSpec("projected", radius=float(_get(d, path, "radius")))
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(path, str(exc)) from exc
    raise ConfigError(f"{path}.variant", f"unknown variant {name!r}")


def parse_seed_spec(spec) -> tuple[int, ...]:
    """Seeds as a list, a single int, or a half-open range string "a..b"."""
    if isinstance(spec, int):
        return (spec,)
    if isinstance(spec, str):
        if ".." in spec:
            a, b = spec.split("..", 1)
            try:
                lo, hi = int(a), int(b)
            except ValueError as exc:
                raise ConfigError("seeds", f"bad range {spec!r}") from exc
            if hi <= lo:
                raise ConfigError("seeds", f"empty range {spec!r}")
            return tuple(range(lo, hi))
        try:
            return tuple(int(s) for s in spec.split(","))
        except ValueError as exc:
            raise ConfigError("seeds", f"bad seed list {spec!r}") from exc
    if isinstance(spec, (list, tuple)):
        return tuple(int(s) for s in spec)
    raise ConfigError("seeds", f"cannot parse {spec!r}")


@dataclass(frozen=True)
class RunSetup:
    """A validated experiment: the domain config plus execution options."""

    trial: TrialConfig
    workers: int
    drop_first_checkpoint: bool
    raw: dict


def load_setup(cfg: dict) -> RunSetup:
    """Validate a config dict and build the domain objects."""
    if not isinstance(cfg, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    kernel = kernel_from_config(_get(cfg, "<root>", "kernel"))
    loss = loss_from_config(_get(cfg, "<root>", "loss"))
    dist = distribution_from_config(_get(cfg, "<root>", "distribution"))
    kappa = kernels.kappa_bound(kernel, dist.support_x)
    cap = optim.max_step_bound(loss, kappa)
    schedule = schedule_from_config(_get(cfg, "<root>", "schedule"), step_cap=cap)
    variant = variant_from_config(cfg.get("variant", {"variant": "plain"}))
    T_max = int(_get(cfg, "<root>", "T_max"))
    if T_max < 1:
        raise ConfigError("T_max", "must be a positive integer")
    if "checkpoints" in cfg:
        checkpoints = tuple(int(t) for t in cfg["checkpoints"])
    else:
        checkpoints = experiments.default_checkpoints(T_max)
    seeds = parse_seed_spec(cfg.get("seeds", [0]))
    delta = float(cfg.get("delta", 0.05))
    workers = int(cfg.get("workers", 1))
    if workers < 0:
        raise ConfigError("workers", "must be >= 0")
    try:
        trial = TrialConfig(
            dist=dist,
            loss=loss,
            kernel=kernel,
            schedule=schedule,
            variant=variant,
            T_max=T_max,
            checkpoints=checkpoints,
            seeds=seeds,
            delta=delta,
        )
    except ValueError as exc:
        raise ConfigError("<root>", str(exc)) from exc
    return RunSetup(
        trial=trial,
        workers=max(workers, 1),
        drop_first_checkpoint=bool(cfg.get("fit", {}).get("drop_first_checkpoint", False)),
        raw=cfg,
    )


def _parse_override_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(cfg: dict, assignments) -> dict:
    """Rewrite config fields from dotted key=value strings.

    The dotted path must reach an existing field (or a recognized optional
    top-level field); unknown keys are validation errors.
    """
    optional_top = {"seeds", "workers", "delta", "checkpoints", "fit", "T_max", "variant"}
    out = copy.deepcopy(cfg)
    for assignment in assignments:
        if "=" not in assignment:
            raise ConfigError("overrides", f"expected key=value, got {assignment!r}")
        key, text = assignment.split("=", 1)
        parts = key.split(".")
        node = out
        for part in parts[:-1]:
            if not isinstance(node, dict) or part not in node:
                raise ConfigError(key, "unknown override key")
            node = node[part]
        leaf = parts[-1]
        known = isinstance(node, dict) and (
            leaf in node or (node is out and leaf in optional_top)
        )
        if not known:
            raise ConfigError(key, "unknown override key")
        node[leaf] = _parse_override_value(text)
    return out
