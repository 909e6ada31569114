"""Batch entry point: run sweeps, verify inequalities, fit rates, check schedules.

Exit codes: 0 success, 1 configuration or usage error, 2 a numeric check
failed. Output files are written atomically (temp file, then rename) and are
byte-identical for identical (config, seeds, overrides): floats render via
Python's shortest round-trip repr.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import os
import sys
import tempfile
from dataclasses import asdict

from . import config as config_mod
from . import distributions, experiments, optim, tasks, verification
from .config import ConfigError

OUT_DIR_ENV = "OKGD_OUT_DIR"


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(float(x))
    return str(x)


def _atomic_write(path: str, text: str):
    directory = os.path.dirname(path) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-okgd-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _load_config(path: str) -> dict:
    if path == "default":
        return tasks.load_default_config()
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError("config", f"cannot read {path!r}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON in {path!r}: {exc}") from exc


def _trajectories_csv(records) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        [
            "seed",
            "T",
            "excess_last",
            "excess_uniform",
            "excess_weighted",
            "dist_sq_to_fH",
            "max_dist_sq_so_far",
            "min_slack_descent",
            "min_slack_bound",
            "diverged",
        ]
    )
    for rec in records:
        for j, t in enumerate(rec.checkpoints):
            writer.writerow(
                [
                    rec.seed,
                    t,
                    _fmt(rec.excess_last[j]),
                    _fmt(rec.excess_uniform[j]),
                    _fmt(rec.excess_weighted[j]),
                    _fmt(rec.dist_sq_to_fH[j]),
                    _fmt(rec.max_dist_sq_so_far[j]),
                    _fmt(rec.min_slack_descent[j]),
                    _fmt(rec.min_slack_bound[j]),
                    _fmt(rec.diverged),
                ]
            )
    return buf.getvalue()


def _out_dir(args) -> str:
    if args.out:
        return args.out
    return os.environ.get(OUT_DIR_ENV, "out")


def _run_one(cfg: dict, out_dir: str) -> dict:
    setup = config_mod.load_setup(cfg)
    trial = setup.trial
    oracle = distributions.solve_f_H(trial.dist, trial.loss, trial.kernel)
    records = experiments.run_sweep(trial, oracle=oracle, workers=setup.workers)
    summary = experiments.summarize(
        trial, records, oracle, drop_first=setup.drop_first_checkpoint
    )
    _atomic_write(os.path.join(out_dir, "trajectories.csv"), _trajectories_csv(records))
    _atomic_write(
        os.path.join(out_dir, "summary.json"),
        json.dumps(summary, indent=2, sort_keys=True) + "\n",
    )
    return summary


def _cmd_run(args) -> int:
    cfg = config_mod.apply_overrides(_load_config(args.config), args.set or [])
    if args.seeds:
        cfg["seeds"] = args.seeds
    if args.workers is not None:
        cfg["workers"] = args.workers
    out_dir = _out_dir(args)
    summary = _run_one(cfg, out_dir)
    fits = summary["rate_fits"]
    for metric in ("excess_last", "excess_uniform", "excess_weighted"):
        fit = fits[metric]
        if "slope" in fit:
            print(f"{metric}: slope {fit['slope']:.4f} (R^2 {fit['r_squared']:.4f})")
    print(f"wrote {out_dir}/trajectories.csv and {out_dir}/summary.json")
    return 0


def _cmd_sweep(args) -> int:
    cfg = config_mod.apply_overrides(_load_config(args.config), args.set or [])
    grid = cfg.pop("sweep", None)
    if not grid:
        raise ConfigError("sweep", "config must contain a 'sweep' mapping of key -> list")
    keys = sorted(grid)
    out_dir = _out_dir(args)
    index = []
    for combo in itertools.product(*(grid[k] for k in keys)):
        assignments = [f"{k}={json.dumps(v)}" for k, v in zip(keys, combo)]
        sub = config_mod.apply_overrides(cfg, assignments)
        name = "_".join(f"{k.split('.')[-1]}={v}" for k, v in zip(keys, combo))
        sub_dir = os.path.join(out_dir, name)
        summary = _run_one(sub, sub_dir)
        entry = {"name": name, "overrides": dict(zip(keys, combo))}
        entry["rate_fits"] = summary["rate_fits"]
        index.append(entry)
        print(f"[{name}] done")
    _atomic_write(
        os.path.join(out_dir, "index.json"),
        json.dumps(index, indent=2, sort_keys=True) + "\n",
    )
    return 0


def _cmd_verify(args) -> int:
    cfg = config_mod.apply_overrides(_load_config(args.config), args.set or [])
    setup = config_mod.load_setup(cfg)
    trial = setup.trial
    oracle = distributions.solve_f_H(trial.dist, trial.loss, trial.kernel)
    reports = verification.standard_suite(oracle, trial.schedule, seed=args.seed)
    payload = []
    all_passed = True
    for rep in reports:
        d = asdict(rep)
        d["failure_witnesses"] = [list(map(float, w)) for w in rep.failure_witnesses]
        payload.append(d)
        flag = rep.status.upper()
        print(f"{flag:7s} {rep.check_name}: worst slack {rep.worst_slack:.3e} "
              f"({rep.trials} trials, {rep.failures} failures)")
        if rep.status == "failed":
            all_passed = False
    out_dir = _out_dir(args)
    _atomic_write(
        os.path.join(out_dir, "verify_report.json"),
        json.dumps({"all_passed": all_passed, "reports": payload}, indent=2, sort_keys=True)
        + "\n",
    )
    return 0 if all_passed else 2


def _cmd_fit_rate(args) -> int:
    points = []
    with open(args.csv) as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames and "T" in reader.fieldnames and "value" in reader.fieldnames:
            for row in reader:
                points.append((int(row["T"]), float(row["value"])))
        elif reader.fieldnames and "T" in reader.fieldnames and args.metric:
            rows = list(reader)
            by_t: dict[int, list[float]] = {}
            for row in rows:
                if row.get("diverged", "false") == "true":
                    continue
                by_t.setdefault(int(row["T"]), []).append(float(row[args.metric]))
            import numpy as np

            points = [(t, float(np.median(v))) for t, v in sorted(by_t.items())]
        else:
            raise ConfigError(
                "fit-rate", "CSV needs (T, value) columns, or a trajectories.csv with --metric"
            )
    if args.drop_first and len(points) > 2:
        points = points[1:]
    fit = experiments.fit_rate(points)
    print(json.dumps(asdict(fit), indent=2, sort_keys=True))
    return 0


def _cmd_check_schedule(args) -> int:
    if args.config:
        cfg = _load_config(args.config)
        setup = config_mod.load_setup(cfg)
        schedule = setup.trial.schedule
        alpha = args.alpha if args.alpha is not None else setup.trial.loss.alpha
        loss = setup.trial.loss
        kappa = distributions.kernels.kappa_bound(setup.trial.kernel, setup.trial.dist.support_x)
        caps = {
            "eta_max": optim.max_step_bound(loss, kappa),
            "eta_max_necessity": optim.necessity_step_bound(loss, kappa),
        }
    else:
        if args.alpha is None:
            raise ConfigError("check-schedule", "--alpha is required without --config")
        d = {"family": args.family, "eta1": args.eta1, "theta": args.theta,
             "beta": args.beta, "alpha_ref": args.alpha_ref, "eta": args.eta}
        d = {k: v for k, v in d.items() if v is not None}
        schedule = config_mod.schedule_from_config(d, path="schedule")
        alpha = args.alpha
        caps = {}
    verdicts = optim.check_all(schedule, alpha)
    out = {name: {"status": v.status, "reason": v.reason} for name, v in verdicts.items()}
    if caps:
        out["step_caps"] = caps
    print(json.dumps(out, indent=2, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="okgd", description="Online kernel gradient descent experiment harness"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", default="default",
                       help="path to a JSON config, or 'default' for the built-in task")
        p.add_argument("--out", default=None, help=f"output directory (or ${OUT_DIR_ENV})")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config field (dotted path)")

    p_run = sub.add_parser("run", help="run all seeds of one config")
    add_common(p_run)
    p_run.add_argument("--seeds", default=None, help="e.g. 0..32 or 3,5,9")
    p_run.add_argument("--workers", type=int, default=None)
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="run the config's declared parameter grid")
    add_common(p_sweep)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_verify = sub.add_parser("verify", help="run the inequality verification suite")
    add_common(p_verify)
    p_verify.add_argument("--seed", type=int, default=0)
    p_verify.set_defaults(func=_cmd_verify)

    p_fit = sub.add_parser("fit-rate", help="fit log(value) against log(T) from a CSV")
    p_fit.add_argument("--csv", required=True)
    p_fit.add_argument("--metric", default=None,
                       help="column of a trajectories.csv to aggregate by median")
    p_fit.add_argument("--drop-first", action="store_true")
    p_fit.set_defaults(func=_cmd_fit_rate)

    p_check = sub.add_parser("check-schedule", help="analytic step-size condition verdicts")
    p_check.add_argument("--config", default=None)
    p_check.add_argument("--family", default="polynomial")
    p_check.add_argument("--eta1", type=float, default=1.0)
    p_check.add_argument("--theta", type=float, default=None)
    p_check.add_argument("--beta", type=float, default=None)
    p_check.add_argument("--alpha-ref", dest="alpha_ref", type=float, default=None)
    p_check.add_argument("--eta", type=float, default=None)
    p_check.add_argument("--alpha", type=float, default=None,
                         help="loss smoothness exponent in (0, 1]")
    p_check.set_defaults(func=_cmd_check_schedule)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
