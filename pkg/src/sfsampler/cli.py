"""Command line front end.

Subcommands: sample (run the diffusion sampler and write a batch),
drift-check (Monte-Carlo drift against the closed form on a grid),
sweep (run an experiment plan), compare (budget-matched Langevin
comparison), regularity (probe drift-growth constants against declared
bounds). Every failure prints one JSON object describing the error and
exits with a stable code: 2 config or I/O, 3 unknown target kind,
4 validation or unsupported operation, 5 numerical breakdown mid-run.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from .batches import save_batch
from .config import (
    plan_from_config,
    read_ini,
    sampler_from_config,
    target_from_config,
    ula_from_config,
    write_resolved_ini,
)
from .drift import (
    DriftEvaluator,
    ProbeGrid,
    default_drift_mode,
    drift_exact,
    drift_mc_grad,
    drift_mc_stein,
    estimate_regularity,
    probe_points,
)
from .errors import (
    ConfigError,
    DriftSingularityError,
    NonFiniteStateError,
    UnknownTargetError,
    UnsupportedTargetError,
)
from .harness import compare_samplers, run_experiment
from .sampler import sfs_run

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_UNKNOWN_TARGET = 3
EXIT_VALIDATION = 4
EXIT_NUMERICAL = 5


def build_parser():
    parser = argparse.ArgumentParser(
        prog="sfs",
        description="Diffusion-based sampler for unnormalized targets.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, need_out):
        p.add_argument("--config", required=True, help="INI config file")
        p.add_argument("--out", required=need_out, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override [run] seed")
        p.add_argument("--steps", type=int, default=None, help="override [run] steps")
        p.add_argument("--particles", type=int, default=None, help="override [run] particles")
        p.add_argument("--mc-size", type=int, default=None, help="override [run] mc_size")
        p.add_argument("--eps-rule", default=None, help="override [run] eps_rule")
        p.add_argument("--drift", default=None, help="override [run] drift mode")
        p.add_argument("--workers", type=int, default=1, help="drift evaluation threads")

    p_sample = sub.add_parser("sample", help="run the sampler and write a batch")
    add_common(p_sample, need_out=True)
    p_sample.add_argument(
        "--trajectory", action="store_true", help="record and save full paths"
    )
    p_sample.set_defaults(func=_cmd_sample)

    p_drift = sub.add_parser(
        "drift-check", help="Monte-Carlo drift against the closed form on a grid"
    )
    add_common(p_drift, need_out=False)
    p_drift.set_defaults(func=_cmd_drift_check)

    p_sweep = sub.add_parser("sweep", help="run the [plan] sweep from the config")
    add_common(p_sweep, need_out=True)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_cmp = sub.add_parser("compare", help="budget-matched Langevin comparison")
    add_common(p_cmp, need_out=True)
    p_cmp.set_defaults(func=_cmd_compare)

    p_reg = sub.add_parser("regularity", help="probe drift growth constants")
    add_common(p_reg, need_out=False)
    p_reg.set_defaults(func=_cmd_regularity)

    return parser


def _overrides(args):
    out = {
        "seed": args.seed,
        "steps": args.steps,
        "particles": args.particles,
        "mc_size": args.mc_size,
        "eps_rule": args.eps_rule,
        "drift": args.drift,
    }
    if getattr(args, "trajectory", False):
        out["record_trajectory"] = True
    return out


def _emit(payload):
    json.dump(payload, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


def _cmd_sample(args):
    sections = read_ini(args.config)
    target = target_from_config(sections)
    config = sampler_from_config(sections, _overrides(args))
    batch = sfs_run(config, target, workers=args.workers)
    paths = save_batch(batch, args.out, stem="samples")
    write_resolved_ini(os.path.join(args.out, "resolved.ini"), target, config)
    if batch.trajectories is not None:
        np.save(os.path.join(args.out, "trajectories.npy"), batch.trajectories)
    _emit(
        {
            "command": "sample",
            "config_digest": batch.config_digest,
            "csv": paths["csv"],
            "dim": batch.dim,
            "n": batch.n,
            "out": args.out,
            "wallclock": batch.wallclock,
        }
    )
    return EXIT_OK


def _cmd_drift_check(args):
    sections = read_ini(args.config)
    target = target_from_config(sections)
    config = sampler_from_config(sections, _overrides(args))
    if target.mixture is None:
        raise UnsupportedTargetError(
            f"drift-check needs the closed form, so a mixture target; "
            f"{target.name!r} has none"
        )
    mode = config.drift
    if mode in ("auto", "exact"):
        mode = "mc-grad"
    m = config.mc_size if config.mc_size is not None else 64
    ev = DriftEvaluator(target=target, mode=mode, m=m, seed=config.seed)
    grid = ProbeGrid()
    pts = probe_points(grid, target.dim, seed=config.seed)
    estimate = drift_mc_grad if mode == "mc-grad" else drift_mc_stein
    cells = []
    worst = 0.0
    for t in grid.t_values:
        exact = drift_exact(target, pts, t)
        approx = np.vstack(
            [estimate(ev, pts[i], t, step_index=0, particle_index=i) for i in range(len(pts))]
        )
        err = np.linalg.norm(approx - exact, axis=1)
        rms = float(np.sqrt(np.mean(err**2)))
        worst = max(worst, float(err.max()))
        cells.append({"t": float(t), "rms": rms, "max": float(err.max())})
    report = {
        "command": "drift-check",
        "cells": cells,
        "max_error": worst,
        "mc_size": int(m),
        "mode": mode,
        "n_points": int(len(pts)),
        "seed": config.seed,
        "target": target.name,
    }
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "drift_check.json"), "w") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")
    _emit(report)
    return EXIT_OK


def _cmd_sweep(args):
    sections = read_ini(args.config)
    target = target_from_config(sections)
    base = sampler_from_config(sections, _overrides(args))
    plan = plan_from_config(sections, base)
    if args.workers != 1:
        plan = dataclasses.replace(plan, workers=args.workers)
    summary = run_experiment(plan, args.out)
    write_resolved_ini(os.path.join(args.out, "resolved.ini"), target, base, plan=plan)
    _emit(
        {
            "command": "sweep",
            "cells": len(summary["cells"]),
            "failures": summary["failures"],
            "fit": summary["fit"],
            "out": args.out,
            "plan_digest": summary["plan_digest"],
        }
    )
    return EXIT_OK


def _cmd_compare(args):
    sections = read_ini(args.config)
    target = target_from_config(sections)
    config = sampler_from_config(sections, _overrides(args))
    ula = ula_from_config(sections)
    report = compare_samplers(
        target,
        config,
        ula_step_size=ula["step_size"],
        ula_burn_in=ula["burn_in"],
        ula_post_steps=ula["post_steps"],
        out_dir=args.out,
        workers=args.workers,
    )
    write_resolved_ini(os.path.join(args.out, "resolved.ini"), target, config, ula=ula)
    _emit({"command": "compare", "out": args.out, **report})
    return EXIT_OK


def _cmd_regularity(args):
    sections = read_ini(args.config)
    target = target_from_config(sections)
    config = sampler_from_config(sections, _overrides(args))
    evaluator = None
    if target.mixture is None:
        mode = config.drift
        if mode in ("auto", "exact"):
            mode = default_drift_mode(target)
        m = config.mc_size if config.mc_size is not None else 64
        evaluator = DriftEvaluator(target=target, mode=mode, m=m, seed=config.seed)
    estimate = estimate_regularity(target, seed=config.seed, evaluator=evaluator)
    report = {"command": "regularity", "estimate": estimate.describe(), "target": target.name}
    if target.regularity is not None:
        reg = target.regularity
        b_sup_bound = reg.gamma / reg.xi
        report["declared"] = reg.describe()
        report["checks"] = {
            "b_sup_bound": float(b_sup_bound),
            "b_sup_ok": bool(estimate.b_sup_hat <= b_sup_bound),
            "c0_bound": float(b_sup_bound**2),
            "c0_ok": bool(estimate.c0_hat <= b_sup_bound**2),
        }
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "regularity.json"), "w") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")
    _emit(report)
    return EXIT_OK


def _error_payload(exc, code):
    payload = {"error": type(exc).__name__, "exit": code, "message": str(exc)}
    if isinstance(exc, DriftSingularityError):
        payload["context"] = {
            "particle_index": exc.particle_index,
            "step_index": exc.step_index,
            "t": exc.t,
            "x": None if exc.x is None else np.asarray(exc.x).tolist(),
        }
    elif isinstance(exc, NonFiniteStateError):
        payload["context"] = {
            "particle_index": exc.particle_index,
            "step_index": exc.step_index,
        }
    return payload


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return args.func(args)
    except ConfigError as exc:
        _emit(_error_payload(exc, EXIT_CONFIG))
        return EXIT_CONFIG
    except UnknownTargetError as exc:
        _emit(_error_payload(exc, EXIT_UNKNOWN_TARGET))
        return EXIT_UNKNOWN_TARGET
    except (DriftSingularityError, NonFiniteStateError) as exc:
        _emit(_error_payload(exc, EXIT_NUMERICAL))
        return EXIT_NUMERICAL
    except (UnsupportedTargetError, ValueError) as exc:
        _emit(_error_payload(exc, EXIT_VALIDATION))
        return EXIT_VALIDATION
    except OSError as exc:
        _emit(_error_payload(exc, EXIT_CONFIG))
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
