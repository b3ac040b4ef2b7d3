"""Sweep and comparison harness: run cells, score them, persist artifacts.

A plan fixes a target, a base sampler config, one swept axis, and a
replication count. Each cell runs its replications with child seeds
derived from the root seed, scores every run against fresh ground truth,
and the harness writes three artifacts under the output directory:
plan.json (the plan itself), cells.csv (one scored row per cell, stable
byte-for-byte across reruns), and summary.json (fit, failures, timing).
Cell failures are isolated: one bad cell is recorded and skipped, the
sweep continues.
"""

from __future__ import annotations

import dataclasses
import json
import os
import time
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from . import rng as _rng
from .batches import config_digest, save_batch
from .metrics import (
    exact_w2_assignment,
    fit_rate,
    rate_table_csv,
    sliced_w2,
    wasserstein2_1d,
)
from .sampler import EpsSchedule, SamplerConfig, _resolve_mode, sfs_run, ula_run
from .targets import build_target, sample_ground_truth

SWEEP_AXES = ("steps", "particles", "mc_size", "eps")
PLAN_METRICS = ("w2_1d", "sliced", "assignment")


@dataclass(frozen=True)
class ExperimentPlan:
    """A sweep: one axis varied over at least three values.

    Attributes:
        name: label for the output artifacts.
        target_options: plain dict accepted by targets.build_target.
        base: SamplerConfig shared by all cells; its seed is the sweep root.
        axis: one of "steps", "particles", "mc_size", "eps".
        values: at least three axis values.
        replications: independent runs per cell, at least three.
        metric: "w2_1d", "sliced", or "assignment".
        workers: drift-evaluation threads passed through to the runs.
    """

    name: str
    target_options: dict
    base: SamplerConfig
    axis: str
    values: tuple
    replications: int = 3
    metric: str = "w2_1d"
    workers: int = 1

    def __post_init__(self):
        if self.axis not in SWEEP_AXES:
            raise ValueError(f"axis must be one of {SWEEP_AXES}, got {self.axis!r}")
        if len(self.values) < 3:
            raise ValueError(f"a sweep needs at least 3 axis values, got {len(self.values)}")
        if self.replications < 3:
            raise ValueError(f"need at least 3 replications, got {self.replications}")
        if self.metric not in PLAN_METRICS:
            raise ValueError(f"metric must be one of {PLAN_METRICS}, got {self.metric!r}")

    def describe(self):
        return {
            "axis": self.axis,
            "base": self.base.describe(),
            "metric": self.metric,
            "name": self.name,
            "replications": self.replications,
            "target": self.target_options,
            "values": list(self.values),
        }


def _cell_config(base, axis, value):
    if axis == "steps":
        return dataclasses.replace(base, steps=int(value))
    if axis == "particles":
        return dataclasses.replace(base, particles=int(value))
    if axis == "mc_size":
        return dataclasses.replace(base, mc_size=int(value))
    return dataclasses.replace(base, eps=EpsSchedule(rule="fixed", value=float(value)))


def _score(metric, a, b, seed):
    if metric == "w2_1d":
        return wasserstein2_1d(a, b)
    if metric == "sliced":
        return sliced_w2(a, b, seed=seed).value
    return exact_w2_assignment(a, b)


def run_experiment(plan, out_dir):
    """Run every cell of a plan and write plan.json, cells.csv, summary.json.

    Returns:
        The summary dict. Failed cells appear under "failures" keyed by
        axis value; successful cells carry mean W2, its standard error
        over replications, and the cell's ground-truth noise floor.
    """
    os.makedirs(out_dir, exist_ok=True)
    target = build_target(plan.target_options)
    if plan.metric == "w2_1d" and target.dim != 1:
        raise ValueError("metric w2_1d needs a one-dimensional target")

    plan_desc = plan.describe()
    plan_digest = config_digest(plan_desc)
    with open(os.path.join(out_dir, "plan.json"), "w") as fh:
        json.dump({"digest": plan_digest, "plan": plan_desc}, fh, indent=2, sort_keys=True)
        fh.write("\n")

    start = time.perf_counter()
    cells = []
    failures = {}
    for ci, value in enumerate(plan.values):
        try:
            cfg = _cell_config(plan.base, plan.axis, value)
            seeds = _rng.child_seeds(plan.base.seed, ci, 2 * plan.replications + 2)
            scores = []
            for r in range(plan.replications):
                run_cfg = dataclasses.replace(cfg, seed=seeds[2 * r])
                batch = sfs_run(run_cfg, target, workers=plan.workers)
                truth = sample_ground_truth(target, cfg.particles, seeds[2 * r + 1])
                scores.append(_score(plan.metric, batch.samples, truth.samples, seeds[2 * r + 1]))
            floor_a = sample_ground_truth(target, cfg.particles, seeds[-2]).samples
            floor_b = sample_ground_truth(target, cfg.particles, seeds[-1]).samples
            floor = _score(plan.metric, floor_a, floor_b, seeds[-1])
            scores = np.asarray(scores)
            cells.append(
                {
                    "noise_floor": float(floor),
                    "replications": plan.replications,
                    "value": value,
                    "w2_mean": float(scores.mean()),
                    "w2_se": float(scores.std(ddof=1) / np.sqrt(len(scores))),
                }
            )
        except Exception as exc:  # noqa: BLE001 - cell isolation is the contract
            failures[str(value)] = f"{type(exc).__name__}: {exc}"

    rows = [
        (c["value"], c["replications"], c["w2_mean"], c["w2_se"], c["noise_floor"])
        for c in cells
    ]
    rate_table_csv(
        os.path.join(out_dir, "cells.csv"),
        (plan.axis, "replications", "w2_mean", "w2_se", "noise_floor"),
        rows,
    )

    fit = None
    if len(cells) >= 3:
        xs = [float(c["value"]) for c in cells]
        ys = [c["w2_mean"] for c in cells]
        if all(v > 0 for v in xs) and all(v > 0 for v in ys):
            fit = fit_rate(xs, ys).describe()

    summary = {
        "axis": plan.axis,
        "cells": cells,
        "failures": failures,
        "fit": fit,
        "name": plan.name,
        "plan_digest": plan_digest,
        "wallclock": time.perf_counter() - start,
    }
    with open(os.path.join(out_dir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary


def mode_mass_balance(samples, mixture):
    """Fraction of samples nearest each mixture mean, against the weights.

    A sampler that loses a mode shows up as a large max_abs_error here
    even when scalar metrics look tolerable.
    """
    d = cdist(np.asarray(samples, dtype=float), mixture.means)
    assign = np.argmin(d, axis=1)
    frac = np.bincount(assign, minlength=mixture.n_components) / samples.shape[0]
    return {
        "fractions": [float(v) for v in frac],
        "max_abs_error": float(np.max(np.abs(frac - mixture.weights))),
        "weights": [float(w) for w in mixture.weights],
    }


def compare_samplers(target, config, ula_step_size, ula_burn_in, ula_post_steps=None,
                     out_dir=None, workers=1):
    """Run the diffusion sampler and a budget-matched Langevin baseline.

    The budget is particles * steps * mc_size target evaluations for the
    diffusion run. The Langevin chain length is chosen to match it, and an
    explicitly supplied ula_post_steps that breaks the match is a
    validation error.

    Args:
        target: TargetSpec both samplers draw from.
        config: SamplerConfig for the diffusion run (a Monte-Carlo drift
            mode; the budget is undefined for the exact evaluator).
        ula_step_size: Langevin step h.
        ula_burn_in: discarded Langevin iterations.
        ula_post_steps: optional explicit post-burn-in length.
        out_dir: when given, write comparison.json and both sample CSVs.
        workers: drift threads for the diffusion run.

    Returns:
        Report dict with per-sampler W2 and mode-mass balance.
    """
    mode = _resolve_mode(config, target)
    if mode == "exact":
        raise ValueError(
            "budget matching needs a Monte-Carlo drift mode; the exact "
            "evaluator has no per-step evaluation count"
        )
    total = config.steps * int(config.mc_size)
    ula_burn_in = int(ula_burn_in)
    if ula_post_steps is None:
        ula_post_steps = total - ula_burn_in
        if ula_post_steps < 1:
            raise ValueError(
                f"burn_in {ula_burn_in} eats the whole budget of {total} iterations"
            )
    else:
        ula_post_steps = int(ula_post_steps)
        if ula_burn_in + ula_post_steps != total:
            raise ValueError(
                f"budget mismatch: burn_in + post = {ula_burn_in + ula_post_steps} "
                f"Langevin iterations, but the diffusion run uses {total} evaluations"
            )

    sfs_batch = sfs_run(config, target, workers=workers)
    ula_cfg = dataclasses.replace(config, steps=ula_post_steps, eps=EpsSchedule())
    ula_batch = ula_run(ula_cfg, target, ula_step_size, ula_burn_in)

    gt_seed = _rng.child_seeds(config.seed, 0, 1)[0]
    truth = sample_ground_truth(target, config.particles, gt_seed).samples
    metric = "w2_1d" if target.dim == 1 else "sliced"

    def score(samples):
        entry = {"w2": _score(metric, samples, truth, gt_seed), "metric": metric}
        if target.mixture is not None:
            entry["mode_mass"] = mode_mass_balance(samples, target.mixture)
        return entry

    report = {
        "budget": {
            "evaluations": total * config.particles,
            "per_particle": total,
            "ula_burn_in": ula_burn_in,
            "ula_post_steps": ula_post_steps,
            "ula_step_size": float(ula_step_size),
        },
        "config_digest": sfs_batch.config_digest,
        "sfs": score(sfs_batch.samples),
        "target": sfs_batch.config["target"],
        "ula": score(ula_batch.samples),
    }
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        save_batch(sfs_batch, out_dir, stem="sfs")
        save_batch(ula_batch, out_dir, stem="ula")
        with open(os.path.join(out_dir, "comparison.json"), "w") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return report
