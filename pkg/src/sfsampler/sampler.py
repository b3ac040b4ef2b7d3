"""Euler-Maruyama integration of the drifted diffusion over unit time.

A run starts every particle at the origin and takes K equal steps of size
s = 1/K, evaluating the drift at the left endpoint t_k = k/K (never at
t = 1) and adding sqrt(s) Gaussian increments. Increments for step k are
the rows of one block from the (seed, increment, k) substream; a
Monte-Carlo drift batch for particle i at step k is row i of the
(seed, drift, k) block. Worker threads only split the drift evaluation
across particles, never the draws, so results are byte-identical for any
worker count.

Also provides an unadjusted Langevin baseline over the same targets for
budget-matched comparisons.
"""

from __future__ import annotations

import dataclasses
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import rng as _rng
from .batches import SampleBatch, config_digest
from .drift import DRIFT_MODES, _mc_drift_core, default_drift_mode, drift_exact
from .errors import NonFiniteStateError, UnsupportedTargetError
from .targets import describe, regularize

DEFAULT_TRAJECTORY_BUDGET = 1 << 27  # float64 values, about 1 GiB
_CHUNK_VALUES = 1 << 22  # Z values generated per chunk in MC drift


@dataclass(frozen=True)
class EpsSchedule:
    """Rule that picks the Gaussian-floor weight from the MC batch size m.

    Rules: "none" (no floor), "fixed" (explicit value), "log" with
    eps = (log m)^(-1/5), and "power" with eps = m^(-1/5). The rules tied
    to m exist because the regularized drift error balances the floor bias
    against Monte-Carlo noise at those rates.
    """

    rule: str = "none"
    value: float | None = None

    def __post_init__(self):
        if self.rule not in ("none", "fixed", "log", "power"):
            raise ValueError(f"unknown eps rule {self.rule!r}")
        if self.rule == "fixed":
            v = self.value
            if v is None or not (math.isfinite(v) and 0.0 < v < 1.0):
                raise ValueError(f"fixed eps must lie in (0, 1), got {v!r}")
        elif self.value is not None:
            raise ValueError(f"eps rule {self.rule!r} takes no value")

    @staticmethod
    def parse(text):
        """Parse CLI/config syntax: none | log | power | fixed:<value>."""
        text = text.strip()
        if text in ("none", "log", "power"):
            return EpsSchedule(rule=text)
        if text.startswith("fixed:"):
            return EpsSchedule(rule="fixed", value=float(text.split(":", 1)[1]))
        raise ValueError(f"cannot parse eps rule {text!r}")

    def bind(self, m=None):
        """Resolve the schedule to a concrete eps, once per run."""
        if self.rule == "none":
            return 0.0
        if self.rule == "fixed":
            return float(self.value)
        if m is None:
            raise ValueError(
                f"eps rule {self.rule!r} is driven by the Monte-Carlo batch size, "
                "which the exact evaluator does not have"
            )
        m = int(m)
        if self.rule == "log":
            if m < 3:
                raise ValueError("log rule needs m >= 3 to give eps < 1")
            return float(math.log(m) ** -0.2)
        if m < 2:
            raise ValueError("power rule needs m >= 2 to give eps < 1")
        return float(m ** -0.2)

    def describe(self):
        return {"rule": self.rule, "value": self.value}


@dataclass(frozen=True)
class SamplerConfig:
    """Static description of one run.

    Attributes:
        steps: number K of Euler steps.
        particles: number n of independent particles.
        seed: root seed; runs are a pure function of (config, target).
        drift: "auto", "exact", "mc-grad", or "mc-stein".
        mc_size: Monte-Carlo batch size m for the mc modes.
        eps: Gaussian-floor schedule, bound once per run.
        record_trajectory: keep the whole path, not just terminal states.
    """

    steps: int
    particles: int
    seed: int
    drift: str = "auto"
    mc_size: int | None = None
    eps: EpsSchedule = EpsSchedule()
    record_trajectory: bool = False

    def __post_init__(self):
        if not (isinstance(self.steps, int) and self.steps >= 1):
            raise ValueError(f"steps must be a positive integer, got {self.steps!r}")
        if not (isinstance(self.particles, int) and self.particles >= 1):
            raise ValueError(f"particles must be a positive integer, got {self.particles!r}")
        if self.drift not in ("auto",) + DRIFT_MODES:
            raise ValueError(f"drift must be auto or one of {DRIFT_MODES}, got {self.drift!r}")
        if self.mc_size is not None and not (isinstance(self.mc_size, int) and self.mc_size >= 1):
            raise ValueError(f"mc_size must be a positive integer, got {self.mc_size!r}")
        _rng.check_seed(self.seed)

    def describe(self):
        return {
            "drift": self.drift,
            "eps": self.eps.describe(),
            "mc_size": self.mc_size,
            "particles": self.particles,
            "record_trajectory": bool(self.record_trajectory),
            "seed": self.seed,
            "steps": self.steps,
        }


def _resolve_mode(config, target):
    mode = config.drift
    if mode == "auto":
        mode = default_drift_mode(target)
    if mode == "exact":
        if target.mixture is None:
            raise UnsupportedTargetError(
                f"exact drift needs a mixture target, {target.name!r} has none"
            )
    else:
        if config.mc_size is None:
            raise ValueError(f"drift mode {mode!r} needs mc_size")
        if mode == "mc-grad" and target.grad_log_f is None:
            raise UnsupportedTargetError(
                f"gradient-form drift needs grad log f, {target.name!r} has none"
            )
    return mode


def _first_bad_particle(y):
    ok = np.isfinite(y).all(axis=1)
    return int(np.argmin(ok))


def _mc_drift_step(target, y, t, mode, m, seed, k, pool, workers):
    """Drift estimates for all particles at one step, chunked and threaded."""
    n, p = y.shape
    gen = _rng.substream(seed, _rng.ROLE_DRIFT, k)
    out = np.empty((n, p))
    chunk = max(1, _CHUNK_VALUES // max(1, m * p))
    for start in range(0, n, chunk):
        stop = min(n, start + chunk)
        z = gen.standard_normal((stop - start, m, p))
        rows = stop - start
        if pool is None or rows < 2 * workers:
            out[start:stop] = _mc_drift_core(
                target, y[start:stop], t, z, mode, step_index=k, particle_offset=start
            )
            continue
        bounds = np.linspace(0, rows, workers + 1).astype(int)
        futures = []
        for w in range(workers):
            lo, hi = bounds[w], bounds[w + 1]
            if lo == hi:
                continue
            futures.append(
                (
                    lo,
                    hi,
                    pool.submit(
                        _mc_drift_core,
                        target,
                        y[start + lo : start + hi],
                        t,
                        z[lo:hi],
                        mode,
                        step_index=k,
                        particle_offset=start + lo,
                    ),
                )
            )
        for lo, hi, fut in futures:
            out[start + lo : start + hi] = fut.result()
    return out


def sfs_run(config, target, *, workers=1, trajectory_budget=DEFAULT_TRAJECTORY_BUDGET):
    """Integrate the diffusion and return terminal states.

    Args:
        config: SamplerConfig; the eps schedule is bound here, and a
            positive eps swaps the run target for its regularized form.
        target: TargetSpec to sample from.
        workers: drift-evaluation threads. Any value yields byte-identical
            results; more threads only speed up Monte-Carlo drift.
        trajectory_budget: cap on recorded path values (float64 count).

    Returns:
        SampleBatch with (n, dim) terminal states, the resolved config,
        and its digest.

    Raises:
        DriftSingularityError: every probe of some particle fell where
            f = 0 (propagates with particle and step context).
        NonFiniteStateError: a particle state left the finite range.
    """
    workers = max(1, int(workers))
    mode = _resolve_mode(config, target)
    eps = config.eps.bind(config.mc_size if mode != "exact" else None)
    run_target = regularize(target, eps) if eps > 0.0 else target

    n, p, k_steps = config.particles, target.dim, config.steps
    resolved = {
        "algorithm": "sfs",
        "drift_resolved": mode,
        "eps_resolved": eps,
        "sampler": config.describe(),
        "stream_policy": _rng.STREAM_POLICY,
        "target": describe(target),
    }
    digest = config_digest(resolved)

    trajectories = None
    if config.record_trajectory:
        need = n * (k_steps + 1) * p
        if need > trajectory_budget:
            raise ValueError(
                f"trajectory recording needs {need} values, over the budget "
                f"of {trajectory_budget}; raise trajectory_budget explicitly "
                "or record fewer particles or steps"
            )
        trajectories = np.zeros((n, k_steps + 1, p))

    start = time.perf_counter()
    y = np.zeros((n, p))
    s = 1.0 / k_steps
    root_s = math.sqrt(s)
    m = int(config.mc_size) if config.mc_size is not None else None
    pool = ThreadPoolExecutor(max_workers=workers) if (workers > 1 and mode != "exact") else None
    try:
        for k in range(k_steps):
            t = k / k_steps
            if mode == "exact":
                b = drift_exact(run_target, y, t)
            else:
                b = _mc_drift_step(
                    run_target, y, t, mode, m, config.seed, k, pool, workers
                )
            inc = _rng.substream(config.seed, _rng.ROLE_INCREMENT, k).standard_normal((n, p))
            y += s * b
            y += root_s * inc
            if not np.isfinite(y).all():
                bad = _first_bad_particle(y)
                raise NonFiniteStateError(
                    f"particle {bad} became non-finite after step {k}",
                    particle_index=bad,
                    step_index=k,
                )
            if trajectories is not None:
                trajectories[:, k + 1] = y
    finally:
        if pool is not None:
            pool.shutdown(wait=False)

    return SampleBatch(
        samples=y,
        config=resolved,
        config_digest=digest,
        seed=config.seed,
        wallclock=time.perf_counter() - start,
        trajectories=trajectories,
    )


def sfs_trajectory(config, target, *, workers=1, trajectory_budget=DEFAULT_TRAJECTORY_BUDGET):
    """Run with path recording on; see sfs_run for everything else."""
    config = dataclasses.replace(config, record_trajectory=True)
    return sfs_run(config, target, workers=workers, trajectory_budget=trajectory_budget)


def ula_run(config, target, step_size, burn_in):
    """Unadjusted Langevin baseline: n parallel chains, terminal states kept.

    Each chain starts from the base Gaussian and runs burn_in plus
    config.steps iterations of x <- x + h grad log pi(x) + sqrt(2h) noise,
    where pi is the target density. The eps schedule does not apply here
    and must be "none".

    Args:
        config: SamplerConfig; steps counts post-burn-in iterations, and
            drift/mc_size are ignored.
        target: TargetSpec with a gradient.
        step_size: positive Langevin step h.
        burn_in: non-negative iterations discarded before the terminal state.

    Returns:
        SampleBatch of terminal states.
    """
    if target.grad_log_f is None:
        raise UnsupportedTargetError(f"Langevin needs grad log f, {target.name!r} has none")
    if config.eps.rule != "none":
        raise ValueError("the eps schedule applies to the diffusion sampler, not Langevin")
    step_size = float(step_size)
    if not (math.isfinite(step_size) and step_size > 0.0):
        raise ValueError(f"step_size must be positive, got {step_size!r}")
    burn_in = int(burn_in)
    if burn_in < 0:
        raise ValueError(f"burn_in must be non-negative, got {burn_in}")

    n, p = config.particles, target.dim
    total = burn_in + config.steps
    resolved = {
        "algorithm": "ula",
        "sampler": config.describe(),
        "stream_policy": _rng.STREAM_POLICY,
        "target": describe(target),
        "ula": {"burn_in": burn_in, "step_size": step_size, "total_steps": total},
    }
    digest = config_digest(resolved)

    start = time.perf_counter()
    x = _rng.substream(config.seed, _rng.ROLE_ULA_INIT, 0).standard_normal((n, p))
    noise_scale = math.sqrt(2.0 * step_size)
    for it in range(total):
        g = target.grad_log_f(x) - x
        x = x + step_size * g
        x += noise_scale * _rng.substream(config.seed, _rng.ROLE_ULA_STEP, it).standard_normal((n, p))
        if not np.isfinite(x).all():
            bad = _first_bad_particle(x)
            raise NonFiniteStateError(
                f"Langevin chain {bad} became non-finite after iteration {it}",
                particle_index=bad,
                step_index=it,
            )
    return SampleBatch(
        samples=x,
        config=resolved,
        config_digest=digest,
        seed=config.seed,
        wallclock=time.perf_counter() - start,
    )
