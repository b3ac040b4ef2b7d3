"""Drift of the unit-time diffusion and its Monte-Carlo estimators.

The drift at (x, t) is the gradient of log Q_{1-t} f at x, where Q_s is
the heat semigroup, Q_s f(x) = E f(x + sqrt(s) Z). Both estimators replace
the two Gaussian expectations with averages over one shared batch of m
standard normal draws Z_j, writing x_j = x + sqrt(1-t) Z_j:

    gradient form   b ~ sum_j u_j g_j / sum_j u_j,  g_j = grad log f(x_j)
    Stein form      b ~ sum_j u_j Z_j / (sum_j u_j * sqrt(1-t))

where u_j = exp(log f(x_j) - max_k log f(x_k)) are softmax-style weights.
Weights depend only on differences of log f, so a constant scale on f
drops out exactly, not merely up to rounding; this is why TargetSpec keeps
its ``log_scale`` out of the ``log_f`` callable. Numerator and denominator
are accumulated in one einsum over an extended matrix whose last channel
is all ones, so both reductions share one summation order and ratios that
are constant across the batch come out exact.

For Gaussian mixtures the semigroup acts in closed form: smoothing only
rescales each component's correction term, so the drift is the
softmax-weighted average of the component means and needs no sampling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from . import rng as _rng
from .errors import DriftSingularityError, UnsupportedTargetError
from .targets import _check_finite, _coerce

DRIFT_MODES = ("exact", "mc-grad", "mc-stein")


def default_drift_mode(target):
    """Mode the sampler picks for "auto": the closed form when there is one."""
    if target.mixture is not None:
        return "exact"
    return "mc-grad" if target.grad_log_f is not None else "mc-stein"


@dataclass(frozen=True)
class DriftEvaluator:
    """Bundle of target, estimator choice, batch size, and root seed.

    The seed anchors the drift-role streams: the batch used for
    (step_index, particle_index) is row particle_index of the block drawn
    from the (seed, drift, step_index) substream, which is exactly the
    batch a sampler run with the same seed would use there.
    """

    target: object
    mode: str
    m: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.mode not in DRIFT_MODES:
            raise ValueError(f"mode must be one of {DRIFT_MODES}, got {self.mode!r}")
        if self.mode == "exact":
            if self.target.mixture is None:
                raise UnsupportedTargetError(
                    f"closed-form drift needs a mixture target, {self.target.name!r} has none"
                )
        else:
            if self.m is None or int(self.m) < 1:
                raise ValueError(f"Monte-Carlo modes need m >= 1, got {self.m!r}")
            if self.mode == "mc-grad" and self.target.grad_log_f is None:
                raise UnsupportedTargetError(
                    f"gradient-form estimator needs grad log f, {self.target.name!r} has none"
                )
        _rng.check_seed(self.seed)


def _check_t(t, *, allow_one=True):
    t = float(t)
    if not (math.isfinite(t) and 0.0 <= t <= 1.0):
        raise ValueError(f"t must lie in [0, 1], got {t!r}")
    if not allow_one and t == 1.0:
        raise ValueError("t = 1 is rejected: the Stein form divides by sqrt(1 - t)")
    return t


def heat_semigroup_mc(target, x, t, m, seed):
    """Monte-Carlo value of Q_t f(x), the heat-semigroup average.

    Args:
        target: TargetSpec; the declared scale shift is included, since
            this is a value of f itself, not a ratio.
        x: single evaluation point.
        t: smoothing time in [0, 1]. At t = 0 the value is exactly f(x).
        m: number of Gaussian probes, at least 1.
        seed: root seed; draws come from the semigroup role stream.
    """
    t = _check_t(t)
    m = int(m)
    if m < 1:
        raise ValueError(f"m must be at least 1, got {m}")
    pts, single = _coerce(x, target.dim)
    if not single:
        raise ValueError("heat_semigroup_mc evaluates one point at a time")
    _check_finite(pts)
    z = _rng.substream(seed, _rng.ROLE_SEMIGROUP, 0).standard_normal((m, target.dim))
    probe = pts + math.sqrt(t) * z
    lf = target.log_f(probe) + target.log_scale
    return float(np.exp(logsumexp(lf) - math.log(m)))


def drift_exact(target, x, t):
    """Closed-form drift for mixture targets.

    At time t the drift is the average of the component means under
    softmax weights log w_i + m_i . x - t |m_i|^2 / 2. Valid on all of
    [0, 1]; at t = 1 it coincides with grad log f.
    """
    if target.mixture is None:
        raise UnsupportedTargetError(
            f"closed-form drift needs a mixture target, {target.name!r} has none"
        )
    t = _check_t(t)
    pts, single = _coerce(x, target.dim)
    _check_finite(pts)
    logits = target.mixture.component_logits(pts, t)
    z = logits - logits.max(axis=1, keepdims=True)
    w = np.exp(z)
    b = (w @ target.mixture.means) / w.sum(axis=1, keepdims=True)
    return np.asarray(b[0]) if single else b


def _mc_drift_core(target, points, t, z, mode, *, step_index, particle_offset):
    """Shared-batch estimate for a batch of points.

    Args:
        points: (n, p) evaluation points.
        z: (n, m, p) standard normal batch, one row of m draws per point.
        mode: "mc-grad" or "mc-stein".
        step_index, particle_offset: stream coordinates for diagnostics;
            row i of ``points`` is particle ``particle_offset + i``.

    Returns:
        (n, p) drift estimates.
    """
    n, m, p = z.shape
    root = math.sqrt(1.0 - t)
    probes = (points[:, None, :] + root * z).reshape(n * m, p)
    lf = target.log_f(probes).reshape(n, m)
    if np.isnan(lf).any():
        raise ValueError("target log density returned NaN at a drift probe")
    mx = lf.max(axis=1)
    dead = np.isneginf(mx)
    if dead.any():
        i = int(np.argmax(dead))
        raise DriftSingularityError(
            f"all {m} drift probes fell where f = 0 "
            f"(particle {particle_offset + i}, step {step_index}, t = {t})",
            x=points[i].copy(),
            t=t,
            step_index=step_index,
            particle_index=particle_offset + i,
        )
    u = np.exp(lf - mx[:, None])
    if mode == "mc-grad":
        vec = target.grad_log_f(probes)
        if np.isneginf(lf).any():
            vec = np.where(np.isneginf(lf).reshape(n * m, 1), 0.0, vec)
        vec = vec.reshape(n, m, p)
    else:
        vec = z
    # One reduction for numerator and denominator: the ones channel makes
    # both sums share a summation tree, so constant ratios are exact.
    ext = np.concatenate([vec, np.ones((n, m, 1))], axis=2)
    acc = np.einsum("nm,nmq->nq", u, ext)
    den = acc[:, p]
    b = acc[:, :p] / den[:, None]
    if mode == "mc-stein":
        b = b / root
    return b


def _drift_mc(ev, x, t, step_index, particle_index, mode):
    if ev.m is None or int(ev.m) < 1:
        raise ValueError("Monte-Carlo drift needs the evaluator's m set")
    if mode == "mc-grad" and ev.target.grad_log_f is None:
        raise UnsupportedTargetError(
            f"gradient-form estimator needs grad log f, {ev.target.name!r} has none"
        )
    pts, single = _coerce(x, ev.target.dim)
    if not single:
        raise ValueError("direct drift calls evaluate one point at a time")
    _check_finite(pts)
    step_index = int(step_index)
    particle_index = int(particle_index)
    if step_index < 0 or particle_index < 0:
        raise ValueError("step_index and particle_index must be non-negative")
    m = int(ev.m)
    z = _rng.normal_row(
        ev.seed, _rng.ROLE_DRIFT, step_index, particle_index, (m, ev.target.dim)
    )
    b = _mc_drift_core(
        ev.target,
        pts,
        t,
        z[None, :, :],
        mode,
        step_index=step_index,
        particle_offset=particle_index,
    )
    return np.asarray(b[0])


def drift_mc_grad(ev, x, t, step_index=0, particle_index=0):
    """Gradient-form drift estimate at one point.

    The Z batch is row ``particle_index`` of the (seed, drift, step_index)
    block, so a direct call reproduces exactly what a sampler run with the
    same seed uses for that particle at that step. Valid for t in [0, 1].
    """
    t = _check_t(t)
    return _drift_mc(ev, x, t, step_index, particle_index, "mc-grad")


def drift_mc_stein(ev, x, t, step_index=0, particle_index=0):
    """Stein-form drift estimate at one point, for t in [0, 1).

    Uses the same stream derivation and the same shared batch layout as
    the gradient form; only the integrand differs.
    """
    t = _check_t(t, allow_one=False)
    return _drift_mc(ev, x, t, step_index, particle_index, "mc-stein")


@dataclass(frozen=True)
class ProbeGrid:
    """Where to probe the drift when estimating growth constants.

    For dim <= 2 the points are a tensor grid on [lo, hi]^dim; in higher
    dimension they are random directions scaled by a radius ladder, since
    a tensor grid is no longer affordable.
    """

    lo: float = -5.0
    hi: float = 5.0
    points_per_axis: int = 25
    t_values: tuple = (0.0, 0.25, 0.5, 0.75, 0.99)
    directions: int = 16
    radial_points: int = 9

    def __post_init__(self):
        if not (self.lo < self.hi):
            raise ValueError("need lo < hi")
        if self.points_per_axis < 2 or self.directions < 1 or self.radial_points < 2:
            raise ValueError("grid resolution parameters are too small")
        for t in self.t_values:
            _check_t(t, allow_one=False)


def probe_points(grid, dim, seed=0):
    """Concrete probe locations for a ProbeGrid in the given dimension."""
    if dim <= 2:
        axis = np.linspace(grid.lo, grid.hi, grid.points_per_axis)
        if dim == 1:
            return axis.reshape(-1, 1)
        xs, ys = np.meshgrid(axis, axis, indexing="ij")
        return np.column_stack([xs.ravel(), ys.ravel()])
    gen = _rng.substream(seed, _rng.ROLE_PROBE, 0)
    dirs = gen.standard_normal((grid.directions, dim))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    radius = max(abs(grid.lo), abs(grid.hi))
    radii = np.linspace(0.0, radius, grid.radial_points)
    return (radii[:, None, None] * dirs[None, :, :]).reshape(-1, dim)


@dataclass(frozen=True)
class RegularityEstimate:
    """Empirical growth constants of the drift over a probe grid.

    c0_hat bounds |b|^2 / (1 + |x|^2) (linear growth), c1_hat the
    difference quotient |b(x,t) - b(y,s)| / (|x-y| + sqrt|t-s|) (joint
    Lipschitz modulus), and b_sup_hat is the grid supremum of |b|.
    """

    c0_hat: float
    c1_hat: float
    b_sup_hat: float
    n_points: int

    def describe(self):
        return {
            "c0_hat": self.c0_hat,
            "c1_hat": self.c1_hat,
            "b_sup_hat": self.b_sup_hat,
            "n_points": self.n_points,
        }


def estimate_regularity(target, grid=None, seed=0, evaluator=None):
    """Probe the drift-growth conditions numerically.

    Uses the closed-form drift for mixture targets; otherwise an evaluator
    must be supplied and its Monte-Carlo estimator is probed instead (the
    estimate then inherits that estimator's noise).

    Args:
        target: TargetSpec to probe.
        grid: ProbeGrid, defaulting to the standard [-5, 5] box.
        seed: seed for random directions in high dimension.
        evaluator: DriftEvaluator for non-mixture targets.

    Returns:
        RegularityEstimate with c0_hat, c1_hat, b_sup_hat.
    """
    if grid is None:
        grid = ProbeGrid()
    pts = probe_points(grid, target.dim, seed)
    ts = [float(t) for t in grid.t_values]
    n = pts.shape[0]

    drifts = []
    if target.mixture is not None:
        for t in ts:
            drifts.append(drift_exact(target, pts, t))
    else:
        if evaluator is None:
            raise UnsupportedTargetError(
                "non-mixture targets need a DriftEvaluator to probe the drift"
            )
        mode = evaluator.mode
        if mode == "exact" or (mode == "mc-grad" and target.grad_log_f is None):
            mode = default_drift_mode(target)
        for k, t in enumerate(ts):
            z = _rng.normal_rows(
                evaluator.seed, _rng.ROLE_DRIFT, k, n, (int(evaluator.m), target.dim)
            )
            drifts.append(
                _mc_drift_core(target, pts, t, z, mode, step_index=k, particle_offset=0)
            )

    all_b = np.concatenate(drifts, axis=0)
    all_x = np.tile(pts, (len(ts), 1))
    all_t = np.repeat(np.asarray(ts), n)

    norms_sq = np.sum(all_b * all_b, axis=1)
    c0 = float(np.max(norms_sq / (1.0 + np.sum(all_x * all_x, axis=1))))
    b_sup = float(np.sqrt(np.max(norms_sq)))

    # Difference quotients are quadratic in the number of probes, so cap
    # the pair set with an evenly spaced subsample on big grids.
    total = all_b.shape[0]
    if total > 512:
        idx = np.unique(np.linspace(0, total - 1, 512).astype(int))
        sel_b, sel_x, sel_t = all_b[idx], all_x[idx], all_t[idx]
    else:
        sel_b, sel_x, sel_t = all_b, all_x, all_t
    diff_b = np.linalg.norm(sel_b[:, None, :] - sel_b[None, :, :], axis=2)
    diff_x = np.linalg.norm(sel_x[:, None, :] - sel_x[None, :, :], axis=2)
    diff_t = np.sqrt(np.abs(sel_t[:, None] - sel_t[None, :]))
    denom = diff_x + diff_t
    mask = denom > 0.0
    c1 = float(np.max(diff_b[mask] / denom[mask])) if mask.any() else 0.0

    return RegularityEstimate(c0_hat=c0, c1_hat=c1, b_sup_hat=b_sup, n_points=n * len(ts))
