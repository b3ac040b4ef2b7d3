"""Target laws expressed relative to the standard Gaussian.

A target is the distribution the diffusion should reach at time one. The
library works throughout with the ratio f = dmu/dG against the base
measure G = N(0, I_p), always in log space. Potential-form targets carry f
only up to a positive constant; that is fine for drift evaluation, which
is scale free, and is tracked by the ``relative`` flag.

Convention for vanishing densities: where f is zero, ``log_f`` returns
-inf and ``grad_log_f`` must return finite placeholder values (downstream
code multiplies them by zero weight and must never see NaN from 0 * inf).
"""

from __future__ import annotations

import dataclasses
import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import logsumexp

from . import rng as _rng
from .batches import SampleBatch, config_digest
from .errors import UnknownTargetError, UnsupportedTargetError

_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def _coerce(x, dim):
    """Normalize a point or batch of points to (n, dim); flag single points.

    Accepts (dim,) for one point, (n, dim) for a batch, and for
    one-dimensional targets also scalars and length-n vectors of scalars.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        if dim != 1:
            raise ValueError(f"scalar input for a {dim}-dimensional target")
        return x.reshape(1, 1), True
    if x.ndim == 1:
        if x.shape[0] == dim:
            return x.reshape(1, dim), True
        if dim == 1:
            return x.reshape(-1, 1), False
        raise ValueError(f"expected a point of dimension {dim}, got shape {x.shape}")
    if x.ndim == 2:
        if x.shape[1] != dim:
            raise ValueError(f"expected batch shape (n, {dim}), got {x.shape}")
        return x, False
    raise ValueError(f"input must be at most 2-dimensional, got shape {x.shape}")


def _check_finite(x):
    if not np.isfinite(x).all():
        raise ValueError("evaluation points must be finite")


@dataclass(frozen=True)
class TargetRegularity:
    """Declared regularity constants for the density ratio f.

    Attributes:
        gamma: Lipschitz bound for f and for its gradient.
        xi: positive lower bound, f >= xi.
        zeta: optional upper bound, f <= zeta.
    """

    gamma: float
    xi: float
    zeta: float | None = None

    def __post_init__(self):
        for name in ("gamma", "xi"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be a positive finite number, got {v!r}")
        if self.zeta is not None:
            if not (math.isfinite(self.zeta) and self.zeta > 0):
                raise ValueError(f"zeta must be a positive finite number, got {self.zeta!r}")

    def describe(self):
        out = {"gamma": float(self.gamma), "xi": float(self.xi)}
        if self.zeta is not None:
            out["zeta"] = float(self.zeta)
        return out


class GaussianMixture:
    """Finite mixture of unit-covariance Gaussians, sum_i w_i N(m_i, I_p).

    Relative to the base Gaussian the density ratio has the closed form
    f(x) = sum_i w_i exp(m_i . x - |m_i|^2 / 2), which keeps the heat
    semigroup and therefore the drift analytic: smoothing by Q_s only
    rescales the per-component correction term.
    """

    def __init__(self, weights, means):
        weights = np.asarray(weights, dtype=float)
        means = np.asarray(means, dtype=float)
        if means.ndim == 1:
            means = means.reshape(-1, 1)
        if weights.ndim != 1 or means.ndim != 2 or weights.shape[0] != means.shape[0]:
            raise ValueError("weights must be (k,) and means (k, p) with matching k")
        if weights.shape[0] == 0:
            raise ValueError("a mixture needs at least one component")
        if not np.isfinite(weights).all() or not np.isfinite(means).all():
            raise ValueError("mixture parameters must be finite")
        if (weights <= 0).any():
            raise ValueError("mixture weights must be positive")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise ValueError(f"mixture weights must sum to 1 within 1e-12, got {weights.sum()!r}")
        self.weights = weights
        self.means = means
        self._log_w = np.log(weights)
        self._half_sq = 0.5 * np.sum(means * means, axis=1)

    @property
    def dim(self):
        return self.means.shape[1]

    @property
    def n_components(self):
        return self.means.shape[0]

    def component_logits(self, x, t=1.0):
        """log w_i + m_i . x - t |m_i|^2 / 2 for a batch x of shape (n, p)."""
        return self._log_w[None, :] + x @ self.means.T - t * self._half_sq[None, :]

    def log_ratio(self, x):
        return logsumexp(self.component_logits(x, 1.0), axis=1)

    def grad_log_ratio(self, x):
        z = self.component_logits(x, 1.0)
        z = z - z.max(axis=1, keepdims=True)
        w = np.exp(z)
        w /= w.sum(axis=1, keepdims=True)
        return w @ self.means

    def mean(self):
        return self.weights @ self.means

    def cov(self):
        mu = self.mean()
        second = np.eye(self.dim) + (self.means.T * self.weights) @ self.means
        return second - np.outer(mu, mu)

    def sample(self, n, gen):
        comps = gen.choice(self.n_components, size=n, p=self.weights)
        return self.means[comps] + gen.standard_normal((n, self.dim))


@dataclass(frozen=True, eq=False)
class TargetSpec:
    """One sampling target: log density ratio, gradient, and metadata.

    ``log_f`` and ``grad_log_f`` are batch callables on (n, dim) arrays and
    exclude ``log_scale``. The stored scale shifts density values but
    provably cancels in every drift ratio, so keeping it out of the
    callables is what makes scale invariance exact at the bit level rather
    than up to rounding.

    Attributes:
        name: short human-readable label.
        dim: dimension p of the state space.
        log_f: batch callable, (n, dim) -> (n,), without log_scale.
        grad_log_f: batch callable, (n, dim) -> (n, dim), or None.
        relative: True when f is known only up to a positive constant.
        log_scale: declared log of the density scale factor.
        mixture: closed-form mixture structure when available.
        regularity: declared (gamma, xi, zeta) constants, or None.
        params: JSON-serializable description used for digests and rebuilds.
        sampler: ground-truth sampler (n, Generator) -> (n, dim), or None.
        target_mean: analytic mean, when known.
        target_cov: analytic covariance, when known.
    """

    name: str
    dim: int
    log_f: Callable
    grad_log_f: Callable | None = None
    relative: bool = False
    log_scale: float = 0.0
    mixture: GaussianMixture | None = None
    regularity: TargetRegularity | None = None
    params: dict = field(default_factory=dict)
    sampler: Callable | None = None
    target_mean: np.ndarray | None = None
    target_cov: np.ndarray | None = None

    def __post_init__(self):
        if not (isinstance(self.dim, int) and self.dim >= 1):
            raise ValueError(f"dim must be a positive integer, got {self.dim!r}")
        if not math.isfinite(self.log_scale):
            raise ValueError("log_scale must be finite")


def describe(target):
    """JSON-serializable description of a target, stable across runs."""
    return {
        "name": target.name,
        "dim": target.dim,
        "relative": bool(target.relative),
        "log_scale": float(target.log_scale),
        "params": target.params,
        "regularity": target.regularity.describe() if target.regularity else None,
    }


def eval_log_f(target, x):
    """Log density ratio log f(x), including the declared scale shift.

    For relative (potential-form) targets the value is meaningful only up
    to one additive constant shared by all x; check ``target.relative``
    before treating it as absolute. Returns -inf where f vanishes.
    """
    pts, single = _coerce(x, target.dim)
    _check_finite(pts)
    out = target.log_f(pts) + target.log_scale
    return float(out[0]) if single else out


def eval_grad_log_f(target, x):
    """Gradient of log f at x. Scale shifts do not affect it."""
    if target.grad_log_f is None:
        raise UnsupportedTargetError(f"target {target.name!r} has no gradient")
    pts, single = _coerce(x, target.dim)
    _check_finite(pts)
    out = target.grad_log_f(pts)
    return np.asarray(out[0]) if single else out


def sample_ground_truth(target, n, seed):
    """Draw n reference points from the target law itself.

    Args:
        target: a TargetSpec with an attached ground-truth sampler.
        n: number of points, at least 1.
        seed: root seed; the draw uses the ground-truth role stream.

    Returns:
        SampleBatch whose digest covers the target description, n, seed,
        and stream policy.
    """
    if target.sampler is None:
        raise UnsupportedTargetError(f"target {target.name!r} has no ground-truth sampler")
    n = int(n)
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    seed = _rng.check_seed(seed)
    gen = _rng.substream(seed, _rng.ROLE_GROUND_TRUTH, 0)
    start = time.perf_counter()
    samples = np.asarray(target.sampler(n, gen), dtype=float).reshape(n, target.dim)
    config = {
        "kind": "ground-truth",
        "n": n,
        "seed": seed,
        "stream_policy": _rng.STREAM_POLICY,
        "target": describe(target),
    }
    return SampleBatch(
        samples=samples,
        config=config,
        config_digest=config_digest(config),
        seed=seed,
        wallclock=time.perf_counter() - start,
    )


def regularize(target, eps):
    """Mix a Gaussian floor into the target: f_eps = (1 - eps) f + eps.

    This keeps the drift denominator at least eps everywhere, which is what
    the schedule rules buy for compactly supported targets. Mixture targets
    stay mixtures (the floor is one more component with mean zero), so the
    closed-form drift survives regularization.

    Args:
        target: an absolute target (relative ratios cannot be mixed with a
            known constant and are rejected).
        eps: mixing weight in the open interval (0, 1).

    Returns:
        A new TargetSpec for the law (1 - eps) mu + eps G.
    """
    if not (isinstance(eps, (int, float)) and math.isfinite(eps) and 0.0 < eps < 1.0):
        raise ValueError(f"eps must lie strictly inside (0, 1), got {eps!r}")
    if target.relative:
        raise UnsupportedTargetError(
            "cannot regularize a relative density ratio: f_eps = (1-eps) f + eps "
            "needs f on an absolute scale"
        )
    eps = float(eps)
    name = f"{target.name}+eps"
    params = {"kind": "regularized", "eps": eps, "base": target.params}

    regularity = None
    if target.regularity is not None:
        base = target.regularity
        regularity = TargetRegularity(
            gamma=(1.0 - eps) * base.gamma,
            xi=(1.0 - eps) * base.xi + eps,
            zeta=(1.0 - eps) * base.zeta + eps if base.zeta is not None else None,
        )

    if target.mixture is not None:
        if target.log_scale != 0.0:
            raise ValueError("a mixture target with a nonzero scale shift is not a probability law")
        mix = target.mixture
        weights = np.append((1.0 - eps) * mix.weights, eps)
        means = np.vstack([mix.means, np.zeros((1, mix.dim))])
        return _mixture_spec(name, GaussianMixture(weights, means), params, regularity)

    # General absolute target: wrap the callables in log space. The scale
    # field must be folded in here because f_eps mixes absolute values.
    base_log_f = target.log_f
    base_grad = target.grad_log_f
    shift = target.log_scale
    log_keep = math.log1p(-eps)
    log_eps = math.log(eps)
    dim = target.dim

    def log_f(pts):
        lf = base_log_f(pts) + shift
        return np.logaddexp(log_keep + lf, log_eps)

    grad_log_f = None
    if base_grad is not None:

        def grad_log_f(pts):
            lf = base_log_f(pts) + shift
            lfe = np.logaddexp(log_keep + lf, log_eps)
            w = np.exp(log_keep + lf - lfe)
            return w[:, None] * base_grad(pts)

    sampler = None
    if target.sampler is not None:
        base_sampler = target.sampler

        def sampler(n, gen):
            keep = gen.random(n) < (1.0 - eps)
            out = gen.standard_normal((n, dim))
            n_keep = int(keep.sum())
            if n_keep:
                out[keep] = base_sampler(n_keep, gen)
            return out

    target_mean = None
    target_cov = None
    if target.target_mean is not None and target.target_cov is not None:
        mu = np.asarray(target.target_mean, dtype=float)
        second = np.asarray(target.target_cov, dtype=float) + np.outer(mu, mu)
        target_mean = (1.0 - eps) * mu
        second_eps = (1.0 - eps) * second + eps * np.eye(dim)
        target_cov = second_eps - np.outer(target_mean, target_mean)

    return TargetSpec(
        name=name,
        dim=dim,
        log_f=log_f,
        grad_log_f=grad_log_f,
        relative=False,
        mixture=None,
        regularity=regularity,
        params=params,
        sampler=sampler,
        target_mean=target_mean,
        target_cov=target_cov,
    )


def _mixture_spec(name, mix, params, regularity=None):
    return TargetSpec(
        name=name,
        dim=mix.dim,
        log_f=mix.log_ratio,
        grad_log_f=mix.grad_log_ratio,
        mixture=mix,
        regularity=regularity,
        params=params,
        sampler=mix.sample,
        target_mean=mix.mean(),
        target_cov=mix.cov(),
    )


def standard_gaussian(dim=1):
    """The base measure itself: f is identically one, the drift is zero."""
    dim = int(dim)
    mix = GaussianMixture(np.ones(1), np.zeros((1, dim)))
    return _mixture_spec("standard", mix, {"kind": "standard", "dim": dim})


def gaussian(mean, regularity=None):
    """Unit-covariance Gaussian N(mean, I); the drift is the constant mean."""
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    mix = GaussianMixture(np.ones(1), mean.reshape(1, -1))
    params = {"kind": "gaussian", "mean": [float(v) for v in mean]}
    return _mixture_spec("gaussian", mix, params, regularity)


def gaussian_mixture_target(weights, means, regularity=None, name="mixture"):
    """Mixture of unit-covariance Gaussians with the stated weights and means.

    Args:
        weights: positive weights summing to one within 1e-12.
        means: (k, p) component means; a flat array is read as k means in
            one dimension.
        regularity: optional declared TargetRegularity.
        name: label used in configs and reports.
    """
    mix = GaussianMixture(weights, means)
    params = {
        "kind": "mixture",
        "weights": [float(w) for w in mix.weights],
        "means": [[float(v) for v in row] for row in mix.means],
    }
    return _mixture_spec(name, mix, params, regularity)


def quartic_bump(radius=3.0, regularity=None):
    """Compactly supported target with density proportional to (1-(x/a)^2)^2.

    One dimensional, supported on [-a, a]. The ratio f against the base
    Gaussian is C^1 with compact support, so it violates the positive
    lower bound that unregularized runs rely on; this is the motivating
    case for the epsilon schedules. Mean 0, variance a^2 / 7.
    """
    a = float(radius)
    if not (math.isfinite(a) and a > 0):
        raise ValueError(f"radius must be positive and finite, got {radius!r}")
    log_norm = math.log(15.0 / (16.0 * a))

    def log_f(pts):
        x = pts[:, 0]
        u2 = (x / a) ** 2
        inside = 1.0 - u2
        with np.errstate(divide="ignore"):
            shape = 2.0 * np.log(np.maximum(inside, 0.0))
        return log_norm + shape + 0.5 * x * x + _HALF_LOG_2PI

    def grad_log_f(pts):
        x = pts[:, 0]
        gap = a * a - x * x
        out = np.zeros_like(pts)
        ok = gap > 0.0
        out[ok, 0] = -4.0 * x[ok] / gap[ok] + x[ok]
        return out

    def sampler(n, gen):
        out = np.empty(n)
        filled = 0
        while filled < n:
            need = n - filled
            props = gen.uniform(-a, a, size=need)
            accept = gen.random(need) < (1.0 - (props / a) ** 2) ** 2
            taken = props[accept]
            out[filled : filled + taken.size] = taken
            filled += taken.size
        return out.reshape(n, 1)

    return TargetSpec(
        name="bump",
        dim=1,
        log_f=log_f,
        grad_log_f=grad_log_f,
        regularity=regularity,
        params={"kind": "bump", "radius": a},
        sampler=sampler,
        target_mean=np.zeros(1),
        target_cov=np.array([[a * a / 7.0]]),
    )


def from_potential(potential, grad_potential, dim, name="potential", params=None, log_scale=0.0):
    """Target given by an energy V, with density proportional to exp(-V).

    The ratio f is exp(-V(x) + |x|^2 / 2) up to an unknown positive
    constant, so the result is marked relative. Drift evaluation is
    unaffected; regularization and absolute density values are not
    available.

    Args:
        potential: batch callable, (n, dim) -> (n,).
        grad_potential: batch callable, (n, dim) -> (n, dim), or None.
        dim: state dimension.
        name: label used in configs and reports.
        params: JSON-serializable description for digests.
        log_scale: declared log scale shift (see TargetSpec).
    """

    def log_f(pts):
        return -potential(pts) + 0.5 * np.sum(pts * pts, axis=1)

    grad_log_f = None
    if grad_potential is not None:

        def grad_log_f(pts):
            return -grad_potential(pts) + pts

    return TargetSpec(
        name=name,
        dim=int(dim),
        log_f=log_f,
        grad_log_f=grad_log_f,
        relative=True,
        log_scale=float(log_scale),
        params=params if params is not None else {"kind": "potential", "name": name},
    )


def gaussian_potential(mean, log_scale=0.0):
    """Potential form of N(mean, I): V(x) = |x - mean|^2 / 2.

    Same law as ``gaussian(mean)`` but carried as a relative ratio, which
    is the natural shape for scale-invariance checks.
    """
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    if not np.isfinite(mean).all():
        raise ValueError("mean must be finite")
    m = mean.copy()

    def potential(pts):
        d = pts - m[None, :]
        return 0.5 * np.sum(d * d, axis=1)

    def grad_potential(pts):
        return pts - m[None, :]

    params = {
        "kind": "gaussian-potential",
        "mean": [float(v) for v in m],
        "log_scale": float(log_scale),
    }
    return from_potential(
        potential,
        grad_potential,
        dim=m.shape[0],
        name="gaussian-potential",
        params=params,
        log_scale=log_scale,
    )


def build_target(options):
    """Build a target from a plain options dict (the config-file form).

    The dict must carry a "kind" key naming one of the registered target
    kinds; remaining keys are kind-specific. An optional "regularity" dict
    declares (gamma, xi, zeta).
    """
    if not isinstance(options, dict) or "kind" not in options:
        raise ValueError("target options must be a dict with a 'kind' key")
    opts = dict(options)
    kind = opts.pop("kind")
    reg = opts.pop("regularity", None)
    regularity = TargetRegularity(**reg) if isinstance(reg, dict) else reg

    if kind == "standard":
        dim = int(opts.pop("dim", 1))
        _reject_extra(kind, opts)
        target = standard_gaussian(dim)
        if regularity is not None:
            target = _with_regularity(target, regularity)
        return target
    if kind == "gaussian":
        mean = opts.pop("mean")
        _reject_extra(kind, opts)
        return gaussian(mean, regularity)
    if kind == "mixture":
        weights = opts.pop("weights")
        means = opts.pop("means")
        _reject_extra(kind, opts)
        return gaussian_mixture_target(weights, means, regularity)
    if kind == "bump":
        radius = float(opts.pop("radius", 3.0))
        _reject_extra(kind, opts)
        return quartic_bump(radius, regularity)
    if kind == "gaussian-potential":
        mean = opts.pop("mean")
        log_scale = float(opts.pop("log_scale", 0.0))
        _reject_extra(kind, opts)
        target = gaussian_potential(mean, log_scale)
        if regularity is not None:
            target = _with_regularity(target, regularity)
        return target
    raise UnknownTargetError(f"unknown target kind {kind!r}")


def _reject_extra(kind, opts):
    if opts:
        raise ValueError(f"unexpected options for target kind {kind!r}: {sorted(opts)}")


def _with_regularity(target, regularity):
    return dataclasses.replace(target, regularity=regularity)
