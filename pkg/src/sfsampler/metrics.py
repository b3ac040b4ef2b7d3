"""Sample-quality metrics: Wasserstein-2 variants, moments, and rate fits.

All W2 routines compare equal-size empirical measures. In one dimension
the optimal coupling is the order statistics, which is exact and cheap;
``sliced_w2`` averages that over random directions as a scalable proxy in
higher dimension (it lower-bounds the true W2); ``exact_w2_assignment``
solves the matching problem outright and is guarded to small batches.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from . import rng as _rng
from .errors import UnsupportedTargetError
from .targets import sample_ground_truth

ASSIGNMENT_MAX_POINTS = 512


def _sample_1d(x):
    x = np.asarray(x, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("samples must be non-empty")
    if not np.isfinite(x).all():
        raise ValueError("samples must be finite")
    return x


def _sample_2d(x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("expected a non-empty (n, p) sample array")
    if not np.isfinite(x).all():
        raise ValueError("samples must be finite")
    return x


def wasserstein2_1d(x, y):
    """Exact W2 between two equal-size 1-D samples via order statistics."""
    x = _sample_1d(x)
    y = _sample_1d(y)
    if x.size != y.size:
        raise ValueError(f"sample sizes must match, got {x.size} and {y.size}")
    d = np.sort(x) - np.sort(y)
    return float(np.sqrt(np.mean(d * d)))


@dataclass(frozen=True)
class SlicedW2:
    """Mean and spread of 1-D W2 over random unit projections."""

    value: float
    se: float
    n_projections: int
    per_projection: np.ndarray = field(repr=False)

    def describe(self):
        return {"value": self.value, "se": self.se, "n_projections": self.n_projections}


def sliced_w2(x, y, n_projections=64, seed=0):
    """Sliced W2: average the 1-D metric over random directions.

    Directions are uniform on the sphere with the largest-magnitude
    coordinate made positive; the flip changes nothing in distribution but
    makes the one-dimensional case collapse to ``wasserstein2_1d`` exactly.

    Args:
        x, y: (n, p) sample arrays of equal size.
        n_projections: number of directions.
        seed: seed for the projection stream.

    Returns:
        SlicedW2 with the mean, its standard error over directions, and
        the per-direction values.
    """
    x = _sample_2d(x)
    y = _sample_2d(y)
    if x.shape != y.shape:
        raise ValueError(f"sample shapes must match, got {x.shape} and {y.shape}")
    n_projections = int(n_projections)
    if n_projections < 1:
        raise ValueError("need at least one projection")
    p = x.shape[1]
    gen = _rng.substream(seed, _rng.ROLE_PROJECTION, 0)
    dirs = gen.standard_normal((n_projections, p))
    norms = np.linalg.norm(dirs, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    dirs /= norms
    dirs[np.all(dirs == 0.0, axis=1), 0] = 1.0
    lead = np.take_along_axis(dirs, np.argmax(np.abs(dirs), axis=1)[:, None], axis=1).ravel()
    dirs[lead < 0] *= -1.0

    vals = np.array([wasserstein2_1d(x @ u, y @ u) for u in dirs])
    if np.all(vals == vals[0]):
        value = float(vals[0])
    else:
        value = float(np.mean(vals))
    se = float(np.std(vals, ddof=1) / math.sqrt(n_projections)) if n_projections > 1 else float("nan")
    return SlicedW2(value=value, se=se, n_projections=n_projections, per_projection=vals)


def exact_w2_assignment(x, y):
    """W2 from the optimal matching of two equal-size batches.

    The cost matrix is squared Euclidean distance and the assignment is
    solved exactly, so this is the true W2 between the empirical measures.
    Guarded to n <= 512 because the solver is cubic in n.
    """
    x = _sample_2d(x)
    y = _sample_2d(y)
    if x.shape != y.shape:
        raise ValueError(f"sample shapes must match, got {x.shape} and {y.shape}")
    n = x.shape[0]
    if n > ASSIGNMENT_MAX_POINTS:
        raise ValueError(
            f"exact assignment is limited to {ASSIGNMENT_MAX_POINTS} points, got {n}; "
            "use sliced_w2 for larger batches"
        )
    cost = cdist(x, y, "sqeuclidean")
    rows, cols = linear_sum_assignment(cost)
    return float(np.sqrt(cost[rows, cols].mean()))


@dataclass(frozen=True)
class MomentReport:
    """First and second moments of a batch against target values."""

    n: int
    sample_mean: np.ndarray
    sample_cov: np.ndarray | None
    target_mean: np.ndarray
    target_cov: np.ndarray
    mean_se: np.ndarray | None
    z_mean: np.ndarray | None
    flags: tuple

    @property
    def max_abs_z(self):
        if self.z_mean is None:
            return float("nan")
        return float(np.max(np.abs(self.z_mean)))

    def describe(self):
        return {
            "flags": list(self.flags),
            "max_abs_z": self.max_abs_z,
            "mean_se": None if self.mean_se is None else self.mean_se.tolist(),
            "n": self.n,
            "sample_cov": None if self.sample_cov is None else self.sample_cov.tolist(),
            "sample_mean": self.sample_mean.tolist(),
            "target_cov": self.target_cov.tolist(),
            "target_mean": self.target_mean.tolist(),
            "z_mean": None if self.z_mean is None else self.z_mean.tolist(),
        }


def moment_report(samples, target, seed=0):
    """Compare a batch's mean and covariance to the target's.

    Target moments come from the analytic values when the target carries
    them, otherwise from a large ground-truth draw (flagged as estimated).
    A single-point batch has no dispersion, so its standard errors and
    z-scores are reported as undefined and flagged.
    """
    x = _sample_2d(samples)
    n, p = x.shape
    if x.shape[1] != target.dim:
        raise ValueError(f"batch dimension {p} does not match target dimension {target.dim}")

    flags = []
    if target.target_mean is not None and target.target_cov is not None:
        t_mean = np.asarray(target.target_mean, dtype=float)
        t_cov = np.asarray(target.target_cov, dtype=float)
    elif target.sampler is not None:
        ref = sample_ground_truth(target, 100_000, seed).samples
        t_mean = ref.mean(axis=0)
        t_cov = np.cov(ref, rowvar=False).reshape(p, p)
        flags.append("target-moments-estimated")
    else:
        raise UnsupportedTargetError(
            f"target {target.name!r} has neither analytic moments nor a sampler"
        )

    sample_mean = x.mean(axis=0)
    if n >= 2:
        sample_cov = np.cov(x, rowvar=False).reshape(p, p)
        mean_se = np.sqrt(np.diag(sample_cov) / n)
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.where(mean_se > 0, (sample_mean - t_mean) / mean_se, np.inf)
    else:
        sample_cov = None
        mean_se = None
        z = None
        flags.append("single-point-batch: dispersion undefined")

    return MomentReport(
        n=n,
        sample_mean=sample_mean,
        sample_cov=sample_cov,
        target_mean=t_mean,
        target_cov=t_cov,
        mean_se=mean_se,
        z_mean=z,
        flags=tuple(flags),
    )


@dataclass(frozen=True)
class RateFit:
    """Least-squares slope of log(y) against log(x)."""

    slope: float
    intercept: float
    r_squared: float
    n_points: int

    def describe(self):
        return {
            "intercept": self.intercept,
            "n_points": self.n_points,
            "r_squared": self.r_squared,
            "slope": self.slope,
        }


def fit_rate(xs, ys):
    """Fit a power law y = c x^slope through positive points.

    Args:
        xs, ys: sequences of at least three positive finite values.

    Returns:
        RateFit with slope, intercept (log c), and R squared. A perfectly
        flat sequence fits slope 0 with R squared defined as 1.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise ValueError("xs and ys must be 1-D arrays of equal length")
    if xs.size < 3:
        raise ValueError(f"rate fits need at least 3 points, got {xs.size}")
    if not (np.isfinite(xs).all() and np.isfinite(ys).all()):
        raise ValueError("rate fits need finite values")
    if (xs <= 0).any() or (ys <= 0).any():
        raise ValueError("rate fits need strictly positive values")
    lx = np.log(xs)
    ly = np.log(ys)
    slope, intercept = np.polyfit(lx, ly, 1)
    pred = slope * lx + intercept
    ss_res = float(np.sum((ly - pred) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    if ss_tot > 0.0:
        r2 = 1.0 - ss_res / ss_tot
    else:
        r2 = 1.0 if ss_res <= 1e-24 else 0.0
    return RateFit(slope=float(slope), intercept=float(intercept), r_squared=r2, n_points=xs.size)


def w2_noise_floor(target, n, seed, pairs=3, metric="w2_1d", n_projections=64):
    """Typical W2 between two independent same-size ground-truth batches.

    Thresholds for "close to the target" are set as multiples of this
    floor, since an ideal sampler cannot beat it in expectation.

    Args:
        target: TargetSpec with a ground-truth sampler.
        n: batch size the floor should refer to.
        seed: root seed for the batch draws.
        pairs: number of independent batch pairs averaged.
        metric: "w2_1d" (one-dimensional targets) or "sliced".
        n_projections: directions for the sliced metric.
    """
    pairs = int(pairs)
    if pairs < 1:
        raise ValueError("need at least one pair")
    seeds = _rng.child_seeds(seed, 0, 2 * pairs)
    vals = []
    for i in range(pairs):
        a = sample_ground_truth(target, n, seeds[2 * i]).samples
        b = sample_ground_truth(target, n, seeds[2 * i + 1]).samples
        if metric == "w2_1d":
            if target.dim != 1:
                raise ValueError("w2_1d floor needs a one-dimensional target")
            vals.append(wasserstein2_1d(a, b))
        elif metric == "sliced":
            vals.append(sliced_w2(a, b, n_projections=n_projections, seed=seeds[2 * i]).value)
        else:
            raise ValueError(f"unknown metric {metric!r}")
    return float(np.mean(vals))


@dataclass
class MetricReport:
    """Named bundle of metric values that serializes to JSON."""

    name: str
    entries: dict
    notes: list = field(default_factory=list)

    def to_json(self, path):
        payload = {"entries": self.entries, "name": self.name, "notes": self.notes}
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return path


def rate_table_csv(path, header, rows):
    """Write a rate table with stable float formatting (for diffs)."""
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            cells = []
            for v in row:
                if isinstance(v, float):
                    cells.append("%.17g" % v)
                else:
                    cells.append(str(v))
            fh.write(",".join(cells) + "\n")
    return path
