"""Wasserstein-2 estimators and convergence diagnostics for chain ensembles."""

import csv
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import least_squares, linear_sum_assignment
from scipy.spatial.distance import cdist

from .errors import ParameterError

logger = logging.getLogger(__name__)

EXACT_MAX_N = 2048
DEFAULT_PROJECTIONS = 128


@dataclass
class PointCloud:
    points: np.ndarray
    weights: Optional[np.ndarray] = None

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        if not np.all(np.isfinite(self.points)):
            raise ParameterError("point cloud has non-finite coordinates")
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            if np.any(w < 0) or not math.isclose(w.sum(), 1.0, rel_tol=1e-9):
                raise ParameterError("weights must be nonnegative and sum to 1")
            self.weights = w

    def __len__(self):
        return len(self.points)

    @property
    def dim(self):
        return self.points.shape[1]


def _points(cloud):
    if isinstance(cloud, PointCloud):
        if cloud.weights is not None and not np.allclose(cloud.weights, 1.0 / len(cloud)):
            raise ParameterError("only uniformly weighted clouds are supported")
        return cloud.points
    pts = np.asarray(cloud, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    return pts


def w2_exact(a, b, max_n=EXACT_MAX_N):
    """Exact empirical W2 between equal-size uniform clouds via optimal assignment."""
    a, b = _points(a), _points(b)
    if len(a) != len(b):
        raise ParameterError("w2_exact needs equal-size clouds; use w2_sliced")
    if len(a) > max_n:
        raise ParameterError(f"n={len(a)} exceeds the exact-solver cap {max_n}")
    if len(a) == 0:
        return 0.0
    # the optimal coupling ignores translations, so solve on centred clouds
    # (much faster for the assignment solver) and add the mean shift back
    ma, mb = a.mean(axis=0), b.mean(axis=0)
    cost = cdist(a - ma, b - mb, "sqeuclidean")
    rows, cols = linear_sum_assignment(cost)
    return math.sqrt(max(cost[rows, cols].mean() + float(np.sum((ma - mb) ** 2)), 0.0))


def _w2_1d_sq(x, y):
    """Squared W2 between two uniform 1-D empirical measures (quantile coupling)."""
    x, y = np.sort(x), np.sort(y)
    if len(x) == len(y):
        return float(np.mean((x - y) ** 2))
    # merge the two quantile step functions on their joint breakpoints
    qs = np.union1d(np.arange(1, len(x) + 1) / len(x), np.arange(1, len(y) + 1) / len(y))
    widths = np.diff(np.concatenate([[0.0], qs]))
    mids = qs - 0.5 * widths
    ix = np.minimum((mids * len(x)).astype(int), len(x) - 1)
    iy = np.minimum((mids * len(y)).astype(int), len(y) - 1)
    return float(np.sum(widths * (x[ix] - y[iy]) ** 2))


def w2_sliced(a, b, n_projections=DEFAULT_PROJECTIONS, seed=0, scaled=True):
    """Sliced W2: root of the mean squared 1-D W2 over random unit directions.

    A random unit direction captures on average ``1/d`` of a squared
    displacement, so by default the result is multiplied by ``sqrt(d)``; it is
    then unbiased over directions for translations and isotropic dilations of a
    cloud, where W2 is known in closed form.
    ``scaled=False`` returns the plain root-mean-square.
    """
    if n_projections < 1:
        raise ParameterError("n_projections must be >= 1")
    a, b = _points(a), _points(b)
    d = a.shape[1]
    rng = np.random.default_rng(seed)
    dirs = rng.standard_normal((n_projections, d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    pa, pb = a @ dirs.T, b @ dirs.T
    total = sum(_w2_1d_sq(pa[:, k], pb[:, k]) for k in range(n_projections))
    mean_sq = total / n_projections
    return math.sqrt(mean_sq * d if scaled else mean_sq)


def w2(a, b, estimator="auto", n_projections=DEFAULT_PROJECTIONS, seed=0):
    """Dispatch to the exact solver when possible; returns ``(value, estimator_used)``."""
    a, b = _points(a), _points(b)
    if estimator == "auto":
        estimator = "exact" if len(a) == len(b) and len(a) <= EXACT_MAX_N else "sliced"
    if estimator == "exact":
        return w2_exact(a, b), "exact"
    if estimator == "sliced":
        return w2_sliced(a, b, n_projections, seed), "sliced"
    raise ParameterError(f"unknown estimator {estimator!r}")


def self_distance_floor(reference, fresh_references, estimator="auto", seed=0):
    """W2 between the reference cloud and independent redraws of it.

    Returns the mean and the individual values; any mixing curve against
    ``reference`` cannot go meaningfully below this level.
    """
    vals = [w2(reference, f, estimator, seed=seed + i)[0] for i, f in enumerate(fresh_references)]
    return float(np.mean(vals)), vals


@dataclass
class DecayFit:
    rate: float
    amplitude: float
    floor: float
    residual: float
    converged: bool = True

    def __call__(self, t):
        return self.amplitude * np.exp(-self.rate * np.asarray(t)) + self.floor


def _series(series):
    arr = np.asarray(series, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ParameterError("series must be a sequence of (t, w) pairs")
    return arr[:, 0], arr[:, 1]


def decay_fit(series):
    """Least-squares fit of ``amplitude * exp(-rate t) + floor`` with ``rate, floor >= 0``."""
    t, w = _series(series)
    if len(t) < 4:
        raise ParameterError("decay_fit needs at least 4 points")
    if np.any(w <= 0):
        raise ParameterError("decay_fit needs positive values")
    floor0 = float(w.min())
    excess = w - floor0
    pos = excess > 0
    if pos.sum() >= 2:
        slope, intercept = np.polyfit(t[pos], np.log(excess[pos]), 1)
        rate0, amp0 = max(-slope, 0.0), float(np.exp(intercept))
    else:
        rate0, amp0 = 0.0, 0.0
    t0 = t[0]

    def resid(p):
        amp, rate, floor = p
        return amp * np.exp(-rate * (t - t0)) + floor - w

    try:
        sol = least_squares(
            resid,
            x0=[amp0 * math.exp(-rate0 * t0), rate0, floor0],
            bounds=([-np.inf, 0.0, 0.0], [np.inf, np.inf, np.inf]),
            xtol=1e-15,
            ftol=1e-15,
            gtol=1e-15,
            max_nfev=10000,
        )
    except (ValueError, np.linalg.LinAlgError):
        logger.warning("decay fit failed")
        return DecayFit(rate0, amp0, floor0, math.inf, converged=False)
    amp, rate, floor = sol.x
    if not sol.success:
        return DecayFit(rate, amp, floor, math.inf, converged=False)
    amp_at_zero = amp * math.exp(rate * t0) if rate * t0 < 700 else math.inf
    residual = float(np.sqrt(np.mean(sol.fun**2)))
    return DecayFit(float(rate), float(amp_at_zero), float(floor), residual)


def moving_average(values, window=3):
    """Centred moving average; the window shrinks at the series ends."""
    values = np.asarray(values, dtype=float)
    if window <= 1 or len(values) == 0:
        return values.copy()
    half = window // 2
    csum = np.concatenate([[0.0], np.cumsum(values)])
    idx = np.arange(len(values))
    lo = np.maximum(idx - half, 0)
    hi = np.minimum(idx + half + 1, len(values))
    return (csum[hi] - csum[lo]) / (hi - lo)


def mixing_time(series, threshold, window=3):
    """First ``t`` whose smoothed value is at or below ``threshold``; ``None`` if never."""
    if threshold <= 0:
        raise ParameterError("threshold must be positive")
    t, w = _series(series)
    smooth = moving_average(w, window)
    hits = np.nonzero(smooth <= threshold)[0]
    return float(t[hits[0]]) if len(hits) else None


@dataclass
class Divergence:
    t_star: float
    degradation: float
    diverged: bool


def divergence_detect(series, window=3, tolerance=1.2):
    """Locate the best point of a W2 curve and how much it degrades afterwards."""
    t, w = _series(series)
    if len(t) < 3:
        raise ParameterError("divergence_detect needs at least 3 points")
    smooth = moving_average(w, window)
    k = int(np.argmin(smooth))
    degradation = float(smooth[-1] / smooth[k]) if smooth[k] > 0 else math.inf
    return Divergence(float(t[k]), degradation, degradation > tolerance)


def write_metric_series(path, rows):
    """CSV with columns ``t, estimator, value, floor, seed``."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "estimator", "value", "floor", "seed"])
        for row in rows:
            writer.writerow([row["t"], row["estimator"], row["value"], row["floor"], row["seed"]])
