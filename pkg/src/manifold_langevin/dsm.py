"""Denoising score matching with closed-form linear-in-features score models.

For a noise level ``sigma`` the empirical objective

    (1/n) sum_i |s(X_i + sigma xi_i) + xi_i / sigma|^2

is quadratic in the coefficients of ``s(y) = W^T phi(y)``, so the minimizer
(plus a ridge term) solves a linear system.
"""

import functools
import json
import math
from dataclasses import asdict, dataclass
from typing import NamedTuple, Optional

import numpy as np
import scipy.linalg
from scipy.spatial.distance import cdist, pdist

from .errors import ParameterError, SingularityError

FORMAT_TAG = "manifold-langevin/score-model/v1"


def _data(data):
    pts = getattr(data, "points", data)
    pts = np.asarray(pts, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if len(pts) == 0:
        raise ParameterError("data must contain at least one point")
    return pts


def _check_sigma(sigma):
    if not sigma > 0:
        raise ParameterError(f"sigma must be positive, got {sigma}")


def at_sigma(provider, sigma):
    """Freeze the noise level of a ``provider(x, sigma)`` score function."""
    return lambda y: provider(y, sigma)


def _bind(s, sigma):
    # oracles and models carry a ``score(x, sigma)`` method; plain callables take ``y``
    return at_sigma(s.score, sigma) if hasattr(s, "score") else s


def dsm_empirical_loss(s, data, sigma, seed=0, noise=None):
    """Empirical DSM loss with one standard normal draw per data point.

    ``s`` maps an ``(n, d)`` batch to scores, or is an oracle/model with a
    ``score(x, sigma)`` method. ``noise`` overrides the draws.
    """
    _check_sigma(sigma)
    x = _data(data)
    if noise is None:
        xi = np.random.default_rng(seed).standard_normal(x.shape)
    else:
        xi = np.asarray(noise, dtype=float).reshape(x.shape)
    resid = np.asarray(_bind(s, sigma)(x + sigma * xi)) + xi / sigma
    return float(np.mean(np.sum(resid**2, axis=1)))


class LossEstimate(NamedTuple):
    loss: float
    stderr: float


def dsm_population_loss(s, oracle, sigma, probes=4096, seed=0):
    """Monte Carlo ``E |s(Y) - grad log p_sigma(Y)|^2`` over ``Y = X + sigma xi``."""
    _check_sigma(sigma)
    if probes < 1:
        raise ParameterError("probes must be >= 1")
    x = oracle.sample_prior(probes, seed)
    rng = np.random.default_rng([seed, 1])
    y = x + sigma * rng.standard_normal(x.shape)
    r = np.sum((np.asarray(_bind(s, sigma)(y)) - oracle.score(y, sigma)) ** 2, axis=1)
    stderr = float(r.std(ddof=1) / math.sqrt(probes)) if probes > 1 else math.inf
    return LossEstimate(float(r.mean()), stderr)


def score_error(s, oracle, sigma, probes=4096, seed=0):
    return math.sqrt(dsm_population_loss(s, oracle, sigma, probes, seed).loss)


@dataclass(frozen=True)
class FeatureConfig:
    """RBF centers (uniform subsample of the data) plus linear and constant terms."""

    n_centers: int = 32
    bandwidth: Optional[float] = None  # median pairwise center distance when None
    linear: bool = True
    constant: bool = True
    seed: int = 0


class FeatureMap:
    def __init__(self, centers, bandwidth, linear=True, constant=True):
        self.centers = np.atleast_2d(np.asarray(centers, dtype=float))
        self.bandwidth = float(bandwidth)
        self.linear = linear
        self.constant = constant

    @classmethod
    def from_data(cls, x, config):
        m = config.n_centers
        if m > 0:
            rng = np.random.default_rng(config.seed)
            idx = rng.choice(len(x), size=m, replace=m > len(x))
            centers = x[idx]
        else:
            centers = np.empty((0, x.shape[1]))
        h = config.bandwidth
        if h is None:
            dists = pdist(centers) if m > 1 else np.array([])
            h = float(np.median(dists)) if dists.size and np.median(dists) > 0 else 1.0
        if h <= 0:
            raise ParameterError("bandwidth must be positive")
        return cls(centers, h, config.linear, config.constant)

    def __call__(self, y):
        y = np.atleast_2d(y)
        parts = []
        if len(self.centers):
            parts.append(np.exp(-cdist(y, self.centers, "sqeuclidean") / (2 * self.bandwidth**2)))
        if self.linear:
            parts.append(y)
        if self.constant:
            parts.append(np.ones((len(y), 1)))
        if not parts:
            raise ParameterError("feature map has no terms")
        return np.hstack(parts)


class ScoreModel:
    """Per-noise-level linear model ``s(y, sigma) = phi(y) @ W_sigma``."""

    def __init__(self, features, config, sigmas, coefs, ridge):
        self.features = features
        self.config = config
        self.sigmas = tuple(float(s) for s in sigmas)
        self.coefs = [np.asarray(c, dtype=float) for c in coefs]
        self.ridge = ridge
        if len(self.coefs) != len(self.sigmas):
            raise ParameterError("one coefficient block per noise level")

    @property
    def dim(self):
        return self.coefs[0].shape[1]

    def _index(self, sigma):
        for i, s in enumerate(self.sigmas):
            if math.isclose(s, sigma, rel_tol=1e-9):
                return i
        raise ParameterError(f"model has no noise level {sigma}")

    def __call__(self, y, sigma):
        y = np.asarray(y, dtype=float)
        single = y.ndim == 1
        out = self.features(y) @ self.coefs[self._index(sigma)]
        return out[0] if single else out

    def score(self, y, sigma):
        return self(y, sigma)

    def to_json(self):
        doc = {
            "format": FORMAT_TAG,
            "schedule": list(self.sigmas),
            "ridge": self.ridge,
            "features": {
                "config": asdict(self.config),
                "centers": self.features.centers.tolist(),
                "bandwidth": self.features.bandwidth,
            },
            "coefficients": [c.tolist() for c in self.coefs],
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)
        if doc.get("format") != FORMAT_TAG:
            raise ParameterError(f"unsupported score model format {doc.get('format')!r}")
        config = FeatureConfig(**doc["features"]["config"])
        feats = FeatureMap(
            np.asarray(doc["features"]["centers"], dtype=float).reshape(config.n_centers, -1)
            if config.n_centers
            else np.empty((0, np.asarray(doc["coefficients"][0]).shape[1])),
            doc["features"]["bandwidth"],
            config.linear,
            config.constant,
        )
        return cls(feats, config, doc["schedule"], doc["coefficients"], doc["ridge"])


def _solve_normal_equations(phi, target, ridge):
    n, p = phi.shape
    gram = phi.T @ phi / n
    rhs = phi.T @ target / n
    if ridge == 0 and np.linalg.matrix_rank(phi) < p:
        raise SingularityError(f"feature Gram matrix is singular (rank < {p}); use ridge > 0")
    try:
        return scipy.linalg.solve(gram + ridge * np.eye(p), rhs, assume_a="pos")
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise SingularityError("feature Gram matrix is numerically singular") from exc


def fit_score_model(data, sigmas, features=None, ridge=1e-6, seed=0, feature_map=None):
    """Ridge-regularized DSM minimizer within the linear-in-features class.

    Each noise level gets its own noise draw ``xi`` (one per data point) and
    its own coefficient block solved from the normal equations. The feature
    map is built from ``data`` unless a prebuilt ``feature_map`` is passed
    (useful to hold the model class fixed while the sample size varies).
    """
    if ridge < 0:
        raise ParameterError("ridge must be nonnegative")
    x = _data(data)
    config = features or FeatureConfig()
    fmap = feature_map if feature_map is not None else FeatureMap.from_data(x, config)
    coefs = []
    for i, sigma in enumerate(sigmas):
        _check_sigma(sigma)
        xi = np.random.default_rng([seed, i]).standard_normal(x.shape)
        phi = fmap(x + sigma * xi)
        coefs.append(_solve_normal_equations(phi, -xi / sigma, ridge))
    return ScoreModel(fmap, config, sigmas, coefs, ridge)


class PerturbedOracle:
    """Base smoothed score plus ``eps`` times a fixed smooth random field.

    The field is an RBF mixture ``u(x) = sum_k w_k exp(-|x - c_k|^2 / (2 h^2))``
    rescaled at each noise level so that its root-mean-square norm under
    ``p_sigma`` is one.
    """

    def __init__(self, base, eps, seed=0, n_centers=16, norm_probes=8192):
        if eps < 0:
            raise ParameterError("eps must be nonnegative")
        self.base = base
        self.eps = float(eps)
        self.seed = seed
        self.dim = base.dim
        self.rho = getattr(base, "rho", math.inf)
        rng = np.random.default_rng([seed, 7])
        self.centers = base.sample_prior(n_centers, int(rng.integers(2**31))) + rng.standard_normal(
            (n_centers, self.dim)
        ) * 0.25
        self.weights = rng.standard_normal((n_centers, self.dim))
        d = pdist(self.centers)
        self.bandwidth = float(np.median(d)) if d.size and np.median(d) > 0 else 1.0
        self.norm_probes = norm_probes

    def _raw_field(self, x):
        k = np.exp(-cdist(x, self.centers, "sqeuclidean") / (2 * self.bandwidth**2))
        return k @ self.weights

    @functools.lru_cache(maxsize=64)
    def _scale(self, sigma):
        x = self.base.sample_prior(self.norm_probes, self.seed + 1)
        rng = np.random.default_rng([self.seed, 2])
        y = x + sigma * rng.standard_normal(x.shape)
        rms = math.sqrt(np.mean(np.sum(self._raw_field(y) ** 2, axis=1)))
        return 1.0 / rms if rms > 0 else 0.0

    def field(self, x, sigma):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return self._raw_field(x) * self._scale(float(sigma))

    def score(self, x, sigma):
        base = self.base.score(x, sigma)
        if self.eps == 0:
            return base
        out = np.atleast_2d(base) + self.eps * self.field(x, sigma)
        return out[0] if np.ndim(x) == 1 else out

    def __call__(self, x, sigma):
        return self.score(x, sigma)

    def sample_prior(self, n, seed):
        return self.base.sample_prior(n, seed)


def perturb_oracle(oracle, eps, seed=0):
    return PerturbedOracle(oracle, eps, seed)
