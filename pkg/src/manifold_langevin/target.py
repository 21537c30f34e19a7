"""Target distributions on manifolds and Gaussian-smoothed score oracles.

For a target ``p`` on ``M`` and noise level ``sigma`` the smoothed density is
``p_sigma = p * N(0, sigma^2 I)``. Writing ``q_x`` for the posterior of the
manifold point given the noisy observation ``x``,

    grad log p_sigma(x) = (E_{q_x}[Y] - x) / sigma^2
    hess log p_sigma(x) = (Cov_{q_x}[Y] - sigma^2 I) / sigma^4

Two oracles evaluate these moments: :class:`QuadratureOracle` sums over a
mesh, :class:`CircleProductOracle` uses closed-form von Mises moments for
manifolds that are products of linearly embedded circles.
"""

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy.special import ive, logsumexp

from .errors import EvaluationError, ParameterError
from .geometry import build_mesh, single_point_mesh

# below this log-density the linear-domain value underflows a double
LOG_UNDERFLOW = -745.0


@dataclass(frozen=True)
class Tilted:
    """Non-uniform density ``p = exp(log_density) / Z`` relative to ``vol_M``.

    ``B`` bounds ``|grad log p|_g`` and ``L`` is the Lipschitz constant of
    ``grad log p`` on ``M``; both are supplied, never estimated.
    """

    log_density: Callable
    grad_log_density: Callable
    B: float
    L: float
    name: str = "tilted"


def circle_tilt(circle, beta, mu=0.0):
    """von Mises tilt ``beta cos(theta - mu)`` on a circle of radius r.

    Arc length is ``r theta``, so ``|grad log p|_g <= beta / r`` and the second
    derivative along the circle is bounded by ``beta / r^2``.
    """
    r = circle.radius
    return Tilted(
        log_density=lambda th: beta * np.cos(th[:, 0] - mu),
        grad_log_density=lambda th: (-beta * np.sin(th[:, 0] - mu))[:, None],
        B=beta / r,
        L=beta / r**2,
        name=f"vonmises(beta={beta}, mu={mu})",
    )


class TargetDistribution:
    """Quadrature representation of a probability measure on a manifold."""

    def __init__(self, manifold, mesh, density=None):
        self.manifold = manifold
        self.mesh = mesh
        self.density = density
        logw = np.log(mesh.weights)
        if density is not None:
            logw = logw + density.log_density(mesh.nodes)
        self.log_weights = logw - logsumexp(logw)

    @property
    def weights(self):
        return np.exp(self.log_weights)

    @property
    def dim(self):
        return self.mesh.points.shape[1]

    @property
    def B(self):
        return 0.0 if self.density is None else self.density.B

    @property
    def L(self):
        return 0.0 if self.density is None else self.density.L

    @property
    def rho(self):
        if self.manifold is None:
            return float(np.linalg.norm(self.mesh.points, axis=1).max())
        return self.manifold.rho

    def sample(self, n, seed, jitter=True):
        """Draw ``n`` points: weighted node choice plus uniform in-cell chart jitter."""
        rng = np.random.default_rng(seed)
        if n == 0:
            return np.empty((0, self.dim))
        idx = rng.choice(self.mesh.size, size=n, p=self.weights)
        if self.manifold is None or not jitter:
            return self.mesh.points[idx].copy()
        theta = self.mesh.nodes[idx].copy()
        res = self.mesh.resolution
        for j, (lo, hi, periodic) in enumerate(self.manifold.chart_bounds):
            h = (hi - lo) / res
            theta[:, j] += rng.uniform(-0.5, 0.5, size=n) * h
            if periodic:
                theta[:, j] = lo + np.mod(theta[:, j] - lo, hi - lo)
            else:
                theta[:, j] = np.clip(theta[:, j], lo, hi)
        return self.manifold.embed(theta)


def uniform_target(manifold, resolution=64):
    return TargetDistribution(manifold, build_mesh(manifold, resolution))


def tilted_target(manifold, tilt, resolution=64):
    return TargetDistribution(manifold, build_mesh(manifold, resolution), tilt)


def point_mass_target(y0):
    """Dirac mass at ``y0``; a fixture that makes every formula closed-form."""
    return TargetDistribution(None, single_point_mesh(y0))


def sample_prior(target, n, seed):
    return target.sample(n, seed)


def _check_sigma(sigma):
    if not sigma > 0:
        raise ParameterError(f"sigma must be positive, got {sigma}")


def _as_batch(x, dim):
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[1] != dim:
        raise ParameterError(f"expected points of dimension {dim}, got {x.shape[1]}")
    if not np.all(np.isfinite(x)):
        raise EvaluationError("non-finite evaluation point")
    return x, single


class SmoothedOracle:
    """Common surface of all smoothed-score oracles.

    Subclasses implement ``_log_density``, ``_score`` and ``_hessian`` on
    ``(n, d)`` batches. Instances are immutable and safe to share between
    threads.
    """

    dim: int
    rho: float

    def log_density(self, x, sigma):
        _check_sigma(sigma)
        x, single = _as_batch(x, self.dim)
        out = self._log_density(x, sigma)
        return out[0] if single else out

    def density(self, x, sigma):
        logp = np.atleast_1d(self.log_density(x, sigma))
        if np.any(logp < LOG_UNDERFLOW):
            raise EvaluationError(
                "smoothed density underflows for this sigma (point too far from "
                "the manifold); use log_density"
            )
        out = np.exp(logp)
        return out[0] if np.ndim(x) == 1 else out

    def score(self, x, sigma):
        _check_sigma(sigma)
        x, single = _as_batch(x, self.dim)
        out = self._score(x, sigma)
        if not np.all(np.isfinite(out)):
            raise EvaluationError("score evaluation produced non-finite values")
        return out[0] if single else out

    def hessian(self, x, sigma):
        _check_sigma(sigma)
        x, single = _as_batch(x, self.dim)
        out = self._hessian(x, sigma)
        return out[0] if single else out

    def __call__(self, x, sigma):
        return self.score(x, sigma)

    def sample_prior(self, n, seed):
        raise NotImplementedError


class QuadratureOracle(SmoothedOracle):
    """Posterior moments by summing over the target's mesh nodes."""

    def __init__(self, target, chunk=2048):
        self.target = target
        self.nodes = np.ascontiguousarray(target.mesh.points)
        self.log_w = target.log_weights
        self.half_sq = 0.5 * np.einsum("ij,ij->i", self.nodes, self.nodes)
        self.dim = self.nodes.shape[1]
        self.rho = target.rho
        self.chunk = chunk

    def _logits(self, x, sigma):
        # ||x||^2 is common to all nodes and cancels in the softmax
        return (x @ self.nodes.T - self.half_sq) / sigma**2 + self.log_w

    def _posterior(self, x, sigma):
        logits = self._logits(x, sigma)
        lse = logsumexp(logits, axis=1, keepdims=True)
        return np.exp(logits - lse), lse[:, 0]

    def _log_density(self, x, sigma):
        out = np.empty(len(x))
        for s in range(0, len(x), self.chunk):
            xs = x[s : s + self.chunk]
            lse = logsumexp(self._logits(xs, sigma), axis=1)
            out[s : s + self.chunk] = (
                lse
                - 0.5 * np.einsum("ij,ij->i", xs, xs) / sigma**2
                - 0.5 * self.dim * math.log(2 * math.pi * sigma**2)
            )
        return out

    def posterior_mean(self, x, sigma):
        out = np.empty_like(x)
        for s in range(0, len(x), self.chunk):
            w, _ = self._posterior(x[s : s + self.chunk], sigma)
            out[s : s + self.chunk] = w @ self.nodes
        return out

    def _score(self, x, sigma):
        return (self.posterior_mean(x, sigma) - x) / sigma**2

    def _hessian(self, x, sigma):
        d = self.dim
        out = np.empty((len(x), d, d))
        for i in range(len(x)):
            w, _ = self._posterior(x[i : i + 1], sigma)
            w = w[0]
            centred = self.nodes - w @ self.nodes
            cov = (centred * w[:, None]).T @ centred
            out[i] = (cov - sigma**2 * np.eye(d)) / sigma**4
        return out

    def sample_prior(self, n, seed):
        return self.target.sample(n, seed)


class CircleProductOracle(SmoothedOracle):
    """Exact oracle for the uniform measure on ``c + sum_j a_j cos t_j + b_j sin t_j``.

    The generators must be mutually orthogonal with ``|a_j| = |b_j| = r_j``.
    Then ``|psi|^2`` is constant and the posterior factorises into independent
    von Mises laws with concentration ``|(<x-c,a_j>, <x-c,b_j>)| / sigma^2``.
    With no circles this is a point mass at ``c``.
    """

    def __init__(self, center, frame, manifold=None):
        self.center = np.asarray(center, dtype=float)
        self.dim = self.center.size
        self.a = np.array([a for a, _ in frame], dtype=float).reshape(-1, self.dim)
        self.b = np.array([b for _, b in frame], dtype=float).reshape(-1, self.dim)
        self.r2 = np.einsum("ij,ij->i", self.a, self.a)
        gram = np.vstack([self.a, self.b])
        gram = gram @ gram.T
        off = gram - np.diag(np.diag(gram))
        if len(self.r2) and (
            np.abs(off).max() > 1e-9 * self.r2.max()
            or not np.allclose(np.einsum("ij,ij->i", self.b, self.b), self.r2)
        ):
            raise ParameterError("circle generators must be orthogonal with equal norms")
        self.manifold = manifold
        self.rho = float(np.linalg.norm(self.center) + math.sqrt(self.r2.sum()))

    @classmethod
    def from_manifold(cls, manifold):
        frame = manifold.circle_frame()
        if frame is None:
            raise ParameterError(f"{manifold.kind} has no circle-product structure")
        center, gens = frame
        return cls(center, gens, manifold)

    @classmethod
    def point_mass(cls, y0):
        return cls(y0, [])

    def _vonmises(self, x, sigma):
        xc = x - self.center
        pa = xc @ self.a.T
        pb = xc @ self.b.T
        norm = np.hypot(pa, pb)
        kappa = norm / sigma**2
        i0 = ive(0, kappa)
        m1 = ive(1, kappa) / i0
        m2 = ive(2, kappa) / i0
        with np.errstate(invalid="ignore", divide="ignore"):
            cos_mu = np.where(norm > 0, pa / norm, 1.0)
            sin_mu = np.where(norm > 0, pb / norm, 0.0)
        return xc, kappa, i0, m1, m2, cos_mu, sin_mu

    def _log_density(self, x, sigma):
        xc, kappa, i0, *_ = self._vonmises(x, sigma)
        log_i0 = np.log(i0) + kappa
        return (
            -(np.einsum("ij,ij->i", xc, xc) + self.r2.sum()) / (2 * sigma**2)
            + log_i0.sum(axis=1)
            - 0.5 * self.dim * math.log(2 * math.pi * sigma**2)
        )

    def posterior_mean(self, x, sigma):
        _, _, _, m1, _, cos_mu, sin_mu = self._vonmises(x, sigma)
        return self.center + (m1 * cos_mu) @ self.a + (m1 * sin_mu) @ self.b

    def _score(self, x, sigma):
        return (self.posterior_mean(x, sigma) - x) / sigma**2

    def _hessian(self, x, sigma):
        _, _, _, m1, m2, cos_mu, sin_mu = self._vonmises(x, sigma)
        d = self.dim
        out = np.empty((len(x), d, d))
        eye = np.eye(d)
        for i in range(len(x)):
            u = cos_mu[i][:, None] * self.a + sin_mu[i][:, None] * self.b
            v = -sin_mu[i][:, None] * self.a + cos_mu[i][:, None] * self.b
            var_u = 0.5 * (1 + m2[i]) - m1[i] ** 2
            var_v = 0.5 * (1 - m2[i])
            cov = (u.T * var_u) @ u + (v.T * var_v) @ v
            out[i] = (cov - sigma**2 * eye) / sigma**4
        return out

    def sample_prior(self, n, seed):
        rng = np.random.default_rng(seed)
        k = len(self.r2)
        theta = rng.uniform(0.0, 2 * np.pi, size=(n, k))
        return self.center + np.cos(theta) @ self.a + np.sin(theta) @ self.b


class GaussianOracle(SmoothedOracle):
    """``p = N(mean, cov)``, so ``p_sigma = N(mean, cov + sigma^2 I)`` exactly."""

    def __init__(self, mean, cov=None):
        self.mean = np.asarray(mean, dtype=float)
        self.dim = self.mean.size
        self.cov = np.eye(self.dim) if cov is None else np.asarray(cov, dtype=float)
        self.rho = math.inf

    def _smoothed_cov(self, sigma):
        return self.cov + sigma**2 * np.eye(self.dim)

    def _log_density(self, x, sigma):
        cov = self._smoothed_cov(sigma)
        diff = x - self.mean
        sol = np.linalg.solve(cov, diff.T).T
        _, logdet = np.linalg.slogdet(cov)
        return -0.5 * (
            np.einsum("ij,ij->i", diff, sol) + logdet + self.dim * math.log(2 * math.pi)
        )

    def _score(self, x, sigma):
        return -np.linalg.solve(self._smoothed_cov(sigma), (x - self.mean).T).T

    def _hessian(self, x, sigma):
        prec = np.linalg.inv(self._smoothed_cov(sigma))
        return np.broadcast_to(-prec, (len(x), self.dim, self.dim)).copy()

    def sample_prior(self, n, seed):
        rng = np.random.default_rng(seed)
        return rng.multivariate_normal(self.mean, self.cov, size=n)


def smoothed_density(oracle, x, sigma):
    return oracle.density(x, sigma)


def smoothed_score(oracle, x, sigma):
    return oracle.score(x, sigma)


def smoothed_hessian(oracle, x, sigma):
    return oracle.hessian(x, sigma)


def _probe_points(oracle, sigma, probes, seed, radius):
    """Half uniform in a ball, half drawn from ``p_sigma`` (where curvature lives)."""
    rng = np.random.default_rng(seed)
    n_ball = (probes + 1) // 2
    direction = rng.standard_normal((n_ball, oracle.dim))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    r = radius * rng.uniform(size=(n_ball, 1)) ** (1.0 / oracle.dim)
    near = oracle.sample_prior(probes - n_ball, seed + 1)
    near = near + sigma * rng.standard_normal(near.shape)
    return np.vstack([direction * r, near])


class LipschitzCheck(NamedTuple):
    estimate: float
    bound: float
    holds: bool
    max_eig: float
    min_eig: float


def lipschitz_check(oracle, sigma, probes=256, seed=0, rho=None):
    """Hessian-eigenvalue sweep against ``max(rho^2, sigma^2) / sigma^4``.

    Both one-sided bounds ``-I/sigma^2 <= H <= (rho^2 - sigma^2)/sigma^4 I`` are
    checked as well as the two-sided Lipschitz constant.
    """
    if probes < 2:
        raise ParameterError("need at least two probes")
    rho = oracle.rho if rho is None else rho
    radius = 2 * rho if rho > 0 else 1.0
    x = _probe_points(oracle, sigma, probes, seed, radius)
    eig = np.linalg.eigvalsh(oracle.hessian(x, sigma))
    upper, lower = float(eig.max()), float(eig.min())
    bound = max(rho**2, sigma**2) / sigma**4
    slack = 1e-6 * bound
    estimate = float(np.abs(eig).max())
    holds = (
        estimate <= bound * (1 + 1e-6)
        and upper <= (rho**2 - sigma**2) / sigma**4 + slack
        and lower >= -1.0 / sigma**2 - slack
    )
    return LipschitzCheck(estimate, bound, bool(holds), upper, lower)


class DissipativityCheck(NamedTuple):
    min_margin: float
    holds: bool


def dissipativity_margin(oracle, x, sigma, rho=None):
    """``<-grad log p_sigma(x), x> - |x|^2/(2 sigma^2) + rho^2/(2 sigma^2)``."""
    rho = oracle.rho if rho is None else rho
    x = np.atleast_2d(x)
    sq = np.einsum("ij,ij->i", x, x)
    drift = -oracle.score(x, sigma)
    return np.einsum("ij,ij->i", drift, x) - sq / (2 * sigma**2) + rho**2 / (2 * sigma**2)


def dissipativity_check(oracle, sigma, probes=256, seed=0, radius=None, rho=None):
    if probes < 1:
        raise ParameterError("need at least one probe")
    rho = oracle.rho if rho is None else rho
    if radius is None:
        radius = 3 * max(rho, 1.0)
    x = _probe_points(oracle, sigma, probes, seed, radius)
    margin = dissipativity_margin(oracle, x, sigma, rho)
    tol = 1e-8 * (1 + np.einsum("ij,ij->i", x, x) / sigma**2)
    return DissipativityCheck(float(margin.min()), bool(np.all(margin >= -tol)))


def make_oracle(target_or_manifold, exact=True, resolution=256):
    """Pick the closed-form oracle when the manifold admits one, else quadrature."""
    if isinstance(target_or_manifold, TargetDistribution):
        target = target_or_manifold
        if exact and target.density is None and target.manifold is not None:
            if target.manifold.circle_frame() is not None:
                return CircleProductOracle.from_manifold(target.manifold)
        return QuadratureOracle(target)
    manifold = target_or_manifold
    if exact and manifold.circle_frame() is not None:
        return CircleProductOracle.from_manifold(manifold)
    return QuadratureOracle(uniform_target(manifold, resolution))
