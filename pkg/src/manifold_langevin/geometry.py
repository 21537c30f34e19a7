"""Embedded test manifolds, quadrature meshes and curvature quantities.

Each manifold is given by an explicit chart ``psi: chart -> R^d`` whose image is
an isometrically embedded closed manifold. Meshes are uniform chart grids; the
volume weights carry ``sqrt(det g)`` and geodesic distances come from shortest
paths on a neighbourhood graph of the embedded nodes.
"""

import logging
import math
import struct
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, sparse
from scipy.sparse import csgraph
from scipy.spatial import cKDTree
from scipy.special import gammaln

from .errors import DomainError, MeshError, ParameterError, ResolutionError

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi


def _pad(points, ambient_dim):
    n, k = points.shape
    if k == ambient_dim:
        return points
    out = np.zeros((n, ambient_dim))
    out[:, :k] = points
    return out


class ParamManifold:
    """Base class for chart-parametrised embedded manifolds.

    Subclasses provide ``chart_bounds`` (list of ``(lo, hi, periodic)``),
    ``embed``, ``jacobian``, ``ricci_lower`` and the analytic ``volume``.
    """

    kind = "abstract"
    intrinsic_dim: int
    ambient_dim: int

    @property
    def chart_bounds(self):
        raise NotImplementedError

    def embed(self, theta):
        raise NotImplementedError

    def jacobian(self, theta):
        raise NotImplementedError

    def ricci_lower(self, theta):
        raise NotImplementedError

    @property
    def volume(self):
        raise NotImplementedError

    @property
    def rho(self):
        """Radius of the smallest origin-centred ball containing the manifold."""
        raise NotImplementedError

    def circle_frame(self):
        """``(center, [(a_j, b_j), ...])`` when the chart is
        ``center + sum_j a_j cos(theta_j) + b_j sin(theta_j)`` with mutually
        orthogonal, pairwise equal-norm generators; ``None`` otherwise."""
        return None

    def metric(self, theta):
        jac = self.jacobian(theta)
        return np.einsum("...ki,...kj->...ij", jac, jac)

    def check_chart(self, theta):
        theta = np.atleast_2d(np.asarray(theta, dtype=float))
        if theta.shape[-1] != self.intrinsic_dim:
            raise DomainError(
                f"chart point has {theta.shape[-1]} coordinates, "
                f"{self.kind} needs {self.intrinsic_dim}"
            )
        for j, (lo, hi, periodic) in enumerate(self.chart_bounds):
            col = theta[:, j]
            if not np.all(np.isfinite(col)):
                raise DomainError("chart point is not finite")
            if periodic:
                continue
            if np.any(col < lo - 1e-12) or np.any(col > hi + 1e-12):
                raise DomainError(
                    f"chart coordinate {j} outside [{lo}, {hi}]"
                )
        return theta

    def describe(self):
        return {"kind": self.kind}


@dataclass(frozen=True)
class Circle(ParamManifold):
    radius: float = 1.0
    ambient_dim: int = 2
    kind = "circle"
    intrinsic_dim = 1

    def __post_init__(self):
        if self.radius <= 0:
            raise ParameterError("radius must be positive")
        if self.ambient_dim < 2:
            raise ParameterError("a circle needs ambient dimension >= 2")

    @property
    def chart_bounds(self):
        return [(0.0, TWO_PI, True)]

    def embed(self, theta):
        theta = self.check_chart(theta)
        pts = self.radius * np.column_stack([np.cos(theta[:, 0]), np.sin(theta[:, 0])])
        return _pad(pts, self.ambient_dim)

    def jacobian(self, theta):
        theta = self.check_chart(theta)
        jac = np.zeros((theta.shape[0], self.ambient_dim, 1))
        jac[:, 0, 0] = -self.radius * np.sin(theta[:, 0])
        jac[:, 1, 0] = self.radius * np.cos(theta[:, 0])
        return jac

    def ricci_lower(self, theta):
        theta = self.check_chart(theta)
        return np.zeros(theta.shape[0])

    @property
    def volume(self):
        return TWO_PI * self.radius

    @property
    def rho(self):
        return float(self.radius)

    def circle_frame(self):
        a = np.zeros(self.ambient_dim)
        b = np.zeros(self.ambient_dim)
        a[0] = b[1] = self.radius
        return np.zeros(self.ambient_dim), [(a, b)]

    def describe(self):
        return {"kind": self.kind, "radius": self.radius, "ambient_dim": self.ambient_dim}


@dataclass(frozen=True)
class Sphere(ParamManifold):
    """Round sphere S^{d'} of radius r in R^{d'+1} (zero padded to ``ambient_dim``).

    Chart: latitudes ``theta_0 .. theta_{d'-2}`` in ``[-pi/2, pi/2]`` and a
    periodic longitude ``theta_{d'-1}``. The chart origin maps to
    ``(0, ..., 0, r)``, where the metric is ``r^2 I``.
    """

    intrinsic_dim: int = 2
    radius: float = 1.0
    ambient_dim: int = 0
    kind = "sphere"

    def __post_init__(self):
        if self.intrinsic_dim < 1:
            raise ParameterError("sphere dimension must be >= 1")
        if self.radius <= 0:
            raise ParameterError("radius must be positive")
        if self.ambient_dim == 0:
            object.__setattr__(self, "ambient_dim", self.intrinsic_dim + 1)
        if self.ambient_dim < self.intrinsic_dim + 1:
            raise ParameterError("sphere needs ambient dimension >= d' + 1")

    @property
    def chart_bounds(self):
        lat = [(-np.pi / 2, np.pi / 2, False)] * (self.intrinsic_dim - 1)
        return lat + [(-np.pi, np.pi, True)]

    def embed(self, theta):
        theta = self.check_chart(theta)
        n, k = theta.shape
        c, s = np.cos(theta), np.sin(theta)
        pts = np.empty((n, k + 1))
        prod = np.ones(n)
        for m in range(k):
            pts[:, m] = prod * s[:, m]
            prod = prod * c[:, m]
        pts[:, k] = prod
        return _pad(self.radius * pts, self.ambient_dim)

    def jacobian(self, theta):
        theta = self.check_chart(theta)
        n, k = theta.shape
        c, s = np.cos(theta), np.sin(theta)
        jac = np.zeros((n, self.ambient_dim, k))
        for m in range(k + 1):
            # x_m = prod_{i<m} c_i * (s_m if m < k else 1)
            tail = s[:, m] if m < k else np.ones(n)
            for j in range(min(m + 1, k)):
                factor = np.ones(n)
                for i in range(m):
                    factor = factor * (-s[:, i] if i == j else c[:, i])
                if j == m:
                    factor = factor * c[:, m]
                else:
                    factor = factor * tail
                jac[:, m, j] = factor
        return self.radius * jac

    def ricci_lower(self, theta):
        theta = self.check_chart(theta)
        return np.full(theta.shape[0], (self.intrinsic_dim - 1) / self.radius**2)

    @property
    def volume(self):
        k = self.intrinsic_dim
        log_area = math.log(2.0) + (k + 1) / 2 * math.log(math.pi) - gammaln((k + 1) / 2)
        return math.exp(log_area) * self.radius**k

    @property
    def rho(self):
        return float(self.radius)

    def describe(self):
        return {
            "kind": self.kind,
            "intrinsic_dim": self.intrinsic_dim,
            "radius": self.radius,
            "ambient_dim": self.ambient_dim,
        }


@dataclass(frozen=True)
class EmbeddedTorus(ParamManifold):
    """Torus of revolution: minor radius ``a`` swept around a circle of radius ``c``."""

    minor: float = 1.0
    major: float = 3.0
    ambient_dim: int = 3
    kind = "embedded_torus"
    intrinsic_dim = 2

    def __post_init__(self):
        if not 0 < self.minor < self.major:
            raise ParameterError("need 0 < minor < major for an embedded torus")
        if self.ambient_dim < 3:
            raise ParameterError("torus needs ambient dimension >= 3")

    @property
    def chart_bounds(self):
        return [(0.0, TWO_PI, True), (0.0, TWO_PI, True)]

    def embed(self, theta):
        theta = self.check_chart(theta)
        u, v = theta[:, 0], theta[:, 1]
        ring = self.major + self.minor * np.cos(v)
        pts = np.column_stack([ring * np.cos(u), ring * np.sin(u), self.minor * np.sin(v)])
        return _pad(pts, self.ambient_dim)

    def jacobian(self, theta):
        theta = self.check_chart(theta)
        u, v = theta[:, 0], theta[:, 1]
        ring = self.major + self.minor * np.cos(v)
        jac = np.zeros((theta.shape[0], self.ambient_dim, 2))
        jac[:, 0, 0] = -ring * np.sin(u)
        jac[:, 1, 0] = ring * np.cos(u)
        jac[:, 0, 1] = -self.minor * np.sin(v) * np.cos(u)
        jac[:, 1, 1] = -self.minor * np.sin(v) * np.sin(u)
        jac[:, 2, 1] = self.minor * np.cos(v)
        return jac

    def ricci_lower(self, theta):
        # Gauss curvature; Ricci = K_gauss * g on a surface
        theta = self.check_chart(theta)
        v = theta[:, 1]
        return np.cos(v) / (self.minor * (self.major + self.minor * np.cos(v)))

    @property
    def volume(self):
        return 4.0 * np.pi**2 * self.minor * self.major

    @property
    def rho(self):
        return float(self.major + self.minor)

    def describe(self):
        return {
            "kind": self.kind,
            "minor": self.minor,
            "major": self.major,
            "ambient_dim": self.ambient_dim,
        }


@dataclass(frozen=True)
class PhaseTorus(ParamManifold):
    """Flat 2-torus of two-tone signals of length N.

    ``psi(theta)[t] = A1 cos(2 pi k1 t / N + phi1 + theta_1)
                     + A2 cos(2 pi k2 t / N + phi2 + theta_2)``

    With ``0 < k1 != k2 < N/2`` the two tones are orthogonal, so the induced
    metric is the constant ``diag(A1^2 N / 2, A2^2 N / 2)``.
    """

    amplitude1: float = 1.0
    amplitude2: float = 1.0
    freq1: int = 1
    freq2: int = 3
    length: int = 16
    phase1: float = 0.0
    phase2: float = 0.0
    ambient_dim: int = 0
    kind = "phase_torus"
    intrinsic_dim = 2

    def __post_init__(self):
        if self.freq1 == self.freq2:
            raise ParameterError("PhaseTorus needs k1 != k2")
        for k in (self.freq1, self.freq2):
            if not 0 < k < self.length / 2:
                raise ParameterError("PhaseTorus needs 0 < k < N/2")
        if self.amplitude1 <= 0 or self.amplitude2 <= 0:
            raise ParameterError("amplitudes must be positive")
        if self.ambient_dim == 0:
            object.__setattr__(self, "ambient_dim", self.length)
        if self.ambient_dim < self.length:
            raise ParameterError("ambient dimension must be >= signal length")

    @property
    def chart_bounds(self):
        return [(0.0, TWO_PI, True), (0.0, TWO_PI, True)]

    def _tones(self):
        t = np.arange(self.length)
        w1 = TWO_PI * self.freq1 * t / self.length + self.phase1
        w2 = TWO_PI * self.freq2 * t / self.length + self.phase2
        return w1, w2

    def embed(self, theta):
        theta = self.check_chart(theta)
        w1, w2 = self._tones()
        sig = self.amplitude1 * np.cos(w1[None, :] + theta[:, :1]) + self.amplitude2 * np.cos(
            w2[None, :] + theta[:, 1:2]
        )
        return _pad(sig, self.ambient_dim)

    def jacobian(self, theta):
        theta = self.check_chart(theta)
        w1, w2 = self._tones()
        jac = np.zeros((theta.shape[0], self.ambient_dim, 2))
        jac[:, : self.length, 0] = -self.amplitude1 * np.sin(w1[None, :] + theta[:, :1])
        jac[:, : self.length, 1] = -self.amplitude2 * np.sin(w2[None, :] + theta[:, 1:2])
        return jac

    def ricci_lower(self, theta):
        theta = self.check_chart(theta)
        return np.zeros(theta.shape[0])

    @property
    def volume(self):
        return TWO_PI**2 * self.amplitude1 * self.amplitude2 * self.length / 2.0

    @property
    def rho(self):
        return float(math.sqrt(self.length / 2.0 * (self.amplitude1**2 + self.amplitude2**2)))

    def circle_frame(self):
        w1, w2 = self._tones()
        frame = []
        for amp, w in ((self.amplitude1, w1), (self.amplitude2, w2)):
            a = np.zeros(self.ambient_dim)
            b = np.zeros(self.ambient_dim)
            a[: self.length] = amp * np.cos(w)
            b[: self.length] = -amp * np.sin(w)
            frame.append((a, b))
        return np.zeros(self.ambient_dim), frame

    def downsampled(self):
        """The manifold traced by pair-mean downsampling of this one.

        Averaging samples ``2i, 2i+1`` of ``cos(2 pi k t / N + phi)`` gives
        ``cos(pi k / N) cos(2 pi k i / (N/2) + phi + pi k / N)``, so the image is
        again a PhaseTorus as long as ``k < N/4``.
        """
        n = self.length
        if n % 2:
            raise ParameterError("odd signal length cannot be halved")
        for k in (self.freq1, self.freq2):
            if not k < n / 4:
                raise ParameterError("downsampling aliases unless k < N/4")
        if self.ambient_dim != n:
            raise ParameterError("downsampling a zero-padded PhaseTorus is not supported")
        s1, s2 = np.pi * self.freq1 / n, np.pi * self.freq2 / n
        return PhaseTorus(
            amplitude1=self.amplitude1 * math.cos(s1),
            amplitude2=self.amplitude2 * math.cos(s2),
            freq1=self.freq1,
            freq2=self.freq2,
            length=n // 2,
            phase1=self.phase1 + s1,
            phase2=self.phase2 + s2,
        )

    def describe(self):
        return {
            "kind": self.kind,
            "amplitude1": self.amplitude1,
            "amplitude2": self.amplitude2,
            "freq1": self.freq1,
            "freq2": self.freq2,
            "length": self.length,
            "phase1": self.phase1,
            "phase2": self.phase2,
            "ambient_dim": self.ambient_dim,
        }


MANIFOLDS = {
    "circle": Circle,
    "sphere": Sphere,
    "embedded_torus": EmbeddedTorus,
    "phase_torus": PhaseTorus,
}


def make_manifold(spec):
    """Build a manifold from a ``{"kind": ..., **params}`` mapping."""
    spec = dict(spec)
    kind = spec.pop("kind")
    try:
        cls = MANIFOLDS[kind]
    except KeyError:
        raise ParameterError(f"unknown manifold kind {kind!r}") from None
    return cls(**spec)


def chart_eval(m, theta):
    """Embedded point and metric tensor at a single chart point."""
    theta = np.asarray(theta, dtype=float).reshape(1, -1)
    return m.embed(theta)[0], m.metric(theta)[0]


def ricci_lower(m, theta):
    theta = np.asarray(theta, dtype=float)
    single = theta.ndim <= 1
    out = m.ricci_lower(theta.reshape(-1, m.intrinsic_dim))
    return float(out[0]) if single else out


@dataclass
class ManifoldMesh:
    nodes: np.ndarray
    points: np.ndarray
    weights: np.ndarray
    resolution: int
    graph: sparse.csr_matrix = field(repr=False)
    spacing: float
    _geodesic: np.ndarray = field(default=None, repr=False)

    @property
    def size(self):
        return len(self.weights)

    @property
    def volume(self):
        return float(self.weights.sum())

    @property
    def geodesic(self):
        """Full all-pairs graph-geodesic matrix (cached, O(n^2) memory)."""
        if self._geodesic is None:
            self._geodesic = csgraph.shortest_path(self.graph, method="D", directed=False)
        return self._geodesic

    def geodesic_rows(self, indices, limit=np.inf):
        """Geodesic distances from ``indices``; entries beyond ``limit`` are inf."""
        if self._geodesic is not None:
            rows = self._geodesic[np.atleast_1d(indices)]
            return np.where(rows <= limit, rows, np.inf)
        return csgraph.dijkstra(
            self.graph, directed=False, indices=np.atleast_1d(indices), limit=limit
        )

    def iter_rows(self, limit=np.inf, chunk=256):
        for start in range(0, self.size, chunk):
            idx = np.arange(start, min(start + chunk, self.size))
            yield idx, self.geodesic_rows(idx, limit)


def _grid_axes(m, resolution):
    axes, steps = [], []
    for lo, hi, periodic in m.chart_bounds:
        h = (hi - lo) / resolution
        offset = 0.0 if periodic else 0.5
        axes.append(lo + (np.arange(resolution) + offset) * h)
        steps.append(h)
    return axes, np.array(steps)


def _stencil_edges(shape, periodic, radius):
    """Index pairs of grid neighbours within Chebyshev ``radius``."""
    ndim = len(shape)
    idx = np.indices(shape).reshape(ndim, -1).T
    flat = np.ravel_multi_index(idx.T, shape)
    offsets = np.array(np.meshgrid(*[np.arange(-radius, radius + 1)] * ndim, indexing="ij"))
    offsets = offsets.reshape(ndim, -1).T
    offsets = offsets[np.any(offsets != 0, axis=1)]
    rows, cols = [], []
    for off in offsets:
        nb = idx + off
        ok = np.ones(len(idx), dtype=bool)
        for j in range(ndim):
            if periodic[j]:
                nb[:, j] %= shape[j]
            else:
                ok &= (nb[:, j] >= 0) & (nb[:, j] < shape[j])
        rows.append(flat[ok])
        cols.append(np.ravel_multi_index(nb[ok].T, shape))
    return np.concatenate(rows), np.concatenate(cols)


def build_mesh(m, resolution, k=8, stencil=3, ball=2.5):
    """Quadrature mesh on a uniform chart grid.

    The neighbourhood graph joins each node to its grid neighbours within
    ``stencil`` index steps, to every node within ``ball`` mesh spacings and to
    its ``k`` nearest embedded neighbours; edge lengths are chord lengths in the
    ambient space. ``k`` is doubled until the graph is connected.
    """
    if resolution < 8:
        raise ParameterError("mesh resolution must be >= 8")
    axes, steps = _grid_axes(m, resolution)
    grid = np.meshgrid(*axes, indexing="ij")
    nodes = np.column_stack([g.ravel() for g in grid])
    points = m.embed(nodes)
    metric = m.metric(nodes)
    vol_density = np.sqrt(np.clip(np.linalg.det(metric), 0.0, None))
    weights = vol_density * np.prod(steps)

    shape = (resolution,) * m.intrinsic_dim
    periodic = [p for _, _, p in m.chart_bounds]
    srows, scols = _stencil_edges(shape, periodic, stencil)
    n = len(nodes)
    tree = cKDTree(points)
    nn_dist, _ = tree.query(points, k=2)
    spacing = float(nn_dist[:, 1].max())
    pairs = tree.query_pairs(ball * spacing, output_type="ndarray")
    srows = np.concatenate([srows, pairs[:, 0]])
    scols = np.concatenate([scols, pairs[:, 1]])
    kk = min(k, n - 1)
    while True:
        _, nbrs = tree.query(points, k=kk + 1)
        krows = np.repeat(np.arange(n), kk)
        kcols = nbrs[:, 1:].ravel()
        rows = np.concatenate([srows, krows])
        cols = np.concatenate([scols, kcols])
        keep = rows != cols
        # coo -> csr sums duplicates, so collapse them to unique undirected pairs
        pairs = np.unique(
            np.column_stack([np.minimum(rows[keep], cols[keep]), np.maximum(rows[keep], cols[keep])]),
            axis=0,
        )
        rows, cols = pairs[:, 0], pairs[:, 1]
        lengths = np.linalg.norm(points[rows] - points[cols], axis=1)
        graph = sparse.coo_matrix((lengths, (rows, cols)), shape=(n, n)).tocsr()
        graph = graph.maximum(graph.T).tocsr()
        ncomp, _ = csgraph.connected_components(graph, directed=False)
        if ncomp == 1:
            break
        if kk >= n - 1:
            raise MeshError("neighbourhood graph is disconnected; raise resolution")
        kk = min(2 * kk, n - 1)
        logger.info("mesh graph disconnected, retrying with k=%d", kk)

    return ManifoldMesh(
        nodes=nodes,
        points=points,
        weights=weights,
        resolution=resolution,
        graph=graph,
        spacing=spacing,
    )


def single_point_mesh(point):
    """Degenerate one-node mesh (test fixture)."""
    point = np.asarray(point, dtype=float).reshape(1, -1)
    return ManifoldMesh(
        nodes=np.zeros((1, 0)),
        points=point,
        weights=np.ones(1),
        resolution=1,
        graph=sparse.csr_matrix((1, 1)),
        spacing=0.0,
    )


def kato_radius(K, intrinsic_dim, log_factor=math.log(2.0)):
    """``sqrt((d'-1)/K) * log_factor``; ``log 2`` by default, ``log 4`` for the diameter bound."""
    if K <= 0:
        raise ParameterError("K must be positive")
    if intrinsic_dim < 2:
        raise ParameterError("the Kato radius needs d' >= 2")
    return math.sqrt((intrinsic_dim - 1) / K) * log_factor


def kato_integrand(m, nodes):
    return np.maximum(m.intrinsic_dim - 1 - m.ricci_lower(nodes), 0.0)


def kato_constant(mesh, m, R, chunk=256):
    """Largest ball average of ``(d' - 1 - ric_-)_+`` over radius-``R`` geodesic balls."""
    if R <= 0:
        raise ParameterError("R must be positive")
    if R < mesh.spacing:
        raise ResolutionError(
            f"ball radius {R:.4g} is below the mesh spacing {mesh.spacing:.4g}"
        )
    f = kato_integrand(m, mesh.nodes)
    wf = mesh.weights * f
    best = 0.0
    for _, rows in mesh.iter_rows(limit=R, chunk=chunk):
        inside = rows <= R
        avg = (inside @ wf) / (inside @ mesh.weights)
        best = max(best, float(avg.max()))
    return best


def kato_constants(mesh, m, K):
    """Kato constant at both canonical radii (``log 2`` and ``log 4`` conventions)."""
    out = {}
    for name, factor in (("log2", math.log(2.0)), ("log4", math.log(4.0))):
        R = kato_radius(K, m.intrinsic_dim, factor)
        out[name] = {"R": R, "kappa": kato_constant(mesh, m, R)}
    return out


def diameter_empirical(mesh, chunk=256):
    if mesh.size <= 1:
        return 0.0
    best = 0.0
    for _, rows in mesh.iter_rows(chunk=chunk):
        best = max(best, float(rows.max()))
    return best


def _model_volume(K, dim, radius):
    # integral_0^radius s(u)^{d'-1} du with s(u) = sinh(u sqrt(K/(d'-1)))
    if dim == 1:
        return radius
    scale = math.sqrt(K / (dim - 1))
    val, _ = integrate.quad(lambda u: math.sinh(u * scale) ** (dim - 1), 0.0, radius)
    return val


def bishop_gromov_check(mesh, K, x, r, R, intrinsic_dim, tol=None):
    """Compare mesh ball-volume ratios against the hyperbolic model space.

    Returns ``(lhs, rhs, holds)`` with ``lhs = vol B_R(x) / vol B_r(x)``. The
    default tolerance ``d' * spacing / r`` absorbs whole-cell ball membership.
    """
    if K <= 0:
        raise ParameterError("K must be positive")
    if r > R or r <= 0:
        raise ParameterError("need 0 < r <= R")
    if r == R:
        return 1.0, 1.0, True
    row = mesh.geodesic_rows(int(x), limit=R)[0]
    small = mesh.weights[row <= r].sum()
    big = mesh.weights[row <= R].sum()
    lhs = float(big / small)
    rhs = _model_volume(K, intrinsic_dim, R) / _model_volume(K, intrinsic_dim, r)
    if tol is None:
        tol = intrinsic_dim * mesh.spacing / r
    return lhs, rhs, bool(lhs <= rhs * (1.0 + tol))


@dataclass
class GeometrySummary:
    intrinsic_dim: int
    K: float
    K_eff: float
    rho: float
    kappa: float
    kappa_log4: float
    diameter_empirical: float
    B: float = 0.0
    L: float = 0.0

    def as_dict(self):
        return dict(self.__dict__)


def effective_K(K_measured, floor=1.0 + 1e-6):
    """Lift a degenerate curvature magnitude into the large-K regime of the bounds."""
    return max(float(K_measured), floor)


def summarize(m, mesh, B=0.0, L=0.0):
    """Measured geometric inputs for the log-Sobolev bounds."""
    ric = m.ricci_lower(mesh.nodes)
    K = max(0.0, float(-ric.min()))
    K_eff = effective_K(K)
    if m.intrinsic_dim >= 2:
        kap = kato_constants(mesh, m, K_eff)
        kappa, kappa4 = kap["log2"]["kappa"], kap["log4"]["kappa"]
    else:
        kappa = kappa4 = 0.0
    return GeometrySummary(
        intrinsic_dim=m.intrinsic_dim,
        K=K,
        K_eff=K_eff,
        rho=m.rho,
        kappa=kappa,
        kappa_log4=kappa4,
        diameter_empirical=diameter_empirical(mesh),
        B=B,
        L=L,
    )


def write_mesh_csv(mesh, path):
    dc = mesh.nodes.shape[1]
    da = mesh.points.shape[1]
    header = ["node_index"] + [f"theta{j}" for j in range(dc)] + [f"x{j}" for j in range(da)]
    header.append("weight")
    table = np.column_stack([np.arange(mesh.size), mesh.nodes, mesh.points, mesh.weights])
    fmt = ["%d"] + ["%.17g"] * (dc + da + 1)
    np.savetxt(path, table, delimiter=",", header=",".join(header), comments="", fmt=fmt)


def write_geodesic_bin(matrix, path):
    """Row-major float64 little-endian dump preceded by two uint64 ``n, n``."""
    matrix = np.ascontiguousarray(matrix, dtype="<f8")
    n0, n1 = matrix.shape
    with open(path, "wb") as fh:
        fh.write(struct.pack("<QQ", n0, n1))
        fh.write(matrix.tobytes(order="C"))


def read_geodesic_bin(path):
    with open(path, "rb") as fh:
        n0, n1 = struct.unpack("<QQ", fh.read(16))
        data = np.frombuffer(fh.read(), dtype="<f8")
    return data.reshape(n0, n1)
