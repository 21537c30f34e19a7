"""Annealed Langevin sampling, single- and multi-resolution.

Every chain draws its Gaussian increments from a counter-based generator
addressed by ``(seed, chain, global step)``, so a run is bit-reproducible and
independent of how chains are batched.
"""

import csv
import json
import logging
import math
import os
import time
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from . import _rng
from .errors import ConfigError, NumericalError, ParameterError, SamplerError

logger = logging.getLogger(__name__)

DEFAULT_SIGMAS = (1.0, 0.59, 0.35, 0.21, 0.12, 0.07, 0.04, 0.027, 0.016, 0.01)
DEFAULT_T = 100
DEFAULT_STEP_SCALE = 2e-5


def langevin_step(x, s, alpha, z):
    """``x + (alpha / 2) s + sqrt(alpha) z``."""
    if alpha < 0:
        raise ParameterError(f"step size must be nonnegative, got {alpha}")
    x = np.asarray(x, dtype=float)
    s = np.asarray(s, dtype=float)
    z = np.asarray(z, dtype=float)
    if x.shape != s.shape or x.shape != z.shape:
        raise ParameterError("x, s and z must have the same shape")
    return x + (0.5 * alpha) * s + math.sqrt(alpha) * z


@dataclass(frozen=True)
class NoiseSchedule:
    """Decreasing noise levels, steps per level and the global step scale.

    Level ``i`` uses ``alpha_i = step_scale * sigma_i^2 / sigma_ref^2``. By
    default ``sigma_ref`` is the last (smallest) sigma; truncated schedules
    cut from a longer one keep the parent's reference so their step sizes
    match it level for level.
    """

    sigmas: tuple
    steps: tuple
    step_scale: float = DEFAULT_STEP_SCALE
    sigma_ref: Optional[float] = None

    def __post_init__(self):
        sigmas = tuple(float(s) for s in self.sigmas)
        steps = tuple(int(t) for t in self.steps)
        object.__setattr__(self, "sigmas", sigmas)
        object.__setattr__(self, "steps", steps)
        if len(sigmas) != len(steps):
            raise ParameterError("sigmas and steps must have equal length")
        if any(s <= 0 for s in sigmas):
            raise ParameterError("noise levels must be positive")
        if any(b >= a for a, b in zip(sigmas, sigmas[1:])):
            raise ParameterError("noise levels must be strictly decreasing")
        if any(t < 0 for t in steps):
            raise ParameterError("step counts must be nonnegative")
        if not self.step_scale > 0:
            raise ParameterError("step_scale must be positive")
        if self.sigma_ref is not None and not self.sigma_ref > 0:
            raise ParameterError("sigma_ref must be positive")

    @classmethod
    def uniform(cls, sigmas, T=DEFAULT_T, step_scale=DEFAULT_STEP_SCALE, sigma_ref=None):
        return cls(tuple(sigmas), (T,) * len(sigmas), step_scale, sigma_ref)

    @classmethod
    def default(cls, T=DEFAULT_T, step_scale=DEFAULT_STEP_SCALE):
        """The ten-level schedule from 1 down to 0.01 with ``T`` steps each."""
        return cls.uniform(DEFAULT_SIGMAS, T, step_scale)

    @classmethod
    def geometric(cls, sigma_max, sigma_min, levels, T=DEFAULT_T, step_scale=DEFAULT_STEP_SCALE):
        """Log-uniformly spaced levels from ``sigma_max`` to ``sigma_min``."""
        if levels < 1:
            raise ParameterError("need at least one level")
        if levels == 1:
            sig = (float(sigma_max),)
        else:
            sig = tuple(np.geomspace(sigma_max, sigma_min, levels).tolist())
        return cls.uniform(sig, T, step_scale)

    @property
    def n_levels(self):
        return len(self.sigmas)

    @property
    def reference_sigma(self):
        if self.sigma_ref is not None:
            return self.sigma_ref
        return self.sigmas[-1] if self.sigmas else 1.0

    @property
    def alphas(self):
        ref = self.reference_sigma
        return tuple(self.step_scale * s**2 / ref**2 for s in self.sigmas)

    @property
    def total_steps(self):
        return sum(self.steps)

    @property
    def total_time(self):
        """Diffusion time covered: each step advances ``alpha / 2``."""
        return sum(0.5 * a * t for a, t in zip(self.alphas, self.steps))

    def select(self, start, stop=None):
        """Levels ``start:stop``, keeping this schedule's reference sigma."""
        return NoiseSchedule(
            self.sigmas[start:stop], self.steps[start:stop], self.step_scale, self.reference_sigma
        )

    def with_steps(self, T):
        return NoiseSchedule(self.sigmas, (int(T),) * len(self.sigmas), self.step_scale, self.sigma_ref)

    def to_dict(self):
        return {
            "sigmas": list(self.sigmas),
            "steps": list(self.steps),
            "step_scale": self.step_scale,
            "sigma_ref": self.sigma_ref,
        }


@dataclass
class Snapshot:
    step: int
    time: float
    level: int
    resolution: int
    kind: str  # "init", "periodic", "level_end" or "upsampled"
    points: np.ndarray


@dataclass
class Counters:
    score_evals: int = 0
    cost: int = 0
    wall_time: float = 0.0


@dataclass
class TrajectoryLog:
    seed: int
    n_chains: int
    snapshots: List[Snapshot] = field(default_factory=list)
    counters: Counters = field(default_factory=Counters)
    meta: dict = field(default_factory=dict)

    @property
    def final(self):
        return self.snapshots[-1].points

    def series(self, kinds=None):
        return [s for s in self.snapshots if kinds is None or s.kind in kinds]

    def level_ends(self):
        return self.series(("level_end",))

    def record(self, snap):
        last = self.snapshots[-1] if self.snapshots else None
        if last is not None and snap.step < last.step:
            raise SamplerError("snapshot steps must not go backwards")
        self.snapshots.append(snap)

    def export(self, path, config=None):
        """Write ``manifest.json`` and one CSV per snapshot under ``path``."""
        os.makedirs(path, exist_ok=True)
        files = []
        for k, snap in enumerate(self.snapshots):
            name = f"snapshot_{k:04d}_{snap.kind}.csv"
            with open(os.path.join(path, name), "w", newline="") as fh:
                writer = csv.writer(fh)
                dim = snap.points.shape[1]
                writer.writerow(["step", "level", "chain"] + [f"x{i}" for i in range(dim)])
                for c, row in enumerate(snap.points):
                    writer.writerow([snap.step, snap.level, c] + [repr(float(v)) for v in row])
            files.append(
                {"file": name, "step": snap.step, "time": snap.time, "level": snap.level,
                 "resolution": snap.resolution, "kind": snap.kind}
            )
        manifest = {
            "config": config,
            "seed": self.seed,
            "n_chains": self.n_chains,
            "counters": vars(self.counters),
            "meta": self.meta,
            "snapshots": files,
        }
        with open(os.path.join(path, "manifest.json"), "w") as fh:
            json.dump(manifest, fh, indent=2)
        return path


def _run_levels(x, score, schedule, seed, log, step0, time0, resolution, snapshot_every):
    """Advance ``x`` through every level of ``schedule``; returns state, step, time."""
    n, dim = x.shape
    chains = np.arange(n)
    step, t = step0, time0
    start = time.perf_counter()
    for level, (sigma, T, alpha) in enumerate(zip(schedule.sigmas, schedule.steps, schedule.alphas)):
        for _ in range(T):
            step += 1
            try:
                s = np.asarray(score(x, sigma), dtype=float)
            except Exception as exc:
                bad = np.nonzero(~np.all(np.isfinite(x), axis=1))[0]
                where = f" (first non-finite chain {bad[0]})" if len(bad) else ""
                raise SamplerError(
                    f"score evaluation failed at step {step}, level {level}, "
                    f"resolution {resolution}{where}: {exc}"
                ) from exc
            z = _rng.normals(seed, chains, step, dim)
            x = x + (0.5 * alpha) * s + math.sqrt(alpha) * z
            t += 0.5 * alpha
            log.counters.score_evals += n
            log.counters.cost += n * dim
            finite = np.all(np.isfinite(x), axis=1)
            if not finite.all():
                bad = int(np.nonzero(~finite)[0][0])
                logger.error("chain %d diverged at step %d", bad, step)
                raise SamplerError(f"chain {bad} produced non-finite values at step {step}, level {level}")
            if snapshot_every and step % snapshot_every == 0 and _ < T - 1:
                log.record(Snapshot(step, t, level, resolution, "periodic", x.copy()))
        log.record(Snapshot(step, t, level, resolution, "level_end", x.copy()))
    log.counters.wall_time += time.perf_counter() - start
    return x, step, t


def annealed_langevin(score, schedule, n_chains, dim, seed, snapshot_every=None, x0=None):
    """Annealed Langevin dynamics from a standard normal start.

    Parameters
    ----------
    score : callable
        ``score(x, sigma)`` on ``(n_chains, dim)`` batches.
    schedule : NoiseSchedule
    n_chains, dim : int
    seed : int
    snapshot_every : int, optional
        Store the cloud every this many global steps. Level ends are always
        stored; the last snapshot is the final cloud.
    x0 : array, optional
        Starting cloud replacing the standard normal initialization.

    Returns
    -------
    TrajectoryLog
    """
    if n_chains < 1 or dim < 1:
        raise ParameterError("n_chains and dim must be positive")
    log = TrajectoryLog(seed=seed, n_chains=n_chains)
    if x0 is None:
        x = _rng.normals(seed, np.arange(n_chains), 0, dim, _rng.INIT)
    else:
        x = np.array(x0, dtype=float, copy=True)
        if x.shape != (n_chains, dim):
            raise ParameterError(f"x0 must have shape {(n_chains, dim)}")
    log.record(Snapshot(0, 0.0, -1, 0, "init", x.copy()))
    _run_levels(x, score, schedule, seed, log, 0, 0.0, 0, snapshot_every)
    return log


def downsample(x):
    """Adjacent-pair means along the last axis."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    if n % 2:
        raise ParameterError(f"cannot downsample odd length {n}")
    return 0.5 * (x[..., 0::2] + x[..., 1::2])


def upsample(x):
    """Periodic linear interpolation doubling the last axis.

    Not an inverse of :func:`downsample`: ``downsample(upsample([2, 6]))`` is
    ``[3, 5]``.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1] < 1:
        raise ParameterError("cannot upsample an empty signal")
    out = np.empty(x.shape[:-1] + (2 * x.shape[-1],))
    out[..., 0::2] = x
    out[..., 1::2] = 0.5 * (x + np.roll(x, -1, axis=-1))
    return out


def downsample_matrix(n):
    return downsample(np.eye(n)).T


def upsample_matrix(n):
    return upsample(np.eye(n)).T


def operator_norm_check(matrix, tol=1e-9, max_iter=10_000, seed=0):
    """Largest singular value by power iteration on ``M^T M``.

    Returns ``(norm, contractive)`` with contractive meaning norm <= 1 + 1e-8.
    """
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or not np.all(np.isfinite(m)):
        raise ParameterError("operator_norm_check needs a finite matrix")
    gram = m.T @ m
    v = np.random.default_rng(seed).standard_normal(gram.shape[0])
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = gram @ v
        new = float(v @ w)
        norm_w = np.linalg.norm(w)
        if norm_w == 0:
            return 0.0, True
        v = w / norm_w
        if abs(new - lam) <= tol * max(abs(new), 1e-300):
            norm = math.sqrt(max(new, 0.0))
            return norm, norm <= 1 + 1e-8
        lam = new
    raise NumericalError(f"power iteration did not converge in {max_iter} iterations")


@dataclass
class LadderLevel:
    score: Callable
    schedule: NoiseSchedule


@dataclass
class ResolutionLadder:
    """Score providers and schedules from coarsest (index ``J``) to finest (0).

    ``levels[j]`` runs at dimension ``dim / 2**j``.
    """

    dim: int
    levels: Sequence[LadderLevel]
    n_chains: int = 512

    def __post_init__(self):
        if not self.levels:
            raise ConfigError("a ladder needs at least one level")
        if self.dim % (2**self.J):
            raise ConfigError(f"dimension {self.dim} is not divisible by 2^{self.J}")

    @property
    def J(self):
        return len(self.levels) - 1

    def dims(self):
        return [self.dim // 2**j for j in range(self.J + 1)]

    def nominal_cost(self):
        """``sum_j chains * steps_j * d_j``, known before running."""
        return sum(
            self.n_chains * lvl.schedule.total_steps * d for lvl, d in zip(self.levels, self.dims())
        )


def multires_annealed_langevin(ladder, seed, snapshot_every=None):
    """Anneal at the coarsest resolution, upsample, continue one level finer.

    The log marks each upsampled cloud (before any Langevin step at the new
    resolution) with kind ``"upsampled"``.
    """
    n = ladder.n_chains
    dims = ladder.dims()
    log = TrajectoryLog(seed=seed, n_chains=n, meta={"dims": dims})
    x = _rng.normals(seed, np.arange(n), 0, dims[-1], _rng.INIT)
    log.record(Snapshot(0, 0.0, -1, ladder.J, "init", x.copy()))
    step, t = 0, 0.0
    for j in range(ladder.J, -1, -1):
        if x.shape[1] != dims[j]:
            raise ConfigError(f"state has dimension {x.shape[1]}, level {j} expects {dims[j]}")
        level = ladder.levels[j]
        x, step, t = _run_levels(x, level.score, level.schedule, seed, log, step, t, j, snapshot_every)
        if j > 0:
            x = upsample(x)
            log.record(Snapshot(step, t, -1, j - 1, "upsampled", x.copy()))
    return log
