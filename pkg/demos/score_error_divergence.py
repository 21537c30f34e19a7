"""
An inexact score eventually pulls the sampler away
==================================================

With the exact score, single-level Langevin at a small noise level keeps
improving. Adding a fixed smooth error field of size ``eps`` makes the W2
curve turn around: the best stopping time ``t*`` moves earlier as ``eps``
grows, and running longer only degrades the samples.
"""

import numpy as np

from manifold_langevin import (
    Circle,
    NoiseSchedule,
    annealed_langevin,
    divergence_detect,
    make_oracle,
    perturb_oracle,
    score_error,
    w2_exact,
)
from manifold_langevin import _rng

sigma = 0.2
oracle = make_oracle(Circle())
schedule = NoiseSchedule((sigma,), (1000,), step_scale=0.0048)
chains = 1024
ref = oracle.sample_prior(chains, [0, 2])
x0 = _rng.normals(0, np.arange(chains), 0, 2, _rng.INIT) + [0.3, 0.0]

for eps in (0.0, 0.1, 0.5, 1.0):
    score = perturb_oracle(oracle, eps, seed=0)
    measured = score_error(score, oracle, sigma)
    log = annealed_langevin(score, schedule, chains, 2, seed=0, snapshot_every=83, x0=x0)
    series = [(s.time, w2_exact(s.points, ref)) for s in log.snapshots if s.kind != "level_end"]
    res = divergence_detect(series)
    print(f"eps = {eps:3.1f} (measured {measured:.3f}): t* = {res.t_star:.2f}, "
          f"degradation x{res.degradation:.2f}, diverged = {res.diverged}")
