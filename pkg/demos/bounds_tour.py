"""
How large are the log-Sobolev bounds?
=====================================

The manifold bounds depend only on intrinsic quantities: the curvature lower
bound ``-K``, the intrinsic dimension ``d'`` and the Kato constant ``kappa``.
They are astronomically large, so everything is returned as a natural log.
"""

import numpy as np

from manifold_langevin import (
    EmbeddedTorus,
    build_mesh,
    cls_uniform_log,
    diameter_bound,
    summarize,
    sampling_error_argmin,
)
from manifold_langevin.bounds import bounds_for_manifold

print(f"diameter bound (K=2, d'=2, kappa=4): {diameter_bound(2.0, 2, 4.0):.2f}")
rep = cls_uniform_log(0.0, 2, 2.0, 4.0)
print(f"log c_LS, uniform measure: {rep.log_value:.2f}  (value representable: {rep.value is not None})")

# measured geometry of a torus of revolution
torus = EmbeddedTorus()
summary = summarize(torus, build_mesh(torus, 32))
print("measured:", {k: round(v, 3) for k, v in summary.as_dict().items()})
for r in bounds_for_manifold(summary, sigma=0.01):
    print(f"  {r.name:24s} log value {r.log_value:.4g}")

# the sampling-error bound has a finite best stopping time once eps > 0
ts = np.linspace(0.01, 10, 1000)
t_best, value, _ = sampling_error_argmin(ts, sigma=0.1, d=4, w0=10.0, c_ls=2.0, eps=1e-8, b=1.0, L=1.0, p_inf=1.0)
print(f"bound minimized at t = {t_best:.2f} (value {value:.3f})")
