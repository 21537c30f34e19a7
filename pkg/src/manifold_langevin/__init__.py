"""Annealed Langevin sampling of distributions concentrated near embedded manifolds.

Modules: ``geometry`` (manifolds, meshes, curvature and Kato constants),
``target`` (smoothed-score oracles), ``dsm`` (denoising score matching),
``sampler`` (single- and multi-resolution annealed Langevin), ``metrics``
(Wasserstein-2 estimators and convergence diagnostics), ``bounds``
(log-Sobolev and sampling-error bounds) and ``harness`` (experiments and CLI).
"""

from .bounds import (
    BoundReport,
    cls_convolved,
    cls_gaussian,
    cls_general_log,
    cls_uniform_log,
    diameter_bound,
    smoothed_score_constants,
    spectral_gap_bound,
    sampling_error_argmin,
    sampling_error_bound,
    w2_decay_bound,
)
from .dsm import (
    PerturbedOracle,
    ScoreModel,
    dsm_empirical_loss,
    dsm_population_loss,
    fit_score_model,
    perturb_oracle,
    score_error,
)
from .errors import (
    ConfigError,
    DomainError,
    EvaluationError,
    ManifoldLangevinError,
    MeshError,
    NumericalError,
    ParameterError,
    ResolutionError,
    SamplerError,
    SingularityError,
)
from .geometry import (
    Circle,
    EmbeddedTorus,
    PhaseTorus,
    Sphere,
    bishop_gromov_check,
    build_mesh,
    kato_constant,
    make_manifold,
    summarize,
)
from .metrics import decay_fit, divergence_detect, mixing_time, w2, w2_exact, w2_sliced
from .sampler import (
    NoiseSchedule,
    ResolutionLadder,
    LadderLevel,
    TrajectoryLog,
    annealed_langevin,
    downsample,
    multires_annealed_langevin,
    upsample,
)
from .target import (
    CircleProductOracle,
    GaussianOracle,
    QuadratureOracle,
    dissipativity_check,
    lipschitz_check,
    make_oracle,
    uniform_target,
)

__all__ = [
    "BoundReport", "cls_convolved", "cls_gaussian", "cls_general_log", "cls_uniform_log",
    "diameter_bound", "smoothed_score_constants", "spectral_gap_bound", "sampling_error_argmin", "sampling_error_bound",
    "w2_decay_bound", "PerturbedOracle", "ScoreModel", "dsm_empirical_loss", "dsm_population_loss",
    "fit_score_model", "perturb_oracle", "score_error", "ConfigError", "DomainError",
    "EvaluationError", "ManifoldLangevinError", "MeshError", "NumericalError", "ParameterError",
    "ResolutionError", "SamplerError", "SingularityError", "Circle", "EmbeddedTorus", "PhaseTorus",
    "Sphere", "bishop_gromov_check", "build_mesh", "kato_constant", "make_manifold", "summarize",
    "decay_fit", "divergence_detect", "mixing_time", "w2", "w2_exact", "w2_sliced",
    "NoiseSchedule", "ResolutionLadder", "LadderLevel", "TrajectoryLog", "annealed_langevin",
    "downsample", "multires_annealed_langevin", "upsample", "CircleProductOracle",
    "GaussianOracle", "QuadratureOracle", "dissipativity_check", "lipschitz_check", "make_oracle",
    "uniform_target",
]

__version__ = "0.1.0"
