"""Experiment configuration: per-experiment defaults, validation and YAML I/O.

A config file is YAML with these top-level tables (all optional except
``experiment``)::

    experiment: mixing_vs_dimension   # which driver to run
    seed: 0                           # first seed; seeds are seed, seed+1, ...
    seeds: 5                          # how many seeds
    target:   {...}                   # target distribution
    schedule: {...}                   # noise levels, steps per level, step scale
    sampler:  {...}                   # chain count, snapshot cadence
    metrics:  {...}                   # W2 estimator, reference size, floors
    params:   {...}                   # experiment-specific knobs

Each experiment has a complete default config (:data:`DEFAULTS`); a user file
is merged over it. Keys absent from the defaults are rejected, and values must
match the type of the default. Tables listed in :data:`OPAQUE` are replaced as
a whole and validated by the driver that consumes them.
"""

import copy
import hashlib
import json

import yaml

from ..errors import ConfigError
from ..sampler import DEFAULT_STEP_SCALE, DEFAULT_T, DEFAULT_SIGMAS

EXPERIMENTS = (
    "mixing_vs_dimension",
    "score_error_tradeoff",
    "multires_comparison",
    "dsm_consistency",
    "bounds_report",
    "prop_checks",
    "decay_contract",
)

PRESET_VERSION = 1

_SCHEDULE = {
    "sigmas": list(DEFAULT_SIGMAS),
    "geometric": None,  # or {sigma_max, sigma_min, levels}; replaces sigmas
    "steps": DEFAULT_T,
    "step_scale": DEFAULT_STEP_SCALE,
}

_METRICS = {
    "estimator": "auto",  # exact | sliced | auto (exact up to 2048 points)
    "n_projections": 128,
    "reference_size": None,  # defaults to the chain count
    "floor_repeats": 4,
    "window": 3,
}

DEFAULTS = {
    "mixing_vs_dimension": {
        "target": {"manifold": {"kind": "circle", "radius": 1.0}},
        "schedule": _SCHEDULE,
        "sampler": {"chains": 512, "snapshot_every": 20},
        "metrics": _METRICS,
        "params": {"dims": [4, 16, 64, 256]},
    },
    "score_error_tradeoff": {
        "target": {"manifold": {"kind": "circle", "radius": 1.0}},
        "schedule": {"steps": DEFAULT_T, "step_scale": 0.0048},
        "sampler": {"chains": 1024, "snapshot_every": 83},
        "metrics": _METRICS,
        "params": {
            "sigma": 0.2,
            "eps_values": [0.0, 0.1, 0.5, 1.0],
            "horizon_factor": 10,
            "init_shift": [0.3, 0.0],
            "divergence_tolerance": 1.2,
            "bound_constant": 1.0,
        },
    },
    "multires_comparison": {
        "target": {
            "manifold": {
                "kind": "phase_torus",
                "length": 32,
                "freq1": 1,
                "freq2": 3,
                "amplitude1": 1.0,
                "amplitude2": 1.0,
            }
        },
        "schedule": _SCHEDULE,
        "sampler": {"chains": 512, "snapshot_every": 0},
        "metrics": _METRICS,
        "params": {
            "J": 1,
            "presets": [
                "HRS",
                "LRS-↑",
                "LRS-↑-HRS-2",
                "LRS-↑-HRS-4",
                "LRS-↑-HRS-6",
                "LRS-5-↑-HRS-6",
                "LRS-2-↑-HRS-9",
            ],
        },
    },
    "dsm_consistency": {
        "params": {
            "ns": [1000, 10000, 100000],
            "sigmas": [0.5],
            "ridge": 1e-6,
            "probes": 4096,
            "targets": [
                {"kind": "gaussian", "dim": 2, "features": {"n_centers": 0, "constant": False}},
                {"kind": "circle", "radius": 1.0, "features": {"n_centers": 32}},
            ],
        },
    },
    "bounds_report": {
        "params": {
            "K": 2.0,
            "dprime": 2,
            "kappa": 4.0,
            "sigma": 0.01,
            "L": 0.0,
            "B": 0.0,
            "D": None,
            "manifold": None,  # e.g. {kind: embedded_torus}; adds measured-geometry rows
            "resolution": 32,
            "allow_out_of_domain": False,
        },
    },
    "prop_checks": {
        "schedule": _SCHEDULE,
        "metrics": _METRICS,
        "params": {
            "manifolds": [{"kind": "circle"}, {"kind": "sphere"}],
            "quadrature_resolution": 48,
            "probes": 256,
            "operator_sizes": [8, 16, 32],
            "bishop_gromov": {
                "manifold": {"kind": "embedded_torus"},
                "resolution": 32,
                "centers": 16,
                "radii": [0.5, 1.0, 2.0, 3.0],
            },
            "pushforward": {
                "variances": [1.0, 2.0, 0.5, 1.5, 1.0, 2.0, 0.5, 1.5],
                "sigma": 0.5,
                "steps": 600,
                "step_size": 0.02,
                "init_shift": 3.0,
                "chains": 512,
                "snapshot_every": 30,
            },
        },
    },
    "decay_contract": {
        "metrics": dict(_METRICS, floor_repeats=8),
        "params": {
            "dim": 2,
            "sigma": 0.5,
            "steps": 600,
            "step_size": 0.02,
            "init_shift": 3.0,
            "chains": 1000,
            "snapshot_every": 30,
        },
    },
}

_SEEDS = {
    "mixing_vs_dimension": 5,
    "score_error_tradeoff": 5,
    "multires_comparison": 5,
    "dsm_consistency": 5,
    "bounds_report": 1,
    "prop_checks": 5,
    "decay_contract": 3,
}

# tables replaced wholesale; the drivers validate their content
OPAQUE = {
    ("target", "manifold"),
    ("params", "targets"),
    ("params", "manifolds"),
    ("params", "manifold"),
    ("params", "bishop_gromov", "manifold"),
    ("schedule", "geometric"),
}


def default_config(experiment):
    if experiment not in DEFAULTS:
        raise ConfigError(f"unknown experiment {experiment!r}; choose from {', '.join(EXPERIMENTS)}")
    cfg = {"experiment": experiment, "seed": 0, "seeds": _SEEDS[experiment]}
    cfg.update(copy.deepcopy(DEFAULTS[experiment]))
    return cfg


def _type_ok(value, default):
    if default is None or value is None:
        return True
    if isinstance(default, bool):
        return isinstance(value, bool)
    if isinstance(default, int):
        return isinstance(value, int) and not isinstance(value, bool)
    if isinstance(default, float):
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    return isinstance(value, type(default))


def _merge(user, default, path):
    out = copy.deepcopy(default)
    for key, value in user.items():
        where = path + (key,)
        if key not in default:
            raise ConfigError(f"unknown key {'.'.join(where)}")
        base = default[key]
        if where in OPAQUE:
            if value is not None and not isinstance(value, (dict, list)):
                raise ConfigError(f"{'.'.join(where)} must be a table or list")
            out[key] = copy.deepcopy(value)
        elif isinstance(base, dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{'.'.join(where)} must be a table")
            out[key] = _merge(value, base, where)
        elif not _type_ok(value, base):
            raise ConfigError(
                f"{'.'.join(where)} must be of type {type(base).__name__}, got {value!r}"
            )
        else:
            out[key] = float(value) if isinstance(base, float) and value is not None else value
    return out


def resolve(raw):
    """Validate a user mapping and fill in defaults; raises ConfigError."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    experiment = raw.get("experiment")
    if experiment is None:
        raise ConfigError("config needs an 'experiment' key")
    cfg = _merge(raw, default_config(experiment), ())
    if cfg["seeds"] < 1:
        raise ConfigError("seeds must be >= 1")
    _check_semantics(cfg)
    return cfg


def _check_semantics(cfg):
    sched = cfg.get("schedule")
    if sched and "sigmas" in sched:
        sig = sched["sigmas"]
        if sched.get("geometric") is None and (
            not sig or any(b >= a for a, b in zip(sig, sig[1:])) or min(sig) <= 0
        ):
            raise ConfigError("schedule.sigmas must be positive and strictly decreasing")
        geo = sched.get("geometric")
        if geo is not None and set(geo) != {"sigma_max", "sigma_min", "levels"}:
            raise ConfigError("schedule.geometric needs exactly sigma_max, sigma_min, levels")
    if sched and sched.get("steps", 0) < 0:
        raise ConfigError("schedule.steps must be nonnegative")
    metrics = cfg.get("metrics")
    if metrics and metrics["estimator"] not in ("auto", "exact", "sliced"):
        raise ConfigError("metrics.estimator must be auto, exact or sliced")
    sampler = cfg.get("sampler")
    if sampler and sampler["chains"] < 1:
        raise ConfigError("sampler.chains must be >= 1")


def parse(text):
    """Parse YAML text into a resolved config."""
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML: {exc}") from exc
    return resolve(raw)


def load(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse(text)


def emit(cfg):
    """YAML text that :func:`parse` maps back to ``cfg``."""
    return yaml.safe_dump(cfg, sort_keys=False, allow_unicode=True)


def config_hash(cfg):
    blob = json.dumps(cfg, sort_keys=True, ensure_ascii=True).encode()
    return hashlib.sha256(blob).hexdigest()
