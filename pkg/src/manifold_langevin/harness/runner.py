"""Run directories: execute a resolved config and persist everything it produced.

Layout of ``<root>/<run_id>/``::

    manifest.json      config echo, config hash, status, artifact list
    summary.json       deterministic summary statistics
    <table>.csv        one CSV per driver table, header row first
    clouds/<name>.csv  selected final point clouds
    ERROR              present only if the run failed (traceback inside)
"""

import csv
import datetime
import hashlib
import json
import math
import os
import traceback
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .experiments import DRIVERS

OUTPUT_ENV = "MANIFOLD_LANGEVIN_OUTPUT"
DEFAULT_OUTPUT = "runs"


@dataclass
class RunRecord:
    run_id: str
    path: Path
    manifest: dict
    artifacts: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    @property
    def summary_hash(self):
        return summary_hash(self.summary)


def _clean(value):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    return value


def summary_hash(summary):
    blob = json.dumps(_clean(summary), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


def output_root(out=None):
    return Path(out or os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT)


def _new_run_dir(root, chash):
    stamp = datetime.datetime.now(datetime.timezone.utc).strftime("%Y%m%dT%H%M%S")
    base = f"{stamp}-{chash[:8]}"
    root.mkdir(parents=True, exist_ok=True)
    for k in range(1000):
        run_id = base if k == 0 else f"{base}-{k}"
        try:
            (root / run_id).mkdir()
            return run_id, root / run_id
        except FileExistsError:
            continue
    raise RuntimeError(f"could not allocate a run directory under {root}")


def write_table(path, rows):
    columns = []
    for row in rows:
        for key in row:
            if key not in columns:
                columns.append(key)
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: ("" if v is None else v) for k, v in row.items()})


def _write_json(path, doc):
    with open(path, "w") as fh:
        json.dump(_clean(doc), fh, indent=2, sort_keys=False)
        fh.write("\n")


def run(config, out=None):
    """Execute a config (raw mapping or resolved) and write its run directory.

    Validation happens before any directory is created, so an invalid config
    leaves nothing behind. A failure during the experiment leaves the partial
    directory with an ``ERROR`` marker and re-raises.
    """
    cfg = cfgmod.resolve(config)
    chash = cfgmod.config_hash(cfg)
    run_id, path = _new_run_dir(output_root(out), chash)
    manifest = {
        "run_id": run_id,
        "experiment": cfg["experiment"],
        "preset_version": cfgmod.PRESET_VERSION,
        "config_hash": chash,
        "seeds": [cfg["seed"] + i for i in range(cfg["seeds"])],
        "config": cfg,
        "status": "running",
        "artifacts": [],
    }
    _write_json(path / "manifest.json", manifest)
    try:
        outcome = DRIVERS[cfg["experiment"]](cfg)
        artifacts = []
        for name, rows in outcome.tables.items():
            write_table(path / f"{name}.csv", rows)
            artifacts.append(f"{name}.csv")
        if outcome.clouds:
            (path / "clouds").mkdir()
            for name, pts in outcome.clouds.items():
                np.savetxt(path / "clouds" / f"{name}.csv", pts, delimiter=",",
                           header=",".join(f"x{i}" for i in range(pts.shape[1])), comments="")
                artifacts.append(f"clouds/{name}.csv")
        _write_json(path / "summary.json", outcome.summary)
        artifacts.append("summary.json")
    except Exception:
        (path / "ERROR").write_text(traceback.format_exc())
        manifest["status"] = "failed"
        _write_json(path / "manifest.json", manifest)
        raise
    manifest["status"] = "complete"
    manifest["artifacts"] = artifacts
    manifest["summary_hash"] = summary_hash(outcome.summary)
    _write_json(path / "manifest.json", manifest)
    return RunRecord(run_id, path, manifest, artifacts, outcome.summary)


def rerun(run_dir, out=None):
    """Run again from the config stored in an existing run directory."""
    with open(Path(run_dir) / "manifest.json") as fh:
        manifest = json.load(fh)
    return run(manifest["config"], out)
