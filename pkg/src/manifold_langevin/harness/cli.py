"""Command-line entry point: ``manifold-langevin`` or ``python -m manifold_langevin``.

Exit codes: 0 success, 2 invalid input (config, flags or parameter domain),
3 failure while computing.
"""

import argparse
import csv
import json
import logging
import sys

import yaml

from ..errors import ConfigError, DomainError, ParameterError, ResolutionError
from ..geometry import MANIFOLDS, build_mesh, kato_constant, make_manifold
from . import config as cfgmod
from .experiments import bounds_report
from .runner import OUTPUT_ENV, _clean, run

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 2, 3
INVALID = (ConfigError, DomainError, ParameterError, ResolutionError)


def _parse_param(text):
    key, sep, value = text.partition("=")
    if not sep or not key:
        raise ConfigError(f"--param expects key=value, got {text!r}")
    return key, yaml.safe_load(value)


def cmd_run(args):
    cfg = cfgmod.load(args.config)
    if args.seed is not None:
        cfg["seed"] = args.seed
    record = run(cfg, args.out)
    print(json.dumps({"run_id": record.run_id, "path": str(record.path),
                      "summary_hash": record.summary_hash, "summary": _clean(record.summary)}, indent=2))


def cmd_validate(args):
    cfg = cfgmod.load(args.config)
    print(f"ok: {cfg['experiment']} (config hash {cfgmod.config_hash(cfg)[:12]})")


def cmd_defaults(args):
    sys.stdout.write(cfgmod.emit(cfgmod.default_config(args.experiment)))


def cmd_bounds(args):
    params = {"K": args.K, "dprime": args.dprime, "kappa": args.kappa, "sigma": args.sigma,
              "L": args.L, "B": args.B, "D": args.D, "resolution": args.resolution,
              "allow_out_of_domain": args.allow_out_of_domain,
              "manifold": {"kind": args.manifold} if args.manifold else None}
    cfg = cfgmod.resolve({"experiment": "bounds_report", "params": params})
    rows = bounds_report(cfg).tables["bounds"]
    if args.format == "json":
        print(json.dumps(_clean(rows), indent=2))
        return
    columns = []
    for row in rows:
        columns += [k for k in row if k not in columns]
    writer = csv.DictWriter(sys.stdout, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: ("" if v is None else v) for k, v in row.items()})


def cmd_kato(args):
    spec = dict(_parse_param(p) for p in args.param)
    spec["kind"] = args.manifold
    try:
        manifold = make_manifold(spec)
    except TypeError as exc:
        raise ConfigError(f"bad manifold parameters: {exc}") from exc
    mesh = build_mesh(manifold, args.resolution)
    kappa = kato_constant(mesh, manifold, args.R)
    print(json.dumps({"manifold": manifold.describe(), "R": args.R, "resolution": args.resolution,
                      "mesh_nodes": mesh.size, "kappa": kappa}))


def build_parser():
    parser = argparse.ArgumentParser(prog="manifold-langevin", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment config and write a run directory")
    p.add_argument("config")
    p.add_argument("--seed", type=int, help="override the config's first seed")
    p.add_argument("--out", help=f"output root (default ${OUTPUT_ENV} or ./runs)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("validate", help="check a config file without running it")
    p.add_argument("config")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("defaults", help="print the full default config of an experiment")
    p.add_argument("experiment", choices=cfgmod.EXPERIMENTS)
    p.set_defaults(func=cmd_defaults)

    p = sub.add_parser("bounds", help="evaluate the log-Sobolev and diameter bounds")
    p.add_argument("--K", type=float, default=2.0)
    p.add_argument("--dprime", type=int, default=2)
    p.add_argument("--kappa", type=float, default=4.0)
    p.add_argument("--sigma", type=float, default=0.01)
    p.add_argument("--L", type=float, default=0.0)
    p.add_argument("--B", type=float, default=0.0)
    p.add_argument("--D", type=float, default=None, help="diameter override for the general bound")
    p.add_argument("--manifold", choices=sorted(MANIFOLDS), help="add rows from measured geometry")
    p.add_argument("--resolution", type=int, default=32)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--allow-out-of-domain", action="store_true")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("kato", help="Kato constant of a manifold at radius R")
    p.add_argument("manifold", choices=sorted(MANIFOLDS))
    p.add_argument("R", type=float)
    p.add_argument("--resolution", type=int, default=32)
    p.add_argument("--param", action="append", default=[], metavar="KEY=VALUE",
                   help="manifold parameter, e.g. --param radius=2")
    p.set_defaults(func=cmd_kato)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except INVALID as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # anything else is a runtime failure
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK
