"""Command-line entry point: ``collres <subcommand> [--config PATH] [--out PATH] ...``.

Exit codes: 0 success, 1 invalid configuration, 2 numerical failure,
3 diagnostic threshold exceeded (map-check only).
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import config as config_mod
from .errors import ConfigError, DegenerateSpectrumError, DomainError, ScatteringSolverError
from .experiments import COMMANDS

log = logging.getLogger("collres")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_DIAGNOSTIC = 0, 1, 2, 3


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON config (or a result's metadata block)")
    common.add_argument("--out", metavar="PATH", help="CSV output path; a .json mirror is written alongside")
    common.add_argument("--seed", type=int, help="override run.seed")
    common.add_argument("--threads", type=int, help="worker processes for sweeps and ensembles")
    common.add_argument("--backend", choices=["approx", "exact"], help="scattering amplitude backend")
    common.add_argument("--gamma", type=float, help="collision rate (overrides run.gamma)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="collres", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("map-check", parents=[common], help="build the collision map and report diagnostics")
    traj = sub.add_parser("trajectory", parents=[common], help="Poissonian collision trajectory")
    traj.add_argument("--t-max", type=float)
    traj.add_argument("--dephase", action="store_true", default=None, help="fully dephase after each collision")
    traj.add_argument("--ensemble", type=int, metavar="M", help="average M trajectories instead of one")
    sub.add_parser("steady", parents=[common], help="steady state of the master equation")
    sub.add_parser("sweep", parents=[common], help="steady states over the configured grid")
    est = sub.add_parser("estimate", parents=[common], help="order-of-magnitude coherence estimate")
    est.add_argument("--compare", action="store_true", default=None, help="add the full steady-state |rho01|")
    return parser


def _effective_config(args):
    cfg = config_mod.load(args.config) if args.config else config_mod.from_dict({})
    cfg = config_mod.override(cfg, seed=args.seed, threads=args.threads, backend=args.backend)
    run = {}
    if args.gamma is not None:
        run["gamma"] = args.gamma
    if getattr(args, "t_max", None) is not None:
        run["t_max"] = args.t_max
    if getattr(args, "dephase", None):
        run["dephase"] = True
    if getattr(args, "ensemble", None) is not None:
        run["ensemble"] = True
        run["trajectories"] = args.ensemble
    if getattr(args, "compare", None):
        run["compare"] = True
    if run:
        doc = cfg.to_dict()
        doc["run"].update(run)
        cfg = config_mod.from_dict(doc)
    return cfg


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = _effective_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        table = COMMANDS[args.command](cfg)
    except (DomainError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ScatteringSolverError, DegenerateSpectrumError, np.linalg.LinAlgError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    if args.out:
        csv_path, json_path = table.write(args.out)
        log.info("wrote %s and %s", csv_path, json_path)
    else:
        sys.stdout.write(table.to_csv())
    return table.metadata.get("exit_status", EXIT_OK)


if __name__ == "__main__":
    sys.exit(main())
