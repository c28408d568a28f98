#!/usr/bin/env python3
"""
Main entry point for the qmms laboratory.
Wires generators, diagnostics, norms and experiments into report bundles.

Copyright (c) 2025 Teo693
Licensed under the MIT License - see LICENSE file for details.
"""

import argparse
import logging
import math
import sys
import time
from dataclasses import replace
from datetime import datetime
from typing import List, Optional

from src.cli.commands import HANDLERS
from src.core.config.app_config import AppConfig, configure_logging
from src.core.models.exceptions import QMMSError, SolverDiverged
from src.core.services.base_service import ServiceDependencies
from src.core.strategies.space_generation_strategy import SpaceGenerationFactory
from src.reports.exporters.bundle_exporter import BundleExporter
from src.reports.factories.experiment_factory import ExperimentFactory

logger = logging.getLogger(__name__)

EXIT_VERDICT = 1
EXIT_USAGE = 2

DIAGNOSTICS = ["net", "doubling", "h", "integrability", "ahlfors", "infinity", "index"]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output-dir", default=None, help="Directory for the report bundle (env QMMS_OUTPUT_DIR)")
    common.add_argument("--seed", type=int, default=None, help="Random seed (env QMMS_SEED)")
    common.add_argument("--jobs", type=int, default=None, help="Worker threads, 0 = all cores (env QMMS_JOBS)")
    common.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING, ... (env QMMS_LOG_LEVEL)")

    source = argparse.ArgumentParser(add_help=False)
    source.add_argument("--space", help="Space JSON file")
    source.add_argument("--name", choices=SpaceGenerationFactory.get_supported_names(), help="Generator name")
    source.add_argument("--params", default="", help="Generator parameters, e.g. n=10,beta=0.5")

    parser = argparse.ArgumentParser(
        prog="qmms",
        description="qmms - numerics laboratory for quasi-metric-measure spaces",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Usage examples:
  qmms space gen --name discrete_N --params n=10        # Space JSON + reference card
  qmms diag doubling --name exp_density --params beta=0.5 --c 2 --deltas 0.1,0.5,1
  qmms diag integrability --name gauss_density --params beta=2 --r 1
  qmms norm --space space.json --values 0,1 --alpha 1 --p 2
  qmms bump --space space.json --E0 0 --E1 3
  qmms certify --space space.json --family family_dir --epsilon 0.1
  qmms experiment --name exp0-bound                      # Measured vs closed-form bounds
        """,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    space = sub.add_parser("space", parents=[common], help="Generate example spaces")
    space.add_argument("action", choices=["gen"])
    space.add_argument("--name", required=True, choices=SpaceGenerationFactory.get_supported_names())
    space.add_argument("--params", default="")
    space.add_argument("--save-as", default=None, help="File stem of the space JSON (default: generator name)")

    diag = sub.add_parser("diag", parents=[common, source], help="Geometry diagnostics")
    diag.add_argument("kind", choices=DIAGNOSTICS)
    diag.add_argument("--eps", default="0.1,0.25,0.5,1", help="Scales for nets")
    diag.add_argument("--c", type=float, default=2.0, help="Doubling factor")
    diag.add_argument("--deltas", default="0.1,0.5,1", help="Radii for Delta_c")
    diag.add_argument("--r", type=float, default=1.0, help="Ball radius of the integrability functional")
    diag.add_argument("--T-max", dest="T_max", type=float, default=16.0, help="Last truncation of density lines")
    diag.add_argument("--r-grid", dest="r_grid", default="0.125,0.25,0.5,1", help="Radii for h and Ahlfors fits")
    diag.add_argument("--s", type=float, default=1.0, help="Ahlfors exponent")
    diag.add_argument("--x0", type=int, default=0, help="Base point for doubling at infinity")
    diag.add_argument("--R-grid", dest="R_grid", default="1,2,4,8", help="Radii for doubling at infinity")
    diag.add_argument(
        "--beta-grid", dest="beta_grid", default=None, help="Exponents of the index profile (default: 0.1 to 25.6)"
    )
    diag.add_argument("--threshold", type=float, default=None, help="Distortion cut-off of the index profile")

    norm = sub.add_parser("norm", parents=[common, source], help="Hajlasz-type (semi)norms")
    norm.add_argument("--u", help="Function JSON file")
    norm.add_argument("--values", help="Function values, comma separated")
    norm.add_argument("--alpha", type=float, required=True)
    norm.add_argument("--p", type=float, required=True)
    norm.add_argument("--q", type=float, default=math.inf)
    norm.add_argument("--kind", choices=["M", "TL", "N"], default="M")

    bump = sub.add_parser("bump", parents=[common, source], help="Holder bump between two sets")
    bump.add_argument("--E0", required=True, help="Indices of the zero set")
    bump.add_argument("--E1", required=True, help="Indices of the one set")
    bump.add_argument("--beta", type=float, default=None)
    bump.add_argument("--alpha", type=float, default=None)
    bump.add_argument("--p", type=float, default=2.0)
    bump.add_argument("--q", type=float, default=math.inf)

    certify = sub.add_parser("certify", parents=[common, source], help="Frechet certificate of a family")
    certify.add_argument("--family", required=True, help="Family directory")
    certify.add_argument("--epsilon", type=float, required=True)
    certify.add_argument("--cells", type=int, default=64, help="Cell budget")
    certify.add_argument("--p", type=float, default=2.0)
    certify.add_argument("--alpha", type=float, default=None)

    experiment = sub.add_parser("experiment", parents=[common], help="Named experiment bundles")
    experiment.add_argument("--name", required=True, choices=ExperimentFactory.get_supported_names())
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main application function"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else EXIT_USAGE

    config = AppConfig.from_env().with_run(
        command=args.command, seed=args.seed, jobs=args.jobs, output_dir=args.output_dir,
        flags={k: v for k, v in vars(args).items() if k not in ("output_dir", "seed", "jobs", "log_level")},
    )
    if args.log_level:
        config = replace(config, logging=replace(config.logging, level=args.log_level))
    if not config.validate():
        return EXIT_USAGE
    configure_logging(config.logging)

    print("🚀 Starting qmms...")
    print(f"📊 Command: {args.command}")
    print(f"📁 Output directory: {config.run.output_dir}")
    print(f"⏰ Start time: {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}")
    print("-" * 60)

    exporter = BundleExporter(config.run.output_dir)
    started = time.perf_counter()
    try:
        deps = ServiceDependencies.from_config(config)
        code = HANDLERS[args.command](args, deps, exporter)
    except SolverDiverged as e:
        print(f"❌ Solver diverged: {e}")
        code = EXIT_VERDICT
    except (QMMSError, ValueError) as e:
        logger.debug("usage error", exc_info=True)
        print(f"❌ {type(e).__name__}: {e}")
        code = EXIT_USAGE

    exporter.write_manifest(
        config.to_dict(),
        {"total_seconds": time.perf_counter() - started},
        {"exit_code": code},
    )
    return code


if __name__ == "__main__":
    sys.exit(main())
