# src/main.py

import argparse
import logging
import os
import sys
from typing import List, Optional

# Ensure the project root is on the Python path
project_root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if project_root not in sys.path:
    sys.path.insert(0, project_root)

from src.app import EXIT_FAILED, EXIT_OK, EXIT_USAGE, ExperimentApp
from src.config.experiment_config import load_experiment_config
from src.config.logging_config import setup_logging
from src.core.errors import (
    ConfigError, ConvergenceError, DomainError, PoissonBEError, PreconditionViolation, QubitBudgetError,
    VerificationFailure,
)

logger = logging.getLogger(__name__)

SUBCOMMANDS = {
    "assemble": ("assemble", "Export G and G' as Matrix Market plus the instance descriptor"),
    "census": ("census", "Value census of the instance, optionally a D-versus-F sweep"),
    "verify-encoding": ("verify_encoding", "Build the block-encoding circuit and check it by dense simulation"),
    "kappa-sweep": ("kappa_sweep", "Condition numbers over a range of levels with the fitted exponent"),
    "eps-sweep": ("eps_sweep", "Smallest nonzero solution magnitude over random sparse sources"),
    "precond-check": ("precond_check", "Preconditioned effective condition number lower bound"),
    "readout-demo": ("readout_demo", "Region observable across two refinement levels and a Hadamard test"),
    "laplacian-inverse-check": ("laplacian_inverse_check", "Sine-transform Laplacian inverse against dense inversion"),
}

# Usage errors first; VerificationFailure and ConvergenceError mean the run completed and a check failed.
EXIT_CODES = (
    (ConfigError, EXIT_USAGE),
    (QubitBudgetError, EXIT_USAGE),
    (DomainError, EXIT_USAGE),
    (VerificationFailure, EXIT_FAILED),
    (ConvergenceError, EXIT_FAILED),
    (PreconditionViolation, EXIT_FAILED),
)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="Experiment configuration (JSON)")
    common.add_argument("--out", default=None, help="Output directory; [OUTPUT] output_directory by default")
    common.add_argument("--seed", type=int, default=None, help="Overrides the seed in the configuration")
    common.add_argument("--log-level", default=None, help="Overrides [LOGGING] log_level")
    common.add_argument("--workers", type=int, default=None, help="Thread pool size for sweeps")

    parser = argparse.ArgumentParser(prog="poisson-be", description="Block-encoding verification for 3D Poisson operators")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in SUBCOMMANDS.items():
        subparsers.add_parser(name, parents=[common], help=help_text)
    return parser


def exit_code_for(error: PoissonBEError) -> int:
    for kind, code in EXIT_CODES:
        if isinstance(error, kind):
            return code
    return EXIT_FAILED


def main(argv: Optional[List[str]] = None) -> int:
    """Parses arguments, runs one subcommand and returns its exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK

    log_enabled = setup_logging(args.log_level)
    if log_enabled:
        logger.info(f"Running '{args.command}' with config '{args.config}'.")

    try:
        config = load_experiment_config(args.config).with_seed(args.seed)
        app = ExperimentApp(config, output_directory=args.out, workers=args.workers)
        method = getattr(app, SUBCOMMANDS[args.command][0])
        code = method()
    except PoissonBEError as e:
        code = exit_code_for(e)
        logger.error(f"'{args.command}' stopped: {e}")
        print(f"error: {e}", file=sys.stderr)
    except Exception as e:
        logger.critical(f"Unexpected error in '{args.command}': {e}", exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        code = EXIT_FAILED
    finally:
        if log_enabled:
            logger.info("Shutting down.")
    return code


if __name__ == "__main__":
    sys.exit(main())
