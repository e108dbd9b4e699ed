from __future__ import annotations

import argparse
import logging
import sys
from typing import Optional, Sequence

import numpy as np

from baxtertq.errors import (ConfigError, ContourPinchError, CrossCheckError, DegeneracyError, DomainError,
                             NonConvergenceError, PoleProximityError)
from baxtertq.pipeline import COMMANDS, SpectralMachine
from baxtertq.settings import RunConfig

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_NUMERIC = 2
EXIT_CONFIG = 3

NUMERIC_ERRORS = (NonConvergenceError, ContourPinchError, DegeneracyError, PoleProximityError, CrossCheckError,
                  DomainError, np.linalg.LinAlgError, ArithmeticError)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="baxtertq",
        description="Scalar Baxter t-Q equations for the q-Toda and Toda2 chains: Hill zeros, integral "
                    "equations, Bethe equations and spectrum reconstruction.")

    parser.add_argument("command", choices=sorted(COMMANDS), help="Which part of the pipeline to run.")
    parser.add_argument("--config", required=True, help="Path to the JSON run configuration.")
    parser.add_argument("--out", default=None, help="Output directory (default: outputs.directory).")
    parser.add_argument("--threads", type=int, default=None,
                        help="Worker threads (default: $BAXTER_NLIE_THREADS, else 2).")
    parser.add_argument("--strict", action="store_true", help="Also exit with code 2 when the run raised a warning.")
    parser.add_argument("-v", "--verbose", action="store_true", help="Log solver progress at DEBUG level.")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s")

    try:
        config = RunConfig.from_json(args.config)
        machine = SpectralMachine(config, args.command, threads=args.threads, out_dir=args.out)
        result = machine.run()
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG
    except NUMERIC_ERRORS as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_NUMERIC

    if result.failures:
        logger.warning(f"Failed invariants: {', '.join(result.failures)}")
    return result.exit_code(args.strict)


if __name__ == "__main__":
    sys.exit(main())
