"""
Command-line entry point for the dumbbell eigenvalue lab.

Exit codes: 0 when every check passes, 2 when a checked invariant fails, 1 on configuration or
operational errors.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Union

from app.core.errors import ConfigError, LabError
from app.models.config import default_config_json, load_config
from app.services.experiments import ExperimentRunner
from app.utils.artifacts import ArtifactWriter
from app.utils.settings import configure_logging, get_settings

logger = logging.getLogger(__name__)

COMMANDS = ["mesh", "solve", "sweep-eps", "nodal", "decay", "obstacle", "report", "oracle-check"]
EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CHECK_FAILED = 2


def run(
    command: str,
    config_path: Optional[Union[str, Path]] = None,
    out: Optional[Union[str, Path]] = None,
    jobs: Optional[int] = None,
    seed: Optional[int] = None,
) -> int:
    """
    Run one command and map its outcome to an exit code.

    Args:
        command: One of COMMANDS
        config_path: JSON config file, or None for the defaults
        out: Output directory overriding output.directory
        jobs: Worker processes overriding output.jobs and DUMBBELL_JOBS
        seed: Solver seed overriding solver.seed

    Returns:
        int: 0 on success, 2 if an invariant check failed, 1 on error
    """
    try:
        config = load_config(config_path)
        if command not in COMMANDS:
            raise ConfigError(f"unknown command '{command}', expected one of {', '.join(COMMANDS)}")
        if seed is not None:
            config = config.model_copy(update={"solver": config.solver.model_copy(update={"seed": int(seed)})})
        n_jobs = jobs or config.output.jobs or get_settings().jobs
        writer = ArtifactWriter(Path(out or config.output.directory), config.output.formats)
        outcome = ExperimentRunner(config, writer, n_jobs).run(command)
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        for detail in e.errors:
            logger.error(f"  {detail}")
        return EXIT_ERROR
    except (LabError, OSError) as e:
        logger.error(f"{command} failed: {type(e).__name__}: {e}")
        return EXIT_ERROR

    writer.write_manifest(command, config.config_hash(), config.solver.seed)
    for check in outcome.failed:
        logger.error(f"Check failed: {check.name} ({check.detail})")
    logger.info(f"{command}: {len(outcome.checks) - len(outcome.failed)}/{len(outcome.checks)} checks passed")
    return EXIT_CHECK_FAILED if outcome.failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dumbbell-lab", description="Laplace eigenvalue experiments on planar dumbbells")
    parser.add_argument("command", nargs="?", choices=COMMANDS)
    parser.add_argument("--config", help="JSON experiment config")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--jobs", type=int, help="worker processes")
    parser.add_argument("--seed", type=int, help="solver seed")
    parser.add_argument("--log-level", help="overrides LOG_LEVEL")
    parser.add_argument("--print-defaults", action="store_true", help="print the default config and exit")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level)
    if args.print_defaults:
        print(default_config_json())
        return EXIT_OK
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_ERROR
    if args.jobs is not None and args.jobs < 1:
        logger.error("--jobs must be at least 1")
        return EXIT_ERROR
    return run(args.command, args.config, args.out, args.jobs, args.seed)


if __name__ == "__main__":
    sys.exit(main())
