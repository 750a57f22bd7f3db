"""
frm-lab command line.

Configuration is merged in increasing precedence:
    1. Settings (environment variables / .env, see app.config)
    2. --config FILE, flat KEY=value lines, keys = ExperimentConfig fields
    3. command-line flags
       (accepted before or after the subcommand; after wins)

Exit status:
    0  success
    1  consistency failure, other lab error, or I/O error
    2  usage error: bad flags, bad config file, out-of-range values
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Optional

from dotenv import dotenv_values
from pydantic import ValidationError

from app.config import settings
from app.errors import ConsistencyError, FaradayLabError
from app.models.analysis import ExperimentConfig
from app.services.experiment_runner import ExperimentRunner

logger = logging.getLogger("frm_cli")

# Subcommand → ExperimentConfig.experiment
SUBCOMMANDS = {
    "identities": "identities",
    "six-state": "six-state",
    "qpt": "qpt",
    "compensate": "compensation",
}

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


class UsageError(Exception):
    """Bad flags or config file contents."""


def _common_flags(default: Any = None) -> argparse.ArgumentParser:
    """
    Flags accepted both before and after the subcommand.

    The top-level copy defaults to None; the subcommand copy uses SUPPRESS so
    a flag given before the subcommand is not reset by the subparser.
    """
    common = argparse.ArgumentParser(add_help=False, argument_default=default)
    common.add_argument("--config", type=Path, help="Flat KEY=value config file.")
    common.add_argument("--seed", type=int, help="Master seed for every generator stream.")
    common.add_argument("--shots", type=int, help="Shots per measurement setting; 0 = exact probabilities.")
    common.add_argument("--out", dest="output_dir", type=Path, help="Output directory.")
    common.add_argument("--turn", choices=["mirror", "frm"], help="Path terminator.")
    common.add_argument("-p", "--depolarizing-p", dest="depolarizing_p", type=float, help="Depolarizing knob on qubit 2.")
    common.add_argument("--mode", dest="disturbance_mode", choices=["pockels_pair", "haar"], help="Disturbance model.")
    common.add_argument("--steps", type=int, help="Ergodic time steps.")
    common.add_argument("--repetitions", type=int, help="Independent QPT repetitions.")
    common.add_argument("--identity-samples", dest="identity_samples", type=int, help="Disturbances per identity check.")
    common.add_argument("--oracle-samples", dest="oracle_samples", type=int, help="Haar samples for the fidelity oracle.")
    common.add_argument(
        "-v",
        "--verbose",
        action="store_true",
        default=False if default is None else default,
        help="Debug logging.",
    )
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags(argparse.SUPPRESS)
    parser = argparse.ArgumentParser(
        prog="frm-lab",
        parents=[_common_flags()],
        epilog="Flags may be given before or after the subcommand; after wins.",
        description="Simulate and analyze the Faraday mirror: six-state tables, process tomography, compensation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("identities", parents=[common], help="Verify the algebraic identities.")
    sub.add_parser("six-state", parents=[common], help="Six-state reflection mapping table.")
    sub.add_parser("qpt", parents=[common], help="Entanglement-assisted process tomography of the turn.")
    sub.add_parser("compensate", parents=[common], help="Ergodic round-trip compensation experiment.")
    return parser


def _settings_defaults() -> dict[str, Any]:
    return {
        "seed": settings.default_seed,
        "shots": settings.default_shots,
        "depolarizing_p": settings.default_depolarizing_p,
        "steps": settings.default_steps,
        "disturbance_mode": settings.default_disturbance_mode,
        "turn": settings.default_turn,
        "identity_samples": settings.identity_samples,
        "oracle_samples": settings.oracle_samples,
        "output_dir": settings.output_dir,
    }


def read_config_file(path: Path) -> dict[str, Any]:
    """
    Parse a flat KEY=value file. Keys are case-insensitive ExperimentConfig
    field names; unknown keys surface later as validation errors.
    """
    if not path.is_file():
        raise UsageError(f"Config file not found: {path}")
    values = dotenv_values(path)
    merged = {}
    for key, value in values.items():
        if value is None:
            raise UsageError(f"Config key {key!r} has no value")
        merged[key.strip().lower()] = value.strip()
    return merged


def merge_config(args: argparse.Namespace) -> ExperimentConfig:
    """Settings < config file < flags, validated as an ExperimentConfig."""
    values = _settings_defaults()
    if args.config is not None:
        values.update(read_config_file(args.config))

    flags = {
        key: getattr(args, key)
        for key in (
            "seed",
            "shots",
            "output_dir",
            "turn",
            "depolarizing_p",
            "disturbance_mode",
            "steps",
            "repetitions",
            "identity_samples",
            "oracle_samples",
        )
        if getattr(args, key) is not None
    }
    values.update(flags)
    values["experiment"] = SUBCOMMANDS[args.command]
    return ExperimentConfig(**values)


def _configure_logging(verbose: bool) -> None:
    level = logging.DEBUG if verbose else getattr(logging, settings.log_level.upper(), logging.INFO)
    logging.basicConfig(
        level=level,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    _configure_logging(args.verbose)

    try:
        config = merge_config(args)
    except (UsageError, ValidationError) as exc:
        print(f"frm-lab: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    try:
        summary = ExperimentRunner(config).run()
    except ConsistencyError as exc:
        logger.error(f"Consistency check failed: {exc}")
        print(f"frm-lab: consistency failure: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except FaradayLabError as exc:
        logger.error(f"{type(exc).__name__}: {exc}")
        print(f"frm-lab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except OSError as exc:
        logger.error(f"I/O failure: {exc}")
        print(f"frm-lab: cannot write artifacts: {exc}", file=sys.stderr)
        return EXIT_FAILURE

    print(summary.headline)
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
