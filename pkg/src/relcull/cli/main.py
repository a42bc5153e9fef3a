"""
Command-line entry point
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from pydantic import ValidationError

from src.relcull import __version__
from src.relcull.cli.commands import curate, data, discriminator, evaluation, heads, labels, report
from src.relcull.cli.context import RunContext
from src.relcull.config import Settings, load_settings, settings
from src.relcull.exceptions import RelcullError, UsageError

logger = logging.getLogger(__name__)

LOG_FORMAT = "[%(asctime)s] %(levelname)s %(name)s: %(message)s"


class CliParser(argparse.ArgumentParser):
    """ArgumentParser that raises UsageError instead of exiting with status 2"""

    def error(self, message: str):
        raise UsageError(f"{self.prog}: error: {message}")


def _common_flags() -> argparse.ArgumentParser:
    # SUPPRESS keeps a subparser from overwriting a value given before the subcommand
    common = CliParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--config", default=argparse.SUPPRESS, help="dotenv-style file of RELCULL_* keys")
    common.add_argument("--out-dir", dest="out_dir", default=argparse.SUPPRESS)
    common.add_argument("--log-level", dest="log_level", default=argparse.SUPPRESS)
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS)
    return common


def build_parser() -> CliParser:
    common = _common_flags()
    parser = CliParser(prog="relcull", description="Scene-graph predicate curation toolkit", parents=[common])
    parser.add_argument("--version", action="version", version=f"relcull {__version__}")
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND")
    subparsers.required = True
    for module in (data, labels, discriminator, curate, evaluation, report, heads):
        module.register(subparsers, common)
    return parser


def resolve_settings(args: argparse.Namespace) -> Settings:
    """Flags > environment > --config file > defaults"""
    config_file = getattr(args, "config", None)
    if config_file is not None and not Path(config_file).is_file():
        raise UsageError(f"config file {config_file} does not exist")
    overrides = {name: getattr(args, name, None) for name in Settings.model_fields}
    try:
        resolved = load_settings(config_file, **overrides)
    except ValidationError as e:
        first = e.errors()[0]
        field = ".".join(str(part) for part in first["loc"])
        raise UsageError(f"invalid setting {field}: {first['msg']}") from e
    if not isinstance(logging.getLevelName(resolved.log_level.upper()), int):
        raise UsageError(f"unknown log level '{resolved.log_level}'")
    return resolved


def run_cli(argv: Optional[Sequence[str]] = None) -> int:
    """Run one subcommand; returns 0 on success, 1 on usage errors, 2 on data errors"""
    argv: List[str] = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print(e, file=sys.stderr)
        return e.exit_code
    except SystemExit as e:
        # --help and --version
        return int(e.code or 0)

    try:
        resolved = resolve_settings(args)
        logging.getLogger().setLevel(resolved.log_level.upper())
        ctx = RunContext(command=args.command, argv=argv, settings=resolved)
        logger.info(f"Running {args.command}")
        args.handler(args, ctx)
        ctx.write_manifest()
    except RelcullError as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"relcull {args.command}: error: {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"relcull {args.command}: error: {e}", file=sys.stderr)
        return 2
    return 0


def main() -> None:
    logging.basicConfig(level=settings.log_level.upper(), format=LOG_FORMAT)
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
