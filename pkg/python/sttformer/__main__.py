#!/usr/bin/env python3
"""
Entry point for the ``sttformer`` / ``sttf`` command line.

Exit codes:
  0    success
  1    usage error (bad flags, invalid config, missing paths or checkpoints)
  2    invariant or tolerance failure (gradient check, divergence, ...)
  130  interrupted
"""

import argparse
import logging
import os
import sys
from typing import List, Optional, TextIO

from .commands import COMMANDS
from .commands.base import EXIT_INVARIANT, EXIT_USAGE, CommandError
from .errors import CheckpointError, ConfigError, SkeletonFormatError, SkeletonParseError, SttfError

logger = logging.getLogger("sttformer.cli")

USAGE_ERRORS = (ConfigError, CheckpointError, SkeletonFormatError, SkeletonParseError)


class UsageError(Exception):
    """Raised instead of argparse's print-and-exit on bad flags."""


class ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser(stdout: Optional[TextIO] = None, stderr: Optional[TextIO] = None) -> ArgumentParser:
    prog = os.path.basename(sys.argv[0]) if sys.argv and sys.argv[0] else "sttformer"
    if prog not in ("sttformer", "sttf"):
        prog = "sttformer"
    parser = ArgumentParser(prog=prog, description="Spatio-temporal tuple transformer for skeleton action recognition.")
    parser.add_argument("--verbose", "-v", action="store_true", help="debug logging")
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND")
    subparsers.required = True
    for name, command_cls in COMMANDS.items():
        command = command_cls(stdout, stderr)
        sub = subparsers.add_parser(name, help=command.help, description=command.help)
        command.add_arguments(sub)
        sub.set_defaults(_command=command)
    return parser


def configure_logging(verbose: bool) -> None:
    root = logging.getLogger("sttformer")
    if not root.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter("%(levelname)s:%(name)s: %(message)s"))
        root.addHandler(handler)
    root.setLevel(logging.DEBUG if verbose else logging.INFO)


def main(argv: Optional[List[str]] = None, stdout: Optional[TextIO] = None, stderr: Optional[TextIO] = None) -> int:
    """Run one subcommand and return its exit code."""
    err = stderr or sys.stderr
    parser = build_parser(stdout, stderr)
    try:
        options = vars(parser.parse_args(sys.argv[1:] if argv is None else argv))
        configure_logging(options.pop("verbose"))
        command = options.pop("_command")
        options.pop("command", None)
        return command.handle(**options)
    except UsageError as e:
        print(f"Error: {e}", file=err)
        return EXIT_USAGE
    except CommandError as e:
        print(f"Error: {e}", file=err)
        return e.exit_code
    except USAGE_ERRORS as e:
        print(f"Error: {e}", file=err)
        return EXIT_USAGE
    except SttfError as e:
        print(f"Error: {e}", file=err)
        return EXIT_INVARIANT
    except KeyboardInterrupt:
        print("\nInterrupted", file=err)
        return 130


if __name__ == "__main__":
    sys.exit(main())
