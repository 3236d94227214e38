"""Command-line interface."""

from qmwf.cli.commands import COMMANDS, RunConfig
from qmwf.cli.run import build_parser, main

__all__ = ["COMMANDS", "RunConfig", "build_parser", "main"]
