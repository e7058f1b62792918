import argparse
import logging
import sys
from typing import Dict, List, Optional, Sequence

from src.core.config import LabConfig
from src.core.errors import LabError
from src.ui.commands import Command, RunContext, default_commands, exit_code_for, load_document
from src.utils.log import configure_logging

logger = logging.getLogger(__name__)


class CommandManager:
    """Registry of subcommands, keyed by name."""

    def __init__(self, commands: Optional[Sequence[Command]] = None):
        self._commands: Dict[str, Command] = {}
        for command in commands if commands is not None else default_commands():
            self.add_command(command)

    def add_command(self, command: Command) -> None:
        self._commands[command.name] = command

    def names(self) -> List[str]:
        return list(self._commands)

    def get(self, name: str) -> Command:
        return self._commands[name]

    def attach(self, parser: argparse.ArgumentParser, common: argparse.ArgumentParser) -> None:
        subparsers = parser.add_subparsers(dest="command", metavar="COMMAND")
        subparsers.required = True
        for name, command in self._commands.items():
            sub = subparsers.add_parser(name, help=command.help, parents=[common])
            command.add_arguments(sub)
            sub.set_defaults(command_object=command)


def common_arguments() -> argparse.ArgumentParser:
    """Flags every subcommand accepts."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON spec or run document")
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), help="output format")
    common.add_argument("--workers", type=int, default=None, help="parallel workers (-1: all cores)")
    common.add_argument("--seed", type=int, default=None, help="seed for theta-grid jitter")
    common.add_argument("--log-level", default="WARNING")
    return common


class QuasiLabApp:
    def __init__(self, commands: Optional[Sequence[Command]] = None):
        self.title = LabConfig.get_app_title()
        self.manager = CommandManager(commands)

    def build(self) -> argparse.ArgumentParser:
        parser = argparse.ArgumentParser(prog=self.title.lower(),
                                         description=f"{self.title}: quasiperiodic Schroedinger operator lab")
        self.manager.attach(parser, common_arguments())
        return parser

    def run(self, argv: Optional[Sequence[str]] = None) -> int:
        parser = self.build()
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:
            return int(exc.code or 0)
        configure_logging(args.log_level)
        if args.workers is not None:
            LabConfig.set("WORKERS", args.workers)
        try:
            context = RunContext(args, load_document(args.config))
            return args.command_object.execute(context)
        except LabError as exc:
            code = exit_code_for(exc)
            print(f"{self.title} {args.command}: {exc}", file=sys.stderr)
            logger.debug("command failed", exc_info=True)
            return code
