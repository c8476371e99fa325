"""
Command Registry - CLI Subcommand Registration System

Subcommand modules register themselves on import, so new subcommands need
no change to the entry point.

Classes:
    - CommandMetadata: Metadata for a subcommand
    - CommandRegistry: Centralized subcommand registry

Functions:
    - register_command(): Registers a new subcommand
    - get_registry(): Gets the global registry instance
"""

import argparse
import logging
from typing import Callable, Dict, List, Tuple

log = logging.getLogger(__name__)

Handler = Callable[[argparse.Namespace], int]
Configure = Callable[[argparse.ArgumentParser], None]


class CommandMetadata:
    """
    Metadata for a subcommand.
    """

    def __init__(self, name: str, help: str, description: str = "", artifacts: Tuple[str, ...] = ()):
        """
        Args:
            name: Subcommand name as typed on the command line
            help: One-line summary for the top-level help
            description: Longer text for the subcommand's own help
            artifacts: Files the subcommand writes, relative to its output directory
        """
        self.name = name.lower()
        self.help = help
        self.description = description or help
        self.artifacts = tuple(artifacts)

    def __repr__(self) -> str:
        return f"CommandMetadata(name='{self.name}')"


class CommandRegistry:
    """
    Centralized subcommand registry.

    Example:
        >>> registry = get_registry()
        >>> registry.add_subparsers(parser, [common_parser()])
        >>> registry.get_handler("simulate")(args)
    """

    def __init__(self):
        self._commands: Dict[str, Dict[str, object]] = {}

    def register(self, name: str, handler: Handler, configure: Configure, metadata: CommandMetadata) -> None:
        name_lower = name.lower()
        if name_lower in self._commands:
            log.warning("Command '%s' already registered, overwriting", name)
        self._commands[name_lower] = {"handler": handler, "configure": configure, "metadata": metadata}
        log.debug("Registered command: %s", name_lower)

    def _entry(self, name: str) -> Dict[str, object]:
        name_lower = name.lower()
        if name_lower not in self._commands:
            available = ", ".join(self._commands)
            raise ValueError(f"Command '{name}' not registered. Available commands: {available}")
        return self._commands[name_lower]

    def get_handler(self, name: str) -> Handler:
        return self._entry(name)["handler"]

    def get_metadata(self, name: str) -> CommandMetadata:
        return self._entry(name)["metadata"]

    def list_commands(self) -> List[str]:
        return list(self._commands)

    def is_registered(self, name: str) -> bool:
        return name.lower() in self._commands

    def add_subparsers(self, parser: argparse.ArgumentParser, parents: List[argparse.ArgumentParser]) -> None:
        """Adds one subparser per registered command, in registration order."""
        sub = parser.add_subparsers(dest="command", metavar="<command>")
        sub.required = True
        for name, entry in self._commands.items():
            metadata = entry["metadata"]
            child = sub.add_parser(name, help=metadata.help, description=metadata.description, parents=parents)
            entry["configure"](child)
            child.set_defaults(handler=entry["handler"])


_registry = CommandRegistry()


def register_command(name: str, handler: Handler, configure: Configure, help: str,
                     description: str = "", artifacts: Tuple[str, ...] = ()) -> None:
    """
    Convenience function to register a subcommand.

    Args:
        name: Subcommand name (e.g., "simulate")
        handler: Called with the parsed arguments; returns the exit code
        configure: Adds the subcommand's own flags
        help: One-line summary
        description: Longer help text
        artifacts: Files written below the output directory
    """
    _registry.register(name, handler, configure, CommandMetadata(name, help, description, artifacts))


def get_registry() -> CommandRegistry:
    return _registry
