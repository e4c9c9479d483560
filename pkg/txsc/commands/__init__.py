"""CLI subcommands; each module exposes `register(subparsers)`."""

from . import contracts, simulation

COMMAND_MODULES = (contracts, simulation)
