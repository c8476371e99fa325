"""
Commands Module - Subcommand Registration

Importing this module registers every subcommand with the command registry.

Usage:
    import commands  # All subcommands are now registered

    from commands.registry import get_registry
    registry = get_registry()
    registry.get_handler("simulate")(args)
"""

# Import order is the order subcommands appear in --help
from commands import simulate
from commands import fit_correspondence
from commands import calibrate
from commands import reconstruct_depth
from commands import reconstruct_hyper
from commands import evaluate
from commands import noise_sweep

from commands.registry import get_registry, register_command

__all__ = [
    'simulate',
    'fit_correspondence',
    'calibrate',
    'reconstruct_depth',
    'reconstruct_hyper',
    'evaluate',
    'noise_sweep',
    'get_registry',
    'register_command',
]
