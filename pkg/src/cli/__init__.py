"""
Command implementations for the rahn entry point.
"""

from .commands import (
    cmd_evaluate,
    cmd_gen_fixture,
    cmd_reputation,
    cmd_sweep,
    cmd_train,
    load_grid,
    load_inputs,
)

__all__ = [
    "cmd_reputation",
    "cmd_train",
    "cmd_evaluate",
    "cmd_sweep",
    "cmd_gen_fixture",
    "load_grid",
    "load_inputs",
]
