# Commands Package
from .tail import register_tail_command
from .mincard import register_mincard_command
from .sumjn import register_sumjn_command
from .polytope import register_ehrhart_command, register_volume_command
from .check import register_check_command

__all__ = [
    'register_commands',
    'register_tail_command',
    'register_mincard_command',
    'register_sumjn_command',
    'register_ehrhart_command',
    'register_volume_command',
    'register_check_command',
]


def register_commands(subparsers):
    register_tail_command(subparsers)
    register_mincard_command(subparsers)
    register_sumjn_command(subparsers)
    register_ehrhart_command(subparsers)
    register_volume_command(subparsers)
    register_check_command(subparsers)
