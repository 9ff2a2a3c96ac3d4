"""
Обработчики подкоманд CLI.
"""
from library.enum import Command

from .audit import cmd_audit
from .coin_game import cmd_coin_game
from .counter_bench import cmd_counter_bench
from .history import cmd_history
from .ldim import cmd_ldim
from .pop_run import cmd_pop_run, cmd_pop_sweep

HANDLERS = {
    Command.COUNTER_BENCH: cmd_counter_bench,
    Command.POP_RUN: cmd_pop_run,
    Command.POP_SWEEP: cmd_pop_sweep,
    Command.COIN_GAME: cmd_coin_game,
    Command.AUDIT: cmd_audit,
    Command.LDIM: cmd_ldim,
    Command.HISTORY: cmd_history,
}

__all__ = [
    "HANDLERS",
    "cmd_audit",
    "cmd_coin_game",
    "cmd_counter_bench",
    "cmd_history",
    "cmd_ldim",
    "cmd_pop_run",
    "cmd_pop_sweep",
]
