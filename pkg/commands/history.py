"""
commands/history.py: последние запуски из реестра.
"""
import logging
from typing import Any, Dict

from library.stats import stats_manager

logger = logging.getLogger(__name__)


async def cmd_history(data: Dict[str, Any]) -> int:
    """Печать последних запусков: команда, вердикт, код выхода, время."""
    config = data["config"]
    runs = await stats_manager.get_history(config.limit)
    if not runs:
        print("📊 Запусков пока нет.")
        return 0

    print("📊 Последние запуски:")
    for run in runs:
        print(
            f"• #{run['id']} {run['command']}: {run['verdict'] or '—'}, "
            f"код {run['exit_code']}, {run['elapsed_time']} ({run['created_at']})"
        )
    return 0
