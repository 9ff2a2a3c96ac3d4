"""
Реестр запусков CLI в SQLite.
Сохранение итогов команд, история, сводка по команде.
"""
import aiosqlite
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

from config.settings import settings

logger = logging.getLogger(__name__)


class StatsManager:
    """Менеджер истории запусков."""

    def __init__(self, db_path: Optional[Path] = None):
        self.db_path = db_path or settings.db_path

    async def init_db(self):
        """Инициализация базы данных."""
        self.db_path.parent.mkdir(parents=True, exist_ok=True)
        async with aiosqlite.connect(self.db_path) as db:
            await db.execute("""
                CREATE TABLE IF NOT EXISTS runs (
                    id INTEGER PRIMARY KEY AUTOINCREMENT,
                    command TEXT NOT NULL,
                    master_seed TEXT NOT NULL,
                    trials INTEGER NOT NULL,
                    result_path TEXT,
                    verdict TEXT,
                    exit_code INTEGER NOT NULL,
                    elapsed_time TEXT NOT NULL,
                    summary_json TEXT,
                    created_at TIMESTAMP DEFAULT CURRENT_TIMESTAMP
                )
            """)
            await db.commit()
            logger.debug("✅ Реестр запусков инициализирован")

    async def save_run(
        self,
        command: str,
        master_seed: int,
        trials: int,
        result_path: Optional[Path],
        verdict: Optional[str],
        exit_code: int,
        elapsed_time: str,
        summary: Optional[Dict[str, Any]] = None,
    ) -> int:
        """Сохраняет итог запуска, возвращает id записи."""
        async with aiosqlite.connect(self.db_path) as db:
            # 64-битный сид не помещается в знаковый INTEGER SQLite
            cursor = await db.execute("""
                INSERT INTO runs (
                    command, master_seed, trials, result_path,
                    verdict, exit_code, elapsed_time, summary_json
                ) VALUES (?, ?, ?, ?, ?, ?, ?, ?)
            """, (
                command,
                str(master_seed),
                trials,
                str(result_path) if result_path else None,
                verdict,
                exit_code,
                elapsed_time,
                json.dumps(summary, sort_keys=True, default=str) if summary is not None else None,
            ))
            await db.commit()
            logger.info(f"✅ Запуск {command} сохранён в реестре (id={cursor.lastrowid})")
            return cursor.lastrowid

    async def get_history(self, limit: int = 10) -> List[Dict[str, Any]]:
        """Последние запуски, новые первыми."""
        async with aiosqlite.connect(self.db_path) as db:
            db.row_factory = aiosqlite.Row
            cursor = await db.execute("""
                SELECT id, command, master_seed, trials, result_path,
                       verdict, exit_code, elapsed_time, created_at
                FROM runs
                ORDER BY id DESC
                LIMIT ?
            """, (limit,))
            rows = await cursor.fetchall()
            return [dict(r) for r in rows]

    async def get_command_stats(self, command: str) -> Dict[str, Any]:
        """Сводка по команде: число запусков, успешных, с нарушениями границ."""
        async with aiosqlite.connect(self.db_path) as db:
            db.row_factory = aiosqlite.Row
            cursor = await db.execute("""
                SELECT
                    COUNT(*) as total_runs,
                    SUM(CASE WHEN exit_code = 0 THEN 1 ELSE 0 END) as succeeded,
                    SUM(CASE WHEN exit_code = 4 THEN 1 ELSE 0 END) as bound_violations,
                    MAX(created_at) as last_run
                FROM runs
                WHERE command = ?
            """, (command,))
            row = await cursor.fetchone()

            if not row or row["total_runs"] == 0:
                return {"total_runs": 0, "succeeded": 0, "bound_violations": 0, "last_run": None}
            return dict(row)


# Глобальный экземпляр
stats_manager = StatsManager()
