"""
Таймер прогона команды: прошедшее время и async-сторож бюджета времени.
"""
import asyncio
import logging
import time
from typing import Optional

logger = logging.getLogger(__name__)


def format_elapsed(seconds: float) -> str:
    """Время в формате MM:SS."""
    seconds = max(0, int(seconds))
    return f"{seconds // 60:02d}:{seconds % 60:02d}"


class RunTimer:
    """Таймер прогона: в журнал и реестр запусков, в файл результатов не попадает."""

    def __init__(self, budget_seconds: Optional[float] = None, label: str = "run"):
        """
        Args:
            budget_seconds: Ожидаемая длительность; при превышении сторож пишет предупреждение
            label: Имя прогона для журнала
        """
        self.budget_seconds = budget_seconds
        self.label = label
        self.start_time: Optional[float] = None
        self.stop_time: Optional[float] = None
        self.task: Optional[asyncio.Task] = None

    async def _watch(self):
        """Внутренний метод сторожа."""
        try:
            await asyncio.sleep(self.budget_seconds)
            logger.warning(f"⚠️ {self.label}: превышен бюджет времени {format_elapsed(self.budget_seconds)}")
        except asyncio.CancelledError:
            logger.debug(f"⏰ Сторож {self.label} отменён")
            raise

    def start(self):
        """Запустить таймер (и сторожа, если задан бюджет и есть цикл событий)."""
        if self.start_time is not None:
            logger.warning("⚠️ Таймер уже запущен")
            return
        self.start_time = time.monotonic()
        if self.budget_seconds:
            try:
                self.task = asyncio.get_running_loop().create_task(self._watch())
            except RuntimeError:
                self.task = None
        logger.info(f"▶️ {self.label}: старт")

    def stop(self) -> str:
        """Остановить таймер, вернуть прошедшее время MM:SS."""
        if self.task and not self.task.done():
            self.task.cancel()
        if self.start_time is not None and self.stop_time is None:
            self.stop_time = time.monotonic()
        elapsed = self.elapsed_time()
        logger.info(f"🏁 {self.label}: завершено за {elapsed}")
        return elapsed

    def elapsed_seconds(self) -> float:
        if self.start_time is None:
            return 0.0
        end = self.stop_time if self.stop_time is not None else time.monotonic()
        return end - self.start_time

    def elapsed_time(self) -> str:
        """
        Прошедшее время в формате MM:SS.

        Returns:
            Строка вида "01:05" или "∞" если таймер не запускался
        """
        if self.start_time is None:
            return "∞"
        return format_elapsed(self.elapsed_seconds())
