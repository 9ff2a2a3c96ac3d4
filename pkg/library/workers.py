"""
Параллельные испытания: пул процессов через run_in_executor, слияние по индексу задания.
"""
import asyncio
import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable, List, Sequence, Tuple

logger = logging.getLogger(__name__)


def chunk_ranges(total: int, parts: int) -> List[Tuple[int, int]]:
    """Разбить [0, total) на не более parts непрерывных кусков почти равной длины."""
    parts = max(1, min(parts, total))
    base, extra = divmod(total, parts)
    ranges, start = [], 0
    for i in range(parts):
        stop = start + base + (1 if i < extra else 0)
        if stop > start:
            ranges.append((start, stop))
        start = stop
    return ranges


async def run_trials(fn: Callable[..., Any], jobs: Sequence[Tuple], workers: int) -> List[Any]:
    """
    Выполнить fn(*job) для каждого задания.

    workers == 1 — в текущем процессе; иначе ProcessPoolExecutor. Результаты
    возвращаются в порядке заданий, независимо от порядка завершения.
    fn должна быть функцией уровня модуля, задания — сериализуемыми.
    """
    if workers <= 1 or len(jobs) <= 1:
        return [fn(*job) for job in jobs]

    loop = asyncio.get_running_loop()
    logger.info(f"▶️ {len(jobs)} заданий на {workers} процессах")
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [loop.run_in_executor(pool, fn, *job) for job in jobs]
        return list(await asyncio.gather(*futures))
