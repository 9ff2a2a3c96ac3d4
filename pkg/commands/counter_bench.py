"""
commands/counter_bench.py: огибающая ошибки приватного счётчика по сетке горизонтов.
"""
import logging
import math
from typing import Any, Dict, List

import numpy as np

from library.counter import counter_error_bound, max_counter_error
from library.errors import AcceptanceBoundError
from library.results import ResultWriter
from library.workers import chunk_ranges, run_trials

from .common import finish, quantile, trial_source

logger = logging.getLogger(__name__)


def counter_chunk(
    horizon: int, epsilon: float, master_seed: int, start: int, stop: int, zero_noise: bool
) -> List[int]:
    """Максимальные ошибки испытаний [start, stop) при горизонте T."""
    return [
        max_counter_error(horizon, epsilon, trial_source(master_seed, idx, zero_noise).spawn(f"T{horizon}"))
        for idx in range(start, stop)
    ]


def loglog_slope(horizons: List[int], values: List[float]) -> float:
    """Наклон регрессии log(ошибка) на log(T) по точкам с положительной ошибкой."""
    points = [(math.log(t), math.log(v)) for t, v in zip(horizons, values) if v > 0]
    if len(points) < 2:
        return 0.0
    xs, ys = zip(*points)
    return float(np.polyfit(xs, ys, 1)[0])


async def cmd_counter_bench(data: Dict[str, Any]) -> int:
    """Квантили максимальной ошибки счётчика для каждого T из сетки."""
    config = data["config"]
    writer = ResultWriter(config)
    logger.info(f"▶️ counter-bench: T ∈ {config.horizon_grid}, ε={config.epsilon}, N={config.trials}")

    medians: List[float] = []
    violations = []
    for horizon in config.horizon_grid:
        jobs = [
            (horizon, config.epsilon, config.master_seed, start, stop, config.no_noise)
            for start, stop in chunk_ranges(config.trials, config.workers)
        ]
        errors = [e for chunk in await run_trials(counter_chunk, jobs, config.workers) for e in chunk]

        cell = {
            "horizon": horizon,
            "epsilon": config.epsilon,
            "trials": len(errors),
            "median": quantile(errors, 0.5),
            "q95": quantile(errors, 0.95),
            "max": max(errors),
            "lambda_shape": counter_error_bound(horizon, config.epsilon, config.beta, config.constants.c_lambda),
        }
        writer.record("cell", **cell)
        writer.metric("median_max_error", horizon, cell["median"])
        writer.metric("q95_max_error", horizon, cell["q95"])
        medians.append(cell["median"])
        if config.max_error_bound is not None and cell["q95"] > config.max_error_bound:
            violations.append(horizon)
        logger.info(f"✅ T={horizon}: медиана {cell['median']:g}, q95 {cell['q95']:g}")

    slope = loglog_slope(config.horizon_grid, medians)
    summary = {"loglog_slope": slope, "horizons": len(config.horizon_grid), "bound_violations": violations}
    finish(data, writer, summary, verdict="FAIL" if violations else "PASS")

    if violations:
        raise AcceptanceBoundError(
            f"q95 максимальной ошибки выше {config.max_error_bound} при T ∈ {violations}"
        )
    return 0
