"""
Общие помощники обработчиков команд.
"""
import functools
import logging
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np

from library.class_loader import load_class
from library.errors import ConfigError
from library.learners import FiniteHypothesisClass
from library.models import ExperimentConfig
from library.noise import RandomSource
from library.results import ResultWriter

logger = logging.getLogger(__name__)


def trial_source(master_seed: int, trial_index: int, zero_noise: bool) -> RandomSource:
    """Источник испытания; флаг шума передаётся явно (процессы пула не видят флагов CLI)."""
    return RandomSource.for_trial(master_seed, trial_index, zero_noise=zero_noise)


@functools.lru_cache(maxsize=32)
def cached_class(path: str) -> FiniteHypothesisClass:
    """Класс гипотез, загруженный один раз на процесс (кэш ldim живёт вместе с ним)."""
    return load_class(path)


def require_class(config: ExperimentConfig) -> FiniteHypothesisClass:
    if config.class_file is None:
        raise ConfigError(f"команде {config.command.value} нужен файл класса (--class)")
    return cached_class(str(config.class_file))


def finish(
    data: Dict[str, Any],
    writer: ResultWriter,
    summary: Dict[str, Any],
    verdict: Optional[str] = None,
) -> Path:
    """Записать результаты и передать итог в реестр запусков."""
    path = writer.close(summary)
    data["result_path"] = path
    data["summary"] = summary
    data["verdict"] = verdict
    return path


def quantile(values, q: float) -> float:
    """Квантиль выборки (метод lower: всегда одно из наблюдений)."""
    return float(np.quantile(np.asarray(values), q, method="lower"))
