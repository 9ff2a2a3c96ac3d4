#!/usr/bin/env python3
"""
challenge_dp_main.py — CLI лаборатории challenge-DP для онлайн-классификации.
Подкоманды: counter-bench × pop-run × pop-sweep × coin-game × audit × ldim × history.
"""

import argparse
import asyncio
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import ValidationError

from config.settings import (
    ensure_directories_exist,
    settings,
    setup_logging,
    validate_environment,
)
from commands import HANDLERS
from library import ErrorHandlerMiddleware, RunTimer, stats_manager
from library.enum import AdversaryStyle, AuditGame, Command, LearnerKind, PoolMode
from library.errors import ConfigError
from library.models import ExperimentConfig, MechanismConstants

logger = logging.getLogger(__name__)

# Флаги, общие для всех подкоманд: имя поля конфига -> (флаги, параметры argparse)
COMMON_FLAGS = {
    "config": (("--config",), {"type": Path, "help": "JSON-файл конфигурации"}),
    "master_seed": (("--seed",), {"type": int, "help": "мастер-сид (64 бита)"}),
    "trials": (("--trials",), {"type": int, "help": "число испытаний"}),
    "no_noise": (("--no-noise",), {"action": "store_true", "default": None, "help": "нулевой шум (отладка)"}),
    "out": (("--out",), {"type": Path, "help": "путь файла результатов"}),
    "workers": (("--workers",), {"type": int, "help": "число процессов (0 = все ядра)"}),
}

BUDGET_FLAGS = {
    "epsilon": (("--epsilon",), {"type": float}),
    "delta": (("--delta",), {"type": float}),
    "beta": (("--beta",), {"type": float}),
    "horizon": (("--horizon",), {"type": int}),
}

COMMAND_FLAGS = {
    Command.COUNTER_BENCH: {
        "horizon_grid": (("--horizons",), {"type": int, "nargs": "+"}),
        "max_error_bound": (("--max-error-bound",), {"type": float}),
    },
    Command.POP_RUN: {
        "class_file": (("--class",), {"type": Path}),
        "k": (("--k",), {"type": int}),
        "r": (("--r",), {"type": int}),
        "learner": (("--learner",), {"choices": [v.value for v in LearnerKind]}),
        "style": (("--style",), {"choices": [v.value for v in AdversaryStyle]}),
        "target": (("--target",), {"type": int, "help": "индекс целевой гипотезы"}),
        "pool": (("--pool",), {"choices": [v.value for v in PoolMode]}),
        "mistake_bound": (("--mistake-bound",), {"type": float}),
    },
    Command.POP_SWEEP: {
        "class_files": (("--classes",), {"type": Path, "nargs": "+"}),
        "epsilon_grid": (("--epsilon-grid",), {"type": float, "nargs": "+"}),
        "class_file": (("--class",), {"type": Path}),
        "mistake_bound": (("--mistake-bound",), {"type": float}),
        "k": (("--k",), {"type": int}),
        "r": (("--r",), {"type": int}),
        "learner": (("--learner",), {"choices": [v.value for v in LearnerKind]}),
        "style": (("--style",), {"choices": [v.value for v in AdversaryStyle]}),
        "pool": (("--pool",), {"choices": [v.value for v in PoolMode]}),
    },
    Command.COIN_GAME: {
        "strategy": (("--strategy",), {"help": "стратегии через запятую"}),
        "coin_budget": (("--coin-budget",), {"type": int}),
        "coin_rounds": (("--coin-rounds",), {"type": int}),
        "lambdas": (("--lambdas",), {"type": float, "nargs": "+"}),
    },
    Command.AUDIT: {
        "class_file": (("--class",), {"type": Path}),
        "game": (("--game",), {"choices": [v.value for v in AuditGame]}),
        "prefix_length": (("--prefix-length",), {"type": int}),
        "alpha": (("--alpha",), {"type": float}),
        "group_size": (("--group-size",), {"type": int}),
        "games_count": (("--games",), {"type": int}),
        "k": (("--k",), {"type": int}),
        "r": (("--r",), {"type": int}),
        "learner": (("--learner",), {"choices": [v.value for v in LearnerKind]}),
        "slack": (("--slack",), {"type": float}),
    },
    Command.LDIM: {
        "class_file": (("--class",), {"type": Path}),
    },
    Command.HISTORY: {
        "limit": (("--limit",), {"type": int}),
    },
}

# Подкоманды без бюджета приватности
NO_BUDGET = {Command.COIN_GAME, Command.LDIM, Command.HISTORY}


def build_parser() -> argparse.ArgumentParser:
    """Парсер с подкомандами; все значения по умолчанию None, чтобы отличать заданные флаги."""
    parser = argparse.ArgumentParser(
        prog="challenge_dp_main.py",
        description="Эксперименты challenge-DP: счётчик, ChallengeAT, POP, игры, аудит.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in Command:
        sub = subparsers.add_parser(command.value)
        flags = dict(COMMON_FLAGS)
        if command not in NO_BUDGET:
            flags.update(BUDGET_FLAGS)
        flags.update(COMMAND_FLAGS[command])
        for dest, (names, options) in flags.items():
            sub.add_argument(*names, dest=dest, **{"default": None, **options})
    return parser


def load_config_file(path: Path) -> Dict[str, Any]:
    """Значения из JSON-файла конфигурации."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            values = json.load(f)
    except FileNotFoundError:
        raise ConfigError(f"файл конфигурации не найден: {path}")
    except json.JSONDecodeError as e:
        raise ConfigError(f"файл конфигурации {path} не является JSON: {e}")
    if not isinstance(values, dict):
        raise ConfigError(f"файл конфигурации {path} должен содержать JSON-объект")
    logger.info(f"📂 Конфигурация загружена из {path}")
    return values


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    """
    Итоговый конфиг команды.
    Приоритет: флаги CLI > JSON-файл > окружение CDP_* > значения по умолчанию.
    """
    command = Command(args.command)
    flags = {k: v for k, v in vars(args).items() if v is not None and k not in {"command", "config"}}
    file_values = load_config_file(args.config) if getattr(args, "config", None) else {}

    constants = MechanismConstants.from_settings().model_dump()
    constants.update(file_values.pop("constants", None) or {})

    values: Dict[str, Any] = {
        "master_seed": settings.master_seed,
        "trials": settings.trials or 1,
        "workers": settings.resolved_workers(),
        "no_noise": settings.noise_disabled,
    }
    values.update(file_values)
    values.update(flags)
    values["command"] = command
    values["constants"] = constants
    if values.get("workers") == 0:
        values["workers"] = settings.resolved_workers()

    try:
        return ExperimentConfig(**values)
    except ValidationError as e:
        raise ConfigError(f"некорректная конфигурация {command.value}: {e}")


async def dispatch(data: Dict[str, Any]) -> int:
    """Разрешение конфига и вызов обработчика подкоманды."""
    config = resolve_config(data["args"])
    data["config"] = config
    logger.info(f"▶️ {config.command.value}: seed={config.master_seed}, N={config.trials}, workers={config.workers}")
    return await HANDLERS[config.command](data)


async def main(argv: Optional[List[str]] = None) -> int:
    """Главная функция: логирование, реестр запусков, middleware, код выхода."""
    args = build_parser().parse_args(argv)

    setup_logging()
    ensure_directories_exist()
    validate_environment()
    await stats_manager.init_db()

    data: Dict[str, Any] = {"command": args.command, "args": args}
    timer = RunTimer(budget_seconds=settings.run_budget_seconds, label=args.command)
    timer.start()
    code = await ErrorHandlerMiddleware()(dispatch, data)
    elapsed = timer.stop()

    if args.command != Command.HISTORY.value:
        config = data.get("config")
        try:
            await stats_manager.save_run(
                command=args.command,
                master_seed=config.master_seed if config else settings.master_seed,
                trials=config.trials if config else 0,
                result_path=data.get("result_path"),
                verdict=data.get("verdict"),
                exit_code=code,
                elapsed_time=elapsed,
                summary=data.get("summary"),
            )
        except Exception as e:
            logger.warning(f"⚠️ Не удалось сохранить запуск в реестре: {e}")

    if data.get("result_path"):
        logger.info(f"📂 Результаты: {data['result_path']}")
    return code


if __name__ == "__main__":
    sys.exit(asyncio.run(main()))
