"""
Обвязка запуска: пул испытаний, таймер, middleware ошибок, файлы результатов, реестр.
"""
import asyncio
import logging

import pytest
from pydantic import BaseModel, Field

from commands.counter_bench import counter_chunk
from config.settings import settings
from library.enum import Command
from library.errors import AcceptanceBoundError, ParameterError, ProtocolError
from library.middlewares import ErrorHandlerMiddleware
from library.models import ExperimentConfig
from library.results import ResultWriter, read_results
from library.stats import stats_manager
from library.timers import RunTimer, format_elapsed
from library.workers import chunk_ranges, run_trials


@pytest.mark.parametrize(
    "total, parts, expected",
    [
        (10, 3, [(0, 4), (4, 7), (7, 10)]),
        (2, 8, [(0, 1), (1, 2)]),
        (5, 1, [(0, 5)]),
        (5, 0, [(0, 5)]),
    ],
)
def test_chunk_ranges(total, parts, expected):
    assert chunk_ranges(total, parts) == expected


def test_pool_matches_inline():
    jobs = [(32, 1.0, 9, start, stop, False) for start, stop in chunk_ranges(12, 3)]
    inline = asyncio.run(run_trials(counter_chunk, jobs, 1))
    pooled = asyncio.run(run_trials(counter_chunk, jobs, 3))
    assert pooled == inline
    assert sum(len(chunk) for chunk in inline) == 12


@pytest.mark.parametrize("seconds, expected", [(0, "00:00"), (65.9, "01:05"), (-3, "00:00"), (3600, "60:00")])
def test_format_elapsed(seconds, expected):
    assert format_elapsed(seconds) == expected


def test_timer_not_started():
    assert RunTimer().elapsed_time() == "∞"


def test_timer_watchdog_warns(caplog):
    async def scenario():
        timer = RunTimer(budget_seconds=0.01, label="bench")
        timer.start()
        await asyncio.sleep(0.05)
        return timer.stop()

    with caplog.at_level(logging.WARNING):
        elapsed = asyncio.run(scenario())
    assert elapsed == "00:00"
    assert "превышен бюджет времени" in caplog.text


def test_timer_watchdog_cancelled_on_stop(caplog):
    async def scenario():
        timer = RunTimer(budget_seconds=60, label="fast")
        timer.start()
        timer.stop()
        await asyncio.sleep(0.01)
        return timer.task

    with caplog.at_level(logging.WARNING):
        task = asyncio.run(scenario())
    assert task.cancelled()
    assert "превышен" not in caplog.text


class _Strict(BaseModel):
    value: int = Field(..., ge=0)


@pytest.mark.parametrize(
    "error, code",
    [
        (ParameterError("p"), 2),
        (ProtocolError("order"), 3),
        (AcceptanceBoundError("bound"), 4),
        (RuntimeError("boom"), 1),
    ],
)
def test_middleware_exit_codes(error, code):
    async def handler(data):
        raise error

    data = {"command": "test"}
    assert asyncio.run(ErrorHandlerMiddleware()(handler, data)) == code
    assert data["error"] is error


def test_middleware_validation_error_is_config_error():
    async def handler(data):
        _Strict(value=-1)

    data = {"command": "test"}
    assert asyncio.run(ErrorHandlerMiddleware()(handler, data)) == 2


def test_middleware_passes_result():
    async def handler(data):
        return 0

    assert asyncio.run(ErrorHandlerMiddleware()(handler, {})) == 0


def test_result_writer_layout(workspace):
    config = ExperimentConfig(command=Command.LDIM, out=workspace / "r.jsonl")
    writer = ResultWriter(config)
    writer.record("cell", b=2, a=1)
    writer.metric("m", 1, 0.5)
    writer.metric("m", 2, 0.25)
    path = writer.close({"total": 2})

    records = read_results(path)
    assert [r["type"] for r in records] == ["header", "cell", "summary"]
    assert records[0]["config"]["master_seed"] == config.master_seed
    assert records[0]["constants"] == config.constants.model_dump(mode="json")
    assert records[2] == {"type": "summary", "total": 2}
    # ключи отсортированы
    assert path.read_text(encoding="utf-8").splitlines()[1] == '{"a": 1, "b": 2, "type": "cell"}'
    assert writer.metric_path("m").read_text(encoding="utf-8") == "x\ty\n1\t0.5\n2\t0.25\n"


def test_default_result_path(workspace):
    writer = ResultWriter(ExperimentConfig(command=Command.COIN_GAME))
    assert writer.path == settings.results_dir / "coin-game.jsonl"


def test_stats_registry(workspace):
    async def scenario():
        await stats_manager.init_db()
        await stats_manager.save_run("audit", 2**63 + 5, 100, None, "PASS", 0, "00:01", {"x": 1})
        await stats_manager.save_run("audit", 1, 100, None, "FAIL", 4, "00:02")
        return await stats_manager.get_history(10), await stats_manager.get_command_stats("audit")

    history, stats = asyncio.run(scenario())
    assert [run["verdict"] for run in history] == ["FAIL", "PASS"]
    assert history[1]["master_seed"] == str(2**63 + 5)
    assert stats["total_runs"] == 2
    assert stats["succeeded"] == 1
    assert stats["bound_violations"] == 1


def test_stats_for_unknown_command(workspace):
    async def scenario():
        await stats_manager.init_db()
        return await stats_manager.get_command_stats("nothing")

    assert asyncio.run(scenario())["total_runs"] == 0
