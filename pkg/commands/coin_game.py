"""
commands/coin_game.py: хвосты награды в игре монеток против границы exp(−λ/6 + 3(k+1)).
"""
import logging
import math
from typing import Any, Dict, List

import numpy as np

from library.errors import AcceptanceBoundError
from library.games import coin_tail_bound, make_strategy, run_coin_game_batch
from library.results import ResultWriter
from library.workers import run_trials

from .common import finish, trial_source

logger = logging.getLogger(__name__)

# Игр на одно задание; сиды привязаны к номеру пачки, а не к числу процессов
BATCH_RUNS = 10_000


def coin_chunk(
    strategy_name: str, k: int, m: int, runs: int, master_seed: int, batch_index: int
) -> List[int]:
    src = trial_source(master_seed, batch_index, False).spawn(f"coin-{strategy_name}-{k}")
    return run_coin_game_batch(make_strategy(strategy_name), k, m, runs, src).tolist()


async def cmd_coin_game(data: Dict[str, Any]) -> int:
    """Монте-Карло хвоста Pr[reward > λ] для каждой стратегии из списка."""
    config = data["config"]
    names = [name.strip() for name in config.strategy.split(",") if name.strip()]
    for name in names:
        make_strategy(name)

    writer = ResultWriter(config)
    k, m = config.coin_budget, config.coin_rounds
    violations = []
    for name in names:
        batches = []
        left, index = config.trials, 0
        while left > 0:
            size = min(BATCH_RUNS, left)
            batches.append((name, k, m, size, config.master_seed, index))
            left -= size
            index += 1
        rewards = np.array([r for chunk in await run_trials(coin_chunk, batches, config.workers) for r in chunk])

        for lam in config.lambdas:
            tail = float(np.mean(rewards > lam))
            stderr = math.sqrt(max(tail * (1 - tail), 1.0 / len(rewards)) / len(rewards))
            bound = coin_tail_bound(k, lam)
            ok = tail <= bound + 3 * stderr
            writer.record(
                "cell", strategy=name, k=k, m=m, runs=len(rewards),
                **{"lambda": lam, "tail": tail, "stderr": stderr, "bound": bound, "within": ok},
            )
            writer.metric(f"tail_{name}", lam, tail)
            if not ok:
                violations.append((name, lam))
        logger.info(f"✅ {name}: средняя награда {rewards.mean():.3f}, максимум {rewards.max()}")

    summary = {"strategies": names, "violations": [list(v) for v in violations]}
    finish(data, writer, summary, verdict="FAIL" if violations else "PASS")
    if violations:
        raise AcceptanceBoundError(f"хвост выше границы + 3 ст. ошибки: {violations}")
    return 0
