"""
commands/pop_run.py: одиночный прогон POP с полным транскриптом и свипы по (d, ε).
"""
import logging
import math
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel

from library.enum import AdversaryStyle, LearnerKind, PoolMode
from library.errors import AcceptanceBoundError, ConfigError
from library.learners import ldim, make_realizable_stream
from library.models import ExperimentConfig, MechanismConstants, PopConfig, PrivacyBudget
from library.pop import PrivateOnlinePredictor, make_learner, pop_default_params, run_pop
from library.results import ResultWriter
from library.workers import chunk_ranges, run_trials

from .common import cached_class, finish, quantile, require_class, trial_source

logger = logging.getLogger(__name__)


class PopJob(BaseModel):
    """Всё, что нужно процессу пула для испытаний POP одной ячейки."""
    class_path: str
    learner: LearnerKind
    style: AdversaryStyle
    target: Optional[int] = None
    k: int
    r: int
    budget: PrivacyBudget
    constants: MechanismConstants
    pool: PoolMode = PoolMode.AUTO
    zero_noise: bool = False
    master_seed: int
    record: bool = False


def run_pop_trial(job: PopJob, trial_index: int) -> Tuple[Dict[str, Any], List[Dict[str, Any]]]:
    """Одно испытание: реализуемый поток длины T и прогон POP на нём."""
    hclass = cached_class(job.class_path)
    src = trial_source(job.master_seed, trial_index, job.zero_noise)
    horizon = job.budget.horizon

    target = job.target if job.target is not None else src.spawn("target").integers(hclass.size)
    forced = make_learner(job.learner, hclass, src.spawn("adversary-learner"), 0.0, horizon)
    stream = make_realizable_stream(hclass, target, horizon, job.style, src.spawn("stream"), learner=forced)

    config = PopConfig(k=job.k, r=job.r, budget=job.budget, constants=job.constants, pool=job.pool)
    learner = make_learner(job.learner, hclass, src.spawn("learner"), 0.0, horizon)
    predictor = PrivateOnlinePredictor(config, learner, src.spawn("pop"), record=job.record)
    summary = run_pop(predictor, stream).model_dump()
    summary["trial"] = trial_index
    summary["target"] = target
    summary["premature_halt"] = summary["halted"] and summary["rounds"] < len(stream)
    records = [r.model_dump() for r in predictor.records] if predictor.records else []
    return summary, records


def run_pop_chunk(job: PopJob, start: int, stop: int) -> List[Dict[str, Any]]:
    return [run_pop_trial(job, idx)[0] for idx in range(start, stop)]


def resolve_pop_params(config: ExperimentConfig, d: int, budget: PrivacyBudget) -> Tuple[int, int]:
    """k и r: явные значения конфига или формулы по d."""
    defaults = pop_default_params(d, budget, config.constants)
    k = config.k if config.k is not None else defaults.k
    k = k if k % 2 == 1 else k + 1
    if config.r is not None:
        r = config.r
    elif config.k is not None:
        r = math.ceil(config.constants.c_r * (d * k + math.log(1.0 / budget.beta)))
    else:
        r = defaults.r
    return k, r


def _job(config: ExperimentConfig, class_path: str, budget: PrivacyBudget, k: int, r: int, record: bool) -> PopJob:
    return PopJob(
        class_path=class_path,
        learner=config.learner,
        style=config.style,
        target=config.target,
        k=k,
        r=r,
        budget=budget,
        constants=config.constants,
        pool=config.pool,
        zero_noise=config.no_noise,
        master_seed=config.master_seed,
        record=record,
    )


async def cmd_pop_run(data: Dict[str, Any]) -> int:
    """Один прогон POP (испытание 0) с записью каждого раунда."""
    config = data["config"]
    hclass = require_class(config)
    d = ldim(hclass)
    k, r = resolve_pop_params(config, max(d, 1), config.budget)
    logger.info(f"▶️ pop-run: d={d}, k={k}, r={r}, T={config.horizon}, обучатель {config.learner.value}")

    writer = ResultWriter(config)
    summary, records = run_pop_trial(_job(config, str(config.class_file), config.budget, k, r, True), 0)
    for rec in records:
        writer.record("round", **rec)
    summary["ldim"] = d
    violated = config.mistake_bound is not None and summary["mistakes"] > config.mistake_bound
    finish(data, writer, summary, verdict="FAIL" if violated else "PASS")
    logger.info(
        f"🏁 pop-run: ошибок {summary['mistakes']} за {summary['rounds']} раундов, "
        f"остановка: {summary['halt_cause']}"
    )

    if violated:
        raise AcceptanceBoundError(f"ошибок {summary['mistakes']} > границы {config.mistake_bound}")
    return 0


async def cmd_pop_sweep(data: Dict[str, Any]) -> int:
    """Свип по классам (d) × ε: медианы ошибок и доля преждевременных остановок."""
    config = data["config"]
    class_files = [str(p) for p in config.class_files] or (
        [str(config.class_file)] if config.class_file else []
    )
    if not class_files:
        raise ConfigError("pop-sweep: укажите class_files в конфиге или --class")

    writer = ResultWriter(config)
    cells = []
    failing = []
    for class_path in class_files:
        d = ldim(cached_class(class_path))
        for epsilon in config.epsilon_grid:
            budget = PrivacyBudget(epsilon=epsilon, delta=config.delta, beta=config.beta, horizon=config.horizon)
            k, r = resolve_pop_params(config, max(d, 1), budget)
            job = _job(config, class_path, budget, k, r, False)
            chunks = await run_trials(
                run_pop_chunk,
                [(job, start, stop) for start, stop in chunk_ranges(config.trials, config.workers)],
                config.workers,
            )
            runs = [s for chunk in chunks for s in chunk]
            for run in runs:
                writer.record("trial", class_file=class_path, d=d, epsilon=epsilon, **run)

            mistakes = [run["mistakes"] for run in runs]
            cell = {
                "class_file": class_path,
                "d": d,
                "epsilon": epsilon,
                "k": k,
                "r": r,
                "median_mistakes": quantile(mistakes, 0.5),
                "q95_mistakes": quantile(mistakes, 0.95),
                "premature_halt_rate": sum(run["premature_halt"] for run in runs) / len(runs),
                "mean_fifth_err": sum(run["fifth_err"] for run in runs) / len(runs),
            }
            if config.mistake_bound is not None:
                within = sum(
                    1 for run in runs
                    if not run["premature_halt"] and run["mistakes"] <= config.mistake_bound
                ) / len(runs)
                cell["within_bound_rate"] = within
                if within < 0.95:
                    failing.append((class_path, epsilon))
            writer.record("cell", **cell)
            writer.metric(f"median_mistakes_d{d}", epsilon, cell["median_mistakes"])
            writer.metric(f"median_mistakes_eps{epsilon}", d, cell["median_mistakes"])
            cells.append(cell)
            logger.info(f"✅ d={d}, ε={epsilon}: медиана ошибок {cell['median_mistakes']:g}")

    summary = {"cells": len(cells), "failing_cells": [list(c) for c in failing]}
    finish(data, writer, summary, verdict="FAIL" if failing else "PASS")
    if failing:
        raise AcceptanceBoundError(f"меньше 95% прогонов в пределах границы в ячейках {failing}")
    return 0
