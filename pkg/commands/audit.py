"""
commands/audit.py: эмпирический аудит игр (нижняя граница ε по префиксам транскриптов).
"""
import functools
import logging
from typing import Any, Dict, Optional

from pydantic import BaseModel

from library.audit import AuditCounts, audit_report, collect_counts, group_report, required_trials
from library.enum import AuditGame, CatVariant, LearnerKind
from library.errors import AcceptanceBoundError, InsufficientTrialsError
from library.games import (
    CatGameParams,
    FactoryMetaAdversary,
    LeakyEchoMechanism,
    PopMechanism,
    RandomizedResponseMechanism,
    ReplayAdversary,
    SubGame,
    ThresholdCatAdversary,
    composition_epsilon,
    group_epsilon,
    run_challenge_at_game,
    run_composition_game,
    run_hybrid_game,
    run_online_game,
)
from library.learners import FiniteHypothesisClass, threshold_class
from library.models import AuditReport, ExperimentConfig, MechanismConstants, PopConfig, PrivacyBudget
from library.noise import RandomSource
from library.pop import PrivateOnlinePredictor, make_learner
from library.results import ResultWriter
from library.workers import chunk_ranges, run_trials

from .common import cached_class, finish, trial_source

logger = logging.getLogger(__name__)


class AuditJob(BaseModel):
    """Параметры игры для процессов пула."""
    game: AuditGame
    budget: PrivacyBudget
    constants: MechanismConstants
    prefix_length: int
    k: int = 5
    r: int = 4
    group_size: int = 1
    games_count: int = 2
    learner: LearnerKind = LearnerKind.SOA
    class_path: Optional[str] = None
    variant: CatVariant = CatVariant.STANDARD
    # номер ℓ гибрида W_ℓ / W_{ℓ+1} в групповой проверке; None — сквозная игра
    hybrid: Optional[int] = None
    master_seed: int
    zero_noise: bool = False


def _audit_class(job: AuditJob) -> FiniteHypothesisClass:
    return cached_class(job.class_path) if job.class_path else threshold_class(4)


def _pop_subgame(
    job: AuditJob, mechanism_src: RandomSource, adversary_seed: int, challenges: int = 1
) -> SubGame:
    """POP против пробного противника: challenges вызовов подряд в точке x_c, дальше повтор входа (x_p, 0)."""
    hclass = _audit_class(job)
    x_challenge = hclass.n // 2
    x_filler = max(0, x_challenge - 1)
    config = PopConfig(k=job.k, r=job.r, budget=job.budget, constants=job.constants)
    learner = make_learner(job.learner, hclass, mechanism_src.spawn("learner"), 0.0, job.budget.horizon)
    predictor = PrivateOnlinePredictor(config, learner, mechanism_src)
    if challenges == 1:
        pair0, pair1 = (x_challenge, 0), (x_challenge, 1)
    else:
        # любая смесь пар (как в гибридах) реализуема порогом θ = n
        pair0, pair1 = (x_filler, 0), (x_challenge, 0)
    adversary = ReplayAdversary(pair0, pair1, (x_filler, 0), challenges=challenges)
    return SubGame(PopMechanism(predictor), adversary, job.budget.horizon, challenges, adversary_seed)


def audit_outcome(job: AuditJob, bit: int, trial_index: int) -> str:
    """Исход одного испытания игры job.game при секретном бите bit."""
    base = trial_source(job.master_seed, trial_index, job.zero_noise)
    mechanism_src = base.spawn("mechanism")
    adversary_seed = base.spawn("adversary").seed
    length = job.prefix_length

    if job.game == AuditGame.RANDOMIZED_RESPONSE:
        return str(RandomizedResponseMechanism(job.budget.epsilon, mechanism_src).respond(bit))

    if job.game == AuditGame.LEAK:
        adversary = ReplayAdversary((0, 0), (1, 0), (0, 0))
        return run_online_game(LeakyEchoMechanism(), adversary, max(2, length), 1, bit, adversary_seed).prefix(length)

    if job.game == AuditGame.CHALLENGE_AT:
        params = CatGameParams(
            threshold=0.0, budget=job.budget, reports=job.r, constants=job.constants, variant=job.variant,
        )
        adversary = ThresholdCatAdversary(0.0, challenge_rounds=(0,))
        return run_challenge_at_game(adversary, params, bit, adversary_seed, mechanism_src).prefix(length)

    if job.game == AuditGame.GROUP:
        sub = _pop_subgame(job, mechanism_src, adversary_seed, challenges=job.group_size)
        if job.hybrid is None:
            transcript = run_online_game(sub.mechanism, sub.adversary, sub.horizon, sub.g, bit, sub.adversary_seed)
        else:
            transcript = run_hybrid_game(sub.mechanism, sub.adversary, sub.horizon, job.hybrid + bit, sub.adversary_seed)
        return transcript.prefix(length)

    if job.game == AuditGame.POP:
        sub = _pop_subgame(job, mechanism_src, adversary_seed)
        return run_online_game(sub.mechanism, sub.adversary, sub.horizon, sub.g, bit, sub.adversary_seed).prefix(length)

    meta = FactoryMetaAdversary(
        lambda ell: _pop_subgame(job, mechanism_src.spawn(ell), base.spawn(f"adversary-{ell}").seed)
    )
    return run_composition_game(meta, job.games_count, bit).prefix(length)


def audit_chunk(job: AuditJob, start: int, stop: int) -> AuditCounts:
    return collect_counts(functools.partial(audit_outcome, job), range(start, stop))


def audit_target(job: AuditJob, c_priv: float, slack: float) -> tuple:
    """Проверяемая граница (ε-цель, δ) для игры."""
    eps, delta = job.budget.epsilon, job.budget.delta
    if job.game in (AuditGame.RANDOMIZED_RESPONSE, AuditGame.LEAK):
        return eps + slack, 0.0
    if job.game in (AuditGame.CHALLENGE_AT, AuditGame.POP) or job.hybrid is not None:
        return c_priv * eps + slack, delta
    if job.game == AuditGame.GROUP:
        group_eps, group_delta = group_epsilon(eps, delta, job.group_size)
        return c_priv * group_eps + slack, group_delta
    eps_prime, delta_total = composition_epsilon(c_priv * eps, job.games_count, delta, delta)
    return eps_prime + slack, delta_total


async def _audit_stage(job: AuditJob, config: ExperimentConfig, game_id: str, c_priv: float) -> AuditReport:
    """Один аудит: счётчики событий из пула испытаний и отчёт против цели игры."""
    target, delta = audit_target(job, c_priv, config.slack)
    logger.info(f"▶️ audit {game_id}: N={config.trials}, K={config.prefix_length}, цель ε ≤ {target:.4g}")
    chunks = await run_trials(
        audit_chunk,
        [(job, start, stop) for start, stop in chunk_ranges(config.trials, config.workers)],
        config.workers,
    )
    counts = AuditCounts()
    for chunk in chunks:
        counts = counts.merge(chunk)
    return audit_report(counts, game_id, config.prefix_length, config.alpha, delta, target)


def _record_events(writer: ResultWriter, report: AuditReport, **extra) -> None:
    for event, (n0, n1) in report.counts.items():
        writer.record("event", event=event, count_b0=n0, count_b1=n1, **extra)


async def cmd_audit(data: Dict[str, Any]) -> int:
    """Аудит игры: счётчики событий, нижняя граница ε, вердикт."""
    config = data["config"]
    needed = required_trials(config.alpha)
    if config.trials < needed:
        raise InsufficientTrialsError(config.trials, needed, config.alpha)

    job = AuditJob(
        game=config.game,
        budget=config.budget,
        constants=config.constants,
        prefix_length=config.prefix_length,
        k=config.k or 5,
        r=config.r or 4,
        group_size=config.group_size,
        games_count=config.games_count,
        learner=config.learner,
        class_path=str(config.class_file) if config.class_file else None,
        master_seed=config.master_seed,
        zero_noise=config.no_noise,
    )
    c_priv = config.constants.c_priv
    game_id = config.game.value
    writer = ResultWriter(config)

    if config.game == AuditGame.GROUP:
        hybrids = []
        for ell in range(config.group_size):
            stage = job.model_copy(update={"hybrid": ell})
            hybrid = await _audit_stage(stage, config, f"{game_id}-hybrid{ell}", c_priv)
            _record_events(writer, hybrid, hybrid=ell)
            writer.record("hybrid", **hybrid.model_dump(mode="json", exclude={"counts"}))
            hybrids.append(hybrid)
        end_to_end = await _audit_stage(job, config, game_id, c_priv)
        _record_events(writer, end_to_end)
        report = group_report(config.group_size, end_to_end, hybrids, game_id)
        finish(data, writer, report.model_dump(mode="json"), verdict=report.verdict.value)
        if not report.passed:
            raise AcceptanceBoundError(
                f"аудит {game_id}: сквозная граница {end_to_end.epsilon_lower_bound:.4f} "
                f"(цель {end_to_end.target_epsilon:.4f}), не прошли гибриды {report.failed_hybrids}"
            )
        return 0

    report = await _audit_stage(job, config, game_id, c_priv)
    _record_events(writer, report)
    finish(data, writer, report.model_dump(mode="json"), verdict=report.verdict.value)

    if not report.passed:
        raise AcceptanceBoundError(
            f"аудит {report.game_id}: нижняя граница {report.epsilon_lower_bound:.4f} > {report.target_epsilon:.4f}"
        )
    return 0
