"""
POP — приватный онлайн-предсказатель поверх непубличного обучателя.

k копий обучателя отвечают на x_i, ChallengeAT получает запрос f_i = −|k/2 − Σ_j ŷ_{i,j}|
(Δ = 1, порог t = −k/4). Близкое голосование (σ_i = 1) — ответ честной монеткой,
иначе — большинство. Метку получает только случайно выбранная копия ℓ_i; остальные
не меняются, поэтому копирование A_temp заменено чистым predict.

POP_[u,w] дополнительно считает собственные ошибки приватным счётчиком и
останавливается, когда шумный счётчик достигает v ∈ [u, w].
"""
import logging
import math
from typing import Hashable, List, Optional, Sequence, Tuple

import numpy as np

from .counter import PrivateCounter
from .enum import HaltCause, LearnerKind, PoolMode
from .errors import MechanismStateError, ParameterError, ProtocolError, RealizabilityError
from .learners import (
    AgnosticExpertLearner,
    FiniteHypothesisClass,
    HalvingLearner,
    OnlineLearner,
    RandomizedHalvingLearner,
    SOALearner,
    ldim,
)
from .models import (
    AgnosticRunResult,
    LabeledExample,
    MechanismConstants,
    MistakeCapConfig,
    PopConfig,
    PopRunSummary,
    PrivacyBudget,
    RoundRecord,
)
from .noise import RandomSource
from .sparse import ChallengeAT, QueryValue

logger = logging.getLogger(__name__)


def next_odd_at_least(value: float) -> int:
    """Наименьшее нечётное целое ≥ max(value, 1)."""
    k = max(1, math.ceil(value))
    return k if k % 2 == 1 else k + 1


def pop_default_params(
    d: int,
    budget: PrivacyBudget,
    constants: Optional[MechanismConstants] = None,
    pool: PoolMode = PoolMode.AUTO,
) -> PopConfig:
    """
    Параметры POP по границе ошибок d обучателя.

    k — нечётное ≥ max(c_k·(d/ε²)·ln²(1/δ)·ln²(T/β), (1/(ε·d))·ln T·ln(T/δ)),
    r = ⌈c_r·(d·k + ln(1/β))⌉.
    """
    if d < 1:
        raise ParameterError(f"граница ошибок d должна быть ≥ 1, получено {d}")
    constants = constants or MechanismConstants()
    eps, delta, beta, horizon = budget.epsilon, budget.delta, budget.beta, budget.horizon

    k_main = (
        constants.c_k * (d / eps ** 2)
        * math.log(1.0 / delta) ** 2
        * math.log(horizon / beta) ** 2
    )
    k_extra = (1.0 / (eps * d)) * math.log(horizon) * math.log(horizon / delta)
    k = next_odd_at_least(max(k_main, k_extra))
    r = math.ceil(constants.c_r * (d * k + math.log(1.0 / beta)))
    return PopConfig(k=k, r=r, budget=budget, constants=constants, pool=pool)


def make_learner(
    kind: LearnerKind,
    hclass: FiniteHypothesisClass,
    src: Optional[RandomSource] = None,
    mistake_budget: float = 0.0,
    horizon: int = 1,
) -> OnlineLearner:
    """Непубличный обучатель по имени."""
    kind = LearnerKind(kind)
    if kind == LearnerKind.SOA:
        return SOALearner(hclass)
    if kind == LearnerKind.HALVING:
        return HalvingLearner(hclass)
    if kind == LearnerKind.RANDOMIZED_HALVING:
        return RandomizedHalvingLearner(hclass, src=src)
    return AgnosticExpertLearner(hclass, mistake_budget, horizon)


class GroupedExpertPool:
    """
    k детерминированных экспертов, сгруппированных по state_key.

    Эксперты с одинаковым состоянием делят представителя и строку предсказаний по всем x,
    так что голоса раунда — одно скалярное произведение counts · rows[:, x].
    """

    def __init__(self, prototype: OnlineLearner, k: int):
        if prototype.state_key is None:
            raise ParameterError(f"{type(prototype).__name__} не поддерживает группировку экспертов")
        self.k = k
        self.n = prototype.hclass.n
        self._reps: List[OnlineLearner] = []
        self._key_to_group = {}
        self._rows = np.zeros((16, self.n), dtype=np.int8)
        self._counts = np.zeros(16, dtype=np.int64)
        first = self._add_group(prototype.snapshot())
        self._counts[first] = k
        self._member = np.full(k, first, dtype=np.int64)

    def _add_group(self, learner: OnlineLearner) -> int:
        group = len(self._reps)
        if group == self._rows.shape[0]:
            self._rows = np.concatenate([self._rows, np.zeros_like(self._rows)])
            self._counts = np.concatenate([self._counts, np.zeros_like(self._counts)])
        self._reps.append(learner)
        self._key_to_group[learner.state_key] = group
        self._rows[group] = learner.predict_all()
        return group

    @property
    def group_count(self) -> int:
        return len(self._reps)

    def votes(self, x: int) -> int:
        groups = len(self._reps)
        return int(self._counts[:groups] @ self._rows[:groups, x])

    def predictions(self, x: int) -> np.ndarray:
        return self._rows[self._member, x]

    def expert_prediction(self, j: int, x: int) -> int:
        return int(self._rows[self._member[j], x])

    def update(self, j: int, x: int, y: int) -> None:
        group = int(self._member[j])
        learner = self._reps[group].snapshot()
        learner.update(x, y)
        target = self._key_to_group.get(learner.state_key)
        if target is None:
            target = self._add_group(learner)
        self._counts[group] -= 1
        self._counts[target] += 1
        self._member[j] = target

    def expert_state(self, j: int) -> Hashable:
        return self._reps[self._member[j]].state_key


class IndependentExpertPool:
    """k отдельных объектов обучателя; для стохастических — опционально через snapshot (A_temp)."""

    def __init__(self, prototype: OnlineLearner, k: int, use_snapshots: bool = False):
        self.k = k
        self.use_snapshots = use_snapshots
        self._experts = [prototype.snapshot() for _ in range(k)]
        self._last: Optional[Tuple[int, np.ndarray]] = None

    def predictions(self, x: int) -> np.ndarray:
        if self.use_snapshots:
            preds = [e.snapshot().predict(x) for e in self._experts]
        else:
            preds = [e.predict(x) for e in self._experts]
        result = np.array(preds, dtype=np.int8)
        self._last = (x, result)
        return result

    def votes(self, x: int) -> int:
        return int(self.predictions(x).sum())

    def expert_prediction(self, j: int, x: int) -> int:
        if self._last is not None and self._last[0] == x:
            return int(self._last[1][j])
        return int(self._experts[j].predict(x))

    def update(self, j: int, x: int, y: int) -> None:
        self._last = None
        self._experts[j].update(x, y)

    def expert_state(self, j: int) -> Optional[Hashable]:
        expert = self._experts[j]
        return expert.state_key if expert.state_key is not None else getattr(expert, "version_space", None)


def _make_pool(prototype: OnlineLearner, config: PopConfig):
    mode = PoolMode(config.pool)
    if mode == PoolMode.AUTO:
        mode = PoolMode.GROUPED if prototype.deterministic and prototype.state_key is not None else PoolMode.INDEPENDENT
    if mode == PoolMode.GROUPED:
        return GroupedExpertPool(prototype, config.k)
    return IndependentExpertPool(prototype, config.k, use_snapshots=config.use_snapshots)


class PrivateOnlinePredictor:
    """
    Состояние POP (и POP_[u,w], если задан mistake_cap).

    Протокол: round(x) → ŷ, затем ровно один feed_label(y). Раунд остановки
    выдаёт предсказание и принимает метку; следующие раунды отклоняются.
    """

    def __init__(
        self,
        config: PopConfig,
        prototype: OnlineLearner,
        src: RandomSource,
        mistake_cap: Optional[MistakeCapConfig] = None,
        record: bool = False,
    ):
        self.config = config
        self.k = config.k
        self.hclass = prototype.hclass
        self.pool = _make_pool(prototype, config)

        self._select_src = src.spawn("select")
        self._coin_src = src.spawn("coin")
        self.cat = ChallengeAT(
            config.threshold, config.budget, config.r, src.spawn("cat"),
            sensitivity=1.0, constants=config.constants,
        )

        self.mistake_cap = mistake_cap
        self.cap_counter: Optional[PrivateCounter] = None
        self.cap_value: Optional[int] = None
        if mistake_cap is not None:
            if mistake_cap.v is not None:
                self.cap_value = mistake_cap.v
            elif mistake_cap.randomize_v:
                spread = mistake_cap.w - mistake_cap.u + 1
                self.cap_value = mistake_cap.u + src.spawn("cap-v").integers(spread)
            else:
                self.cap_value = mistake_cap.u
            self.cap_counter = PrivateCounter(
                config.budget.horizon, config.budget.epsilon, src.spawn("cap")
            )

        self.round_index = 0
        self.halted = False
        self.halt_cause = HaltCause.NONE
        self.halt_round: Optional[int] = None
        self.last_votes = 0
        self._pending: Optional[Tuple[int, int, int, int, int, int]] = None

        self.mistakes = 0
        self.positives = 0
        self.fifth_err = 0
        self.expert_advance = 0
        self.records: Optional[List[RoundRecord]] = [] if record else None

    def __repr__(self) -> str:
        return (
            f"PrivateOnlinePredictor(k={self.k}, r={self.config.r}, round={self.round_index}, "
            f"mistakes={self.mistakes}, halt={self.halt_cause.value})"
        )

    @property
    def pending(self) -> bool:
        return self._pending is not None

    def round(self, x: int) -> int:
        """Предсказание ŷ_i для точки x."""
        if self._pending is not None:
            raise ProtocolError(f"раунд {self.round_index} ещё ждёт метку")
        if self.halted:
            raise MechanismStateError(
                f"POP остановлен в раунде {self.halt_round} ({self.halt_cause.value})"
            )
        self.hclass.check_point(x)

        self.round_index += 1
        votes = self.pool.votes(x)
        ell = self._select_src.integers(self.k)
        sigma = self.cat.step(QueryValue(-abs(self.k / 2.0 - votes), 1.0))
        if sigma:
            y_hat = self._coin_src.coin()
            self.positives += 1
        else:
            y_hat = 1 if 2 * votes > self.k else 0

        self.last_votes = votes
        self._pending = (x, y_hat, sigma, ell, votes, self.pool.expert_prediction(ell, x))
        if self.cat.halted:
            self._halt(HaltCause.CAT_HALTED)
        return y_hat

    def feed_label(self, y: int) -> bool:
        """Метка текущего раунда; обновляется только эксперт ℓ_i. Возвращает флаг ошибки."""
        if self._pending is None:
            raise ProtocolError("метка без ожидающего раунда")
        if y not in (0, 1):
            raise ParameterError(f"метка должна быть 0/1, получено {y!r}")
        x, y_hat, sigma, ell, votes, ell_prediction = self._pending

        try:
            self.pool.update(ell, x, y)
        except RealizabilityError as e:
            raise RealizabilityError(str(e), round_index=self.round_index) from e
        self._pending = None

        mistake = y_hat != y
        erring = votes if y == 0 else self.k - votes
        if 5 * erring > self.k:
            self.fifth_err += 1
        if ell_prediction != y:
            self.expert_advance += 1
        if mistake:
            self.mistakes += 1
        if self.records is not None:
            self.records.append(RoundRecord(
                i=self.round_index, x=x, y_hat=y_hat, y=y, sigma=sigma, ell=ell, mistake=mistake,
            ))

        if self.cap_counter is not None:
            count = self.cap_counter.feed(int(mistake))
            if count >= self.cap_value and not self.halted:
                self._halt(HaltCause.MISTAKE_CAP)
        return mistake

    def _halt(self, cause: HaltCause) -> None:
        self.halted = True
        self.halt_cause = cause
        self.halt_round = self.round_index
        logger.debug(f"POP: остановка в раунде {self.round_index} ({cause.value})")

    def expert_state(self, j: int) -> Optional[Hashable]:
        return self.pool.expert_state(j)

    def summary(self) -> PopRunSummary:
        return PopRunSummary(
            rounds=self.round_index,
            mistakes=self.mistakes,
            positives=self.positives,
            halted=self.halted,
            halt_round=self.halt_round,
            halt_cause=self.halt_cause.value,
            fifth_err=self.fifth_err,
            expert_advance=self.expert_advance,
            k=self.k,
            r=self.config.r,
        )


def pop_round(state: PrivateOnlinePredictor, x: int) -> int:
    return state.round(x)


def pop_feed_label(state: PrivateOnlinePredictor, y: int) -> bool:
    return state.feed_label(y)


# POP_[u,w] — тот же объект с mistake_cap
pop_uw_round = pop_round
pop_uw_feed_label = pop_feed_label


def run_pop(predictor: PrivateOnlinePredictor, stream: Sequence[LabeledExample]) -> PopRunSummary:
    """Прогнать поток до конца или до остановки."""
    for example in stream:
        if predictor.halted:
            break
        predictor.round(example.x)
        predictor.feed_label(example.y)
    return predictor.summary()


def agnostic_pop_run(
    hclass: FiniteHypothesisClass,
    stream: Sequence[LabeledExample],
    budget: PrivacyBudget,
    src: RandomSource,
    constants: Optional[MechanismConstants] = None,
    d: Optional[int] = None,
    randomize_v: bool = False,
    record: bool = False,
) -> AgnosticRunResult:
    """
    Агностическая обёртка: фазы POP_[u,w] подряд по остатку потока.

    k = нечётное ≥ c_k_agn·d²/ε, r = u = ⌈c_u·k·d·ln T⌉, w = 2u, внутренний эксперт
    с M* = d·ln T. Каждая фаза — новое состояние всех механизмов из src.spawn(фаза).
    """
    constants = constants or MechanismConstants()
    if len(stream) > budget.horizon:
        raise ParameterError(f"поток длины {len(stream)} длиннее горизонта T={budget.horizon}")

    d_eff = max(1, ldim(hclass) if d is None else d)
    log_horizon = math.log(budget.horizon)
    k = next_odd_at_least(constants.c_k_agnostic * d_eff ** 2 / budget.epsilon)
    u = max(1, math.ceil(constants.c_u * k * d_eff * log_horizon))
    w = 2 * u
    mistake_budget = d_eff * log_horizon
    config = PopConfig(k=k, r=u, budget=budget, constants=constants, pool=PoolMode.GROUPED)
    cap = MistakeCapConfig(u=u, w=w, randomize_v=randomize_v)

    result = AgnosticRunResult(k=k, r=u, u=u, w=w)
    position = 0
    phase = 0
    while True:
        predictor = PrivateOnlinePredictor(
            config,
            AgnosticExpertLearner(hclass, mistake_budget, budget.horizon),
            src.spawn(f"phase-{phase}"),
            mistake_cap=cap,
            record=record,
        )
        summary = run_pop(predictor, stream[position:])
        result.phases.append(summary)
        result.total_mistakes += summary.mistakes
        if predictor.records:
            for rec in predictor.records:
                result.records.append(rec.model_copy(update={"i": rec.i + position, "phase": phase}))
        position += summary.rounds
        if position >= len(stream):
            break
        logger.debug(f"agnostic POP: фаза {phase} остановлена ({summary.halt_cause}) на позиции {position}")
        phase += 1

    result.rounds = position
    return result
