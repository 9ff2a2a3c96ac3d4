"""
Игры противника как исполняемые стенды.

OnlineGame с групповым параметром g, игра ChallengeAT (с гибридами доказательства),
CompositionGame и игра в монетки. Маскировку вызовных раундов делает стенд, а не механизм:
противник и транскрипт видят ⊥ (None) в каждом раунде с c_i = 1.
"""
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .counter import PrivateCounter
from .enum import CatVariant
from .errors import AdversaryContractError, ParameterError, StrategyContractError
from .models import CompositionView, GameTranscript, LabeledExample, MechanismConstants, PrivacyBudget
from .noise import RandomSource
from .pop import PrivateOnlinePredictor
from .sparse import AboveThreshold, ChallengeAT

logger = logging.getLogger(__name__)


# ---------- механизмы ----------

class GameMechanism(ABC):
    """Онлайн-механизм игры: получает x_i, отвечает ŷ_i, затем получает y_i."""

    halted: bool = False

    @abstractmethod
    def respond(self, x: int) -> int:
        ...

    def observe(self, y: int) -> None:
        return None


class PopMechanism(GameMechanism):
    """POP в роли механизма игры."""

    def __init__(self, predictor: PrivateOnlinePredictor):
        self.predictor = predictor

    @property
    def halted(self) -> bool:
        return self.predictor.halted and not self.predictor.pending

    def respond(self, x: int) -> int:
        return self.predictor.round(x)

    def observe(self, y: int) -> None:
        self.predictor.feed_label(y)


class RandomizedResponseMechanism(GameMechanism):
    """Рандомизированный ответ: бит x, перевёрнутый с вероятностью 1/(1 + e^ε)."""

    def __init__(self, epsilon: float, src: RandomSource):
        if not epsilon > 0:
            raise ParameterError(f"ε должно быть положительным, получено {epsilon}")
        self.epsilon = epsilon
        self.flip_probability = 1.0 / (1.0 + math.exp(epsilon))
        self._src = src

    def respond(self, x: int) -> int:
        return 1 - x if self._src.bernoulli(self.flip_probability) else x


class LeakyEchoMechanism(GameMechanism):
    """Заведомо не приватный механизм: отвечает входом предыдущего раунда."""

    def __init__(self):
        self._previous = 0

    def respond(self, x: int) -> int:
        answer, self._previous = self._previous, x
        return answer


class RecordingMechanism(GameMechanism):
    """Обёртка, записывающая всё, что видит механизм: последовательность (x_i, y_i)."""

    def __init__(self, inner: GameMechanism):
        self.inner = inner
        self.inputs: List[Tuple[int, Optional[int]]] = []

    @property
    def halted(self) -> bool:
        return self.inner.halted

    def respond(self, x: int) -> int:
        self.inputs.append((x, None))
        return self.inner.respond(x)

    def observe(self, y: int) -> None:
        x, _ = self.inputs[-1]
        self.inputs[-1] = (x, y)
        self.inner.observe(y)


# ---------- противники ----------

@dataclass(frozen=True)
class AdversaryMove:
    """Ход противника: бит вызова и пара входов (x_{i,0}, y_{i,0}), (x_{i,1}, y_{i,1})."""
    challenge: int
    first: LabeledExample
    second: LabeledExample

    @classmethod
    def plain(cls, x: int, y: int) -> "AdversaryMove":
        example = LabeledExample(x=x, y=y)
        return cls(0, example, example)


class Adversary(ABC):
    """Адаптивный противник OnlineGame."""

    def reset(self, src: RandomSource) -> None:
        self._src = src

    @abstractmethod
    def next_round(self, i: int) -> AdversaryMove:
        ...

    def observe(self, answer: Optional[int]) -> None:
        return None


class ScriptedAdversary(Adversary):
    """Противник по заранее заданному списку ходов."""

    def __init__(self, moves: Sequence[AdversaryMove]):
        self.moves = list(moves)

    def next_round(self, i: int) -> AdversaryMove:
        return self.moves[i % len(self.moves)]


class RandomStreamAdversary(Adversary):
    """Без вызовов: равномерные точки, метки по фиксированной строке класса."""

    def __init__(self, labels: Sequence[int]):
        self.labels = list(labels)

    def next_round(self, i: int) -> AdversaryMove:
        x = self._src.integers(len(self.labels))
        return AdversaryMove.plain(x, self.labels[x])


class ReplayAdversary(Adversary):
    """
    Вызывает challenges раз подряд с раунда challenge_round парой (pair0, pair1),
    в остальных раундах подаёт фиксированный вход filler.
    """

    def __init__(
        self,
        pair0: Tuple[int, int],
        pair1: Tuple[int, int],
        filler: Tuple[int, int],
        challenge_round: int = 0,
        challenges: int = 1,
    ):
        self.pair0 = LabeledExample(x=pair0[0], y=pair0[1])
        self.pair1 = LabeledExample(x=pair1[0], y=pair1[1])
        self.filler = filler
        self.challenge_round = challenge_round
        self.challenges = challenges

    def next_round(self, i: int) -> AdversaryMove:
        if self.challenge_round <= i < self.challenge_round + self.challenges:
            return AdversaryMove(1, self.pair0, self.pair1)
        return AdversaryMove.plain(*self.filler)


class HybridAdversary(Adversary):
    """
    Одновызовной противник из g-вызовного: вызов внутреннего противника номер ℓ+1
    становится единственным вызовом, первые ℓ его вызовов идут парой (x1, y1),
    остальные — парой (x0, y0). Ответы на раундах вызовов внутреннему противнику маскируются.
    """

    def __init__(self, inner: Adversary, ell: int):
        if ell < 0:
            raise ParameterError(f"номер гибрида ℓ должен быть ≥ 0, получено {ell}")
        self.inner = inner
        self.ell = ell

    def reset(self, src: RandomSource) -> None:
        super().reset(src)
        self.inner.reset(src)
        self._seen = 0
        self._inner_challenge = False

    def next_round(self, i: int) -> AdversaryMove:
        move = self.inner.next_round(i)
        self._inner_challenge = bool(move.challenge)
        if not move.challenge:
            return move
        self._seen += 1
        if self._seen == self.ell + 1:
            return AdversaryMove(1, move.first, move.second)
        chosen = move.second if self._seen <= self.ell else move.first
        return AdversaryMove(0, chosen, chosen)

    def observe(self, answer: Optional[int]) -> None:
        self.inner.observe(None if self._inner_challenge else answer)


# ---------- OnlineGame ----------

def _check_move(move: AdversaryMove, i: int, used: int, g: int) -> int:
    if move.challenge not in (0, 1):
        raise AdversaryContractError(f"бит вызова должен быть 0/1, получено {move.challenge!r}", i)
    if move.challenge:
        used += 1
        if used > g:
            raise AdversaryContractError(f"превышен лимит вызовов g={g}", i)
    elif move.first != move.second:
        raise AdversaryContractError("в невызовном раунде пары входов различаются", i)
    return used


def run_online_game(
    mechanism: GameMechanism,
    adversary: Adversary,
    horizon: int,
    g: int,
    b: int,
    adversary_seed: int,
) -> GameTranscript:
    """
    OnlineGame(b): механизм видит только выбранный вход x_{i,b}, затем y_{i,b}.
    Игра заканчивается через T раундов или после остановки механизма.
    """
    if b not in (0, 1):
        raise ParameterError(f"секретный бит b должен быть 0/1, получено {b!r}")
    if g < 0 or horizon < 0:
        raise ParameterError(f"требуется g ≥ 0 и T ≥ 0, получено g={g}, T={horizon}")

    adversary.reset(RandomSource(adversary_seed))
    released: List[Optional[int]] = []
    challenges: List[int] = []
    used = 0
    for i in range(horizon):
        if mechanism.halted:
            break
        move = adversary.next_round(i)
        used = _check_move(move, i, used, g)
        chosen = move.second if b else move.first
        answer = mechanism.respond(chosen.x)
        mechanism.observe(chosen.y)

        shown = None if move.challenge else answer
        released.append(shown)
        if move.challenge:
            challenges.append(i)
        adversary.observe(shown)

    return GameTranscript(
        adversary_seed=adversary_seed,
        released=tuple(released),
        challenge_rounds=tuple(challenges),
        halted_round=len(released) if mechanism.halted else None,
    )


def run_hybrid_game(
    mechanism: GameMechanism,
    adversary: Adversary,
    horizon: int,
    ell: int,
    adversary_seed: int,
) -> GameTranscript:
    """
    Гибрид W_ℓ: в вызовном раунде с Σ c_j > ℓ подаётся (x0, y0), иначе (x1, y1).
    W_0 совпадает с OnlineGame(0), W_g — с OnlineGame(1).
    """
    adversary.reset(RandomSource(adversary_seed))
    released: List[Optional[int]] = []
    challenges: List[int] = []
    seen = 0
    for i in range(horizon):
        if mechanism.halted:
            break
        move = adversary.next_round(i)
        if move.challenge:
            seen += 1
        chosen = move.first if seen > ell and move.challenge else move.second
        answer = mechanism.respond(chosen.x)
        mechanism.observe(chosen.y)

        shown = None if move.challenge else answer
        released.append(shown)
        if move.challenge:
            challenges.append(i)
        adversary.observe(shown)

    return GameTranscript(
        adversary_seed=adversary_seed,
        released=tuple(released),
        challenge_rounds=tuple(challenges),
        halted_round=len(released) if mechanism.halted else None,
    )


# ---------- игра ChallengeAT ----------

@dataclass(frozen=True)
class CatMove:
    """Запрос раунда: f^b(S) = offset_b + s_b; в невызовном раунде смещения равны."""
    challenge: int
    offset0: float
    offset1: float


class CatAdversary(ABC):
    """Противник игры ChallengeAT: пара соседних датасетов и поток запросов."""

    def reset(self, src: RandomSource) -> None:
        self._src = src

    @abstractmethod
    def datasets(self) -> Tuple[float, float]:
        ...

    @abstractmethod
    def next_query(self, i: int) -> CatMove:
        ...

    def observe(self, answer: Optional[int]) -> None:
        return None


class ScriptedCatAdversary(CatAdversary):
    def __init__(self, base_values: Tuple[float, float], moves: Sequence[CatMove]):
        self.base_values = base_values
        self.moves = list(moves)

    def datasets(self) -> Tuple[float, float]:
        return self.base_values

    def next_query(self, i: int) -> CatMove:
        return self.moves[i % len(self.moves)]


class ThresholdCatAdversary(CatAdversary):
    """
    Датасеты (0, Δ); запросы у порога, вызовы в раундах challenge_rounds разводят
    значения на ±separation вокруг порога.
    """

    def __init__(
        self,
        threshold: float,
        sensitivity: float = 1.0,
        challenge_rounds: Sequence[int] = (0,),
        separation: float = 10.0,
    ):
        self.threshold = threshold
        self.sensitivity = sensitivity
        self.challenge_rounds = set(challenge_rounds)
        self.separation = separation

    def datasets(self) -> Tuple[float, float]:
        return 0.0, self.sensitivity

    def next_query(self, i: int) -> CatMove:
        if i in self.challenge_rounds:
            return CatMove(1, self.threshold - self.separation, self.threshold + self.separation)
        return CatMove(0, self.threshold, self.threshold)


@dataclass
class CatGameParams:
    """Параметры игры ChallengeAT."""
    threshold: float
    budget: PrivacyBudget
    reports: int
    sensitivity: float = 1.0
    constants: MechanismConstants = field(default_factory=MechanismConstants)
    variant: CatVariant = CatVariant.STANDARD
    g: int = 1


class _AboveThresholdWithCounter:
    """Гибрид: AboveThreshold с r+λ ответами и внешний счётчик с остановкой по count ≥ r."""

    def __init__(self, params: CatGameParams, src: RandomSource):
        budget = params.budget
        template = ChallengeAT(
            params.threshold, budget, params.reports, src.spawn("template"),
            params.sensitivity, params.constants,
        )
        self.reports = params.reports
        self.at = AboveThreshold(
            params.threshold, budget.epsilon, budget.delta,
            params.reports + math.ceil(template.lam), src.spawn("at"),
            params.sensitivity, params.constants.c_gamma,
        )
        self.counter = PrivateCounter(budget.horizon, budget.epsilon, src.spawn("counter"))
        self.halted = False

    def step(self, value: float, count_bit: Optional[int] = None) -> int:
        sigma = self.at.step(value)
        count = self.counter.feed(sigma if count_bit is None else count_bit)
        if count >= self.reports or self.at.halted:
            self.halted = True
        return sigma


def run_challenge_at_game(
    adversary: CatAdversary,
    params: CatGameParams,
    b: int,
    adversary_seed: int,
    mechanism_src: RandomSource,
) -> GameTranscript:
    """
    Игра ChallengeAT(b): механизм получает f_i^b(S_b), ответ вызовного раунда маскируется.
    Варианты: standard, no_count (в счётчик вызовного раунда идёт 0),
    above_threshold (AboveThreshold + внешний счётчик), skip_challenge (вызов не подаётся).
    """
    if b not in (0, 1):
        raise ParameterError(f"секретный бит b должен быть 0/1, получено {b!r}")
    variant = CatVariant(params.variant)
    adversary.reset(RandomSource(adversary_seed))
    s0, s1 = adversary.datasets()
    if abs(s0 - s1) > params.sensitivity:
        raise AdversaryContractError(
            f"датасеты не соседние: |{s0} − {s1}| > Δ={params.sensitivity}"
        )
    base = s1 if b else s0

    if variant == CatVariant.ABOVE_THRESHOLD:
        mechanism = _AboveThresholdWithCounter(params, mechanism_src)
    else:
        mechanism = ChallengeAT(
            params.threshold, params.budget, params.reports, mechanism_src,
            params.sensitivity, params.constants,
        )

    released: List[Optional[int]] = []
    challenges: List[int] = []
    used = 0
    for i in range(params.budget.horizon):
        if mechanism.halted:
            break
        move = adversary.next_query(i)
        if move.challenge not in (0, 1):
            raise AdversaryContractError(f"бит вызова должен быть 0/1, получено {move.challenge!r}", i)
        if move.challenge:
            used += 1
            if used > params.g:
                raise AdversaryContractError(f"превышен лимит вызовов g={params.g}", i)
        elif move.offset0 != move.offset1:
            raise AdversaryContractError("в невызовном раунде запросы различаются", i)

        value = (move.offset1 if b else move.offset0) + base
        if move.challenge and variant == CatVariant.SKIP_CHALLENGE:
            mechanism.skip_round()
        elif move.challenge and variant in (CatVariant.NO_COUNT, CatVariant.ABOVE_THRESHOLD):
            mechanism.step(value, count_bit=0)
        else:
            answer = mechanism.step(value)

        shown = None if move.challenge else answer
        released.append(shown)
        if move.challenge:
            challenges.append(i)
        adversary.observe(shown)

    return GameTranscript(
        adversary_seed=adversary_seed,
        released=tuple(released),
        challenge_rounds=tuple(challenges),
        halted_round=len(released) if mechanism.halted else None,
    )


# ---------- CompositionGame ----------

@dataclass
class SubGame:
    """Одна подыгра композиции: механизм, противник, T, g и сид противника."""
    mechanism: GameMechanism
    adversary: Adversary
    horizon: int
    g: int
    adversary_seed: int


class MetaAdversary(ABC):
    """Мета-противник: выбирает следующую подыгру по уже полученным транскриптам."""

    @abstractmethod
    def next_game(self, ell: int, views: Sequence[GameTranscript]) -> SubGame:
        ...


class FactoryMetaAdversary(MetaAdversary):
    """Подыгры строятся фабрикой по номеру ℓ."""

    def __init__(self, factory: Callable[[int], SubGame]):
        self.factory = factory

    def next_game(self, ell: int, views: Sequence[GameTranscript]) -> SubGame:
        return self.factory(ell)


def run_composition_game(meta: MetaAdversary, m: int, b: int) -> CompositionView:
    """m последовательных OnlineGame с общим битом b."""
    if m < 1:
        raise ParameterError(f"число подыгр m должно быть ≥ 1, получено {m}")
    views: List[GameTranscript] = []
    for ell in range(m):
        sub = meta.next_game(ell, tuple(views))
        views.append(run_online_game(sub.mechanism, sub.adversary, sub.horizon, sub.g, b, sub.adversary_seed))
    return CompositionView(transcripts=tuple(views))


def composition_epsilon(
    epsilon: float, m: int, delta_prime: float, delta: float = 0.0
) -> Tuple[float, float]:
    """ε′ = √(2m·ln(1/δ′))·ε + m·ε·(e^ε − 1) и δ-член m·δ + δ′."""
    if not epsilon > 0 or m < 1 or not 0 < delta_prime < 1:
        raise ParameterError(f"недопустимые параметры композиции: ε={epsilon}, m={m}, δ′={delta_prime}")
    eps_prime = math.sqrt(2 * m * math.log(1.0 / delta_prime)) * epsilon + m * epsilon * math.expm1(epsilon)
    return eps_prime, m * delta + delta_prime


def group_epsilon(epsilon: float, delta: float, g: int) -> Tuple[float, float]:
    """(g·ε, g·e^{εg}·δ)."""
    if g < 0:
        raise ParameterError(f"g должно быть ≥ 0, получено {g}")
    return g * epsilon, g * math.exp(epsilon * g) * delta


# ---------- игра в монетки ----------

COIN_P_MAX = 5.0 / 6.0
_COIN_TOL = 1e-12


def check_coin_move(p: float, q: float, round_index: int) -> None:
    """0 ≤ p ≤ 5/6 и p/5 ≤ q ≤ 1 − p."""
    if not (
        -_COIN_TOL <= p <= COIN_P_MAX + _COIN_TOL
        and p / 5.0 - _COIN_TOL <= q <= 1.0 - p + _COIN_TOL
    ):
        raise StrategyContractError(f"недопустимые смещения p={p}, q={q}", round_index)


class CoinStrategy(ABC):
    """Стратегия противника в игре монеток: смещения (p_i, q_i) по истории."""

    name: str = "strategy"
    # Без событий стратегия повторяет ход (для ранней остановки пакетного прогона)
    stationary: bool = True

    @abstractmethod
    def choose_batch(
        self, i: int, budget: np.ndarray, reward: np.ndarray, last: np.ndarray
    ) -> Tuple[np.ndarray, np.ndarray]:
        ...

    def choose(self, i: int, budget: int, reward: int, last: int) -> Tuple[float, float]:
        p, q = self.choose_batch(i, np.array([budget]), np.array([reward]), np.array([last]))
        return float(p[0]), float(q[0])


class ZeroStrategy(CoinStrategy):
    name = "zero"

    def choose_batch(self, i, budget, reward, last):
        zeros = np.zeros(budget.shape)
        return zeros, zeros


class GreedyStrategy(CoinStrategy):
    """p = 5/6, q = 1/6 каждый раунд."""
    name = "greedy"

    def choose_batch(self, i, budget, reward, last):
        return np.full(budget.shape, COIN_P_MAX), np.full(budget.shape, 1.0 / 6.0)


class BudgetPacedStrategy(CoinStrategy):
    """Жадная, пока бюджет > 1; на последней единице бюджета — осторожная p = 0.3, q = p/5."""
    name = "budget-paced"

    def choose_batch(self, i, budget, reward, last):
        p = np.where(budget > 1, COIN_P_MAX, 0.3)
        return p, p / 5.0


class StreakStrategy(CoinStrategy):
    """После награды снижает ставку до p = 1/2, иначе играет p = 5/6; q = p/5."""
    name = "streak"
    stationary = False

    def choose_batch(self, i, budget, reward, last):
        p = np.where(last == 1, 0.5, COIN_P_MAX)
        return p, p / 5.0


COIN_STRATEGIES = {
    cls.name: cls for cls in (ZeroStrategy, GreedyStrategy, BudgetPacedStrategy, StreakStrategy)
}


def make_strategy(name: str) -> CoinStrategy:
    try:
        return COIN_STRATEGIES[name]()
    except KeyError:
        raise ParameterError(
            f"неизвестная стратегия {name!r}; доступны: {', '.join(sorted(COIN_STRATEGIES))}"
        ) from None


def run_coin_game(strategy: CoinStrategy, k: int, m: int, src: RandomSource) -> int:
    """Одна игра: награда при X = 1 и бюджете > 0, иначе при X = 2 бюджет уменьшается."""
    if k < 0 or m < 0:
        raise ParameterError(f"требуется k ≥ 0 и m ≥ 0, получено k={k}, m={m}")
    budget, reward, last = k, 0, 0
    for i in range(m):
        p, q = strategy.choose(i, budget, reward, last)
        check_coin_move(p, q, i)
        u = src.uniform()
        last = 1 if u < p else (2 if u < p + q else 0)
        if last == 1 and budget > 0:
            reward += 1
        elif last == 2:
            budget -= 1
    return reward


def run_coin_game_batch(
    strategy: CoinStrategy, k: int, m: int, runs: int, src: RandomSource
) -> np.ndarray:
    """
    runs независимых игр векторно. Игры с исчерпанным бюджетом больше не дают наград
    и выбывают; прогон заканчивается, когда выбыли все.
    """
    if k < 0 or m < 0 or runs < 1:
        raise ParameterError(f"требуется k ≥ 0, m ≥ 0, runs ≥ 1, получено k={k}, m={m}, runs={runs}")
    budget = np.full(runs, k, dtype=np.int64)
    reward = np.zeros(runs, dtype=np.int64)
    last = np.zeros(runs, dtype=np.int8)

    for i in range(m):
        active = np.flatnonzero(budget > 0)
        if active.size == 0:
            break
        p, q = strategy.choose_batch(i, budget[active], reward[active], last[active])
        bad = (p < -_COIN_TOL) | (p > COIN_P_MAX + _COIN_TOL) | (q < p / 5.0 - _COIN_TOL) | (q > 1.0 - p + _COIN_TOL)
        if np.any(bad):
            j = int(np.flatnonzero(bad)[0])
            raise StrategyContractError(f"недопустимые смещения p={p[j]}, q={q[j]}", i)
        if strategy.stationary and not np.any(p > 0) and not np.any(q > 0):
            break

        u = src.uniform_block(active.size)
        outcome = np.where(u < p, 1, np.where(u < p + q, 2, 0)).astype(np.int8)
        reward[active] += outcome == 1
        budget[active] -= outcome == 2
        last[active] = outcome

    return reward


def coin_tail_bound(k: int, lam: float) -> float:
    """exp(−λ/6 + 3(k+1)), обрезанная сверху единицей."""
    return min(1.0, math.exp(-lam / 6.0 + 3.0 * (k + 1)))
