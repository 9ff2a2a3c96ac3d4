"""
AboveThreshold и ChallengeAT над заранее вычисленными значениями запросов.

Запрос — число f_i(S) с объявленной чувствительностью Δ; датасет механизму не нужен.
AboveThreshold останавливается по точному числу положительных ответов,
ChallengeAT — по выходу приватного счётчика, который сам является ε-DP.
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Union

from .counter import PrivateCounter, counter_error_bound
from .errors import MechanismStateError, ParameterError
from .models import MechanismConstants, PrivacyBudget
from .noise import NoiseMonitor, RandomSource, sample_laplace

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class QueryValue:
    """Значение запроса f_i(S) и его чувствительность Δ."""
    value: float
    sensitivity: float = 1.0

    def __post_init__(self):
        if not self.sensitivity > 0:
            raise ParameterError(f"чувствительность должна быть положительной, получено {self.sensitivity}")


def above_threshold_scale(
    sensitivity: float, epsilon: float, delta: float, reports: int, c_gamma: float = 1.0
) -> float:
    """γ_AT = c_γ·(Δ/ε)·√r·ln(r/δ)."""
    _check_sparse_params(sensitivity, epsilon, delta, reports)
    return c_gamma * (sensitivity / epsilon) * math.sqrt(reports) * math.log(reports / delta)


def challenge_at_scale(
    sensitivity: float, epsilon: float, delta: float, reports: int, lam: float, c_gamma: float = 1.0
) -> float:
    """γ = c_γ·(Δ/ε)·√(r+λ)·ln((r+λ)/δ)."""
    _check_sparse_params(sensitivity, epsilon, delta, reports)
    effective = reports + lam
    return c_gamma * (sensitivity / epsilon) * math.sqrt(effective) * math.log(effective / delta)


def _check_sparse_params(sensitivity: float, epsilon: float, delta: float, reports: int) -> None:
    if not sensitivity > 0:
        raise ParameterError(f"чувствительность должна быть положительной, получено {sensitivity}")
    if not epsilon > 0:
        raise ParameterError(f"ε должно быть положительным, получено {epsilon}")
    if not 0 < delta < 1:
        raise ParameterError(f"δ должно лежать в (0, 1), получено {delta}")
    if reports < 1:
        raise ParameterError(f"число положительных ответов r должно быть ≥ 1, получено {reports}")


class _SparseBase:
    """Общая часть: порог, шум, проверка чувствительности, инструментирование."""

    def __init__(self, threshold: float, sensitivity: float, gamma: float, src: RandomSource):
        self.threshold = float(threshold)
        self.sensitivity = float(sensitivity)
        self.gamma = float(gamma)
        self._src = src
        self.rounds = 0
        self.positives = 0
        self.halted = False
        self.halt_round: Optional[int] = None
        self.monitor = NoiseMonitor()

    def _noisy_compare(self, query: Union[QueryValue, float]) -> int:
        if self.halted:
            raise MechanismStateError(
                f"{type(self).__name__} остановлен в раунде {self.halt_round}, запрос отклонён"
            )
        if isinstance(query, QueryValue):
            if query.sensitivity != self.sensitivity:
                raise ParameterError(
                    f"чувствительность запроса {query.sensitivity} ≠ объявленной {self.sensitivity}"
                )
            value = query.value
        else:
            value = float(query)

        noise = sample_laplace(self._src, self.gamma)
        self.monitor.observe(noise, self.gamma)
        self.rounds += 1
        sigma = 1 if value + noise >= self.threshold else 0
        self.positives += sigma
        return sigma

    def _halt(self) -> None:
        self.halted = True
        self.halt_round = self.rounds
        logger.debug(f"{type(self).__name__}: остановка в раунде {self.rounds}")


class AboveThreshold(_SparseBase):
    """
    Классический AboveThreshold: σ_i = 1{f_i + Lap(γ_AT) ≥ t},
    остановка после r-го положительного ответа (точный подсчёт).
    """

    def __init__(
        self,
        threshold: float,
        epsilon: float,
        delta: float,
        reports: int,
        src: RandomSource,
        sensitivity: float = 1.0,
        c_gamma: float = 1.0,
    ):
        gamma = above_threshold_scale(sensitivity, epsilon, delta, reports, c_gamma)
        super().__init__(threshold, sensitivity, gamma, src)
        self.epsilon = float(epsilon)
        self.delta = float(delta)
        self.reports = int(reports)

    def __repr__(self) -> str:
        return (
            f"AboveThreshold(t={self.threshold}, r={self.reports}, γ={self.gamma:.4g}, "
            f"positives={self.positives}, halted={self.halted})"
        )

    def step(self, query: Union[QueryValue, float]) -> int:
        sigma = self._noisy_compare(query)
        if self.positives >= self.reports:
            self._halt()
        return sigma

    def good_event(self, horizon: int, beta: float) -> bool:
        return self.monitor.within(math.log(horizon / beta))


class ChallengeAT(_SparseBase):
    """
    ChallengeAT: тот же шумный порог, но остановка — по выходу приватного счётчика
    count_i ≥ r. σ раунда остановки возвращается, все дальнейшие запросы отклоняются.
    """

    def __init__(
        self,
        threshold: float,
        budget: PrivacyBudget,
        reports: int,
        src: RandomSource,
        sensitivity: float = 1.0,
        constants: Optional[MechanismConstants] = None,
    ):
        constants = constants or MechanismConstants()
        lam = counter_error_bound(budget.horizon, budget.epsilon, budget.beta, constants.c_lambda)
        gamma = challenge_at_scale(
            sensitivity, budget.epsilon, budget.delta, reports, lam, constants.c_gamma
        )
        super().__init__(threshold, sensitivity, gamma, src)
        self.budget = budget
        self.reports = int(reports)
        self.lam = lam
        self.counter = PrivateCounter(budget.horizon, budget.epsilon, src.spawn("counter"))
        self.last_count = 0

    def __repr__(self) -> str:
        return (
            f"ChallengeAT(t={self.threshold}, r={self.reports}, λ={self.lam:.4g}, "
            f"γ={self.gamma:.4g}, round={self.rounds}, halted={self.halted})"
        )

    def step(self, query: Union[QueryValue, float], count_bit: Optional[int] = None) -> int:
        """
        Один запрос. count_bit подменяет бит, подаваемый в счётчик
        (вариант доказательства, где вызовной раунд считается нулём).
        """
        sigma = self._noisy_compare(query)
        self.last_count = self.counter.feed(sigma if count_bit is None else count_bit)
        if self.last_count >= self.reports:
            self._halt()
        return sigma

    def skip_round(self) -> None:
        """Раунд без сравнения: в счётчик идёт 0, раунды счётчика не сдвигаются относительно T."""
        if self.halted:
            raise MechanismStateError(f"ChallengeAT остановлен в раунде {self.halt_round}, запрос отклонён")
        self.last_count = self.counter.feed(0)
        if self.last_count >= self.reports:
            self._halt()

    @property
    def observed_lambda(self) -> int:
        """Реализованная максимальная ошибка счётчика в этом прогоне."""
        return self.counter.max_error

    def accuracy_margin(self) -> float:
        """G = γ·ln(T/β): запас, вне которого σ совпадает с точным сравнением на событии E."""
        return self.gamma * self.budget.log_horizon_over_beta

    def good_event(self) -> bool:
        """Событие E: шум сравнения и все узлы счётчика в пределах квантиля ln(T/β)."""
        quantile = self.budget.log_horizon_over_beta
        return self.monitor.within(quantile) and self.counter.monitor.within(quantile)


def above_threshold_step(state: AboveThreshold, query: Union[QueryValue, float]) -> int:
    return state.step(query)


def challenge_at_step(state: ChallengeAT, query: Union[QueryValue, float]) -> int:
    return state.step(query)
