"""
Сидированная случайность и точная выборка Лапласа для всех механизмов.

Выборка — обратной функцией распределения по одному равномерному u ∈ (0, 1):
x = −γ·sign(u − ½)·ln(1 − 2|u − ½|). Один розыгрыш = ровно одно равномерное число,
поэтому транскрипты воспроизводятся бит в бит. Формальная DP для плавающей точки
(атаки на младшие биты) вне рамок библиотеки.
"""
import logging
import math
import zlib
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import ParameterError

logger = logging.getLogger(__name__)

# Наименьшее положительное u, которое может выдать генератор с шагом 2^-53
_TINY_UNIFORM = 2.0 ** -53


def _zero_noise_default() -> bool:
    from config.settings import settings
    return settings.noise_disabled


class RandomSource:
    """
    Источник случайности одного механизма: 64-битный сид и число сделанных розыгрышей.

    Один владелец; между механизмами источники не разделяются — дочерние потоки
    получаются через spawn(key).
    """

    def __init__(
        self,
        seed: int,
        zero_noise: Optional[bool] = None,
        *,
        _sequence: Optional[np.random.SeedSequence] = None,
    ):
        if seed < 0 or seed >= 2**64:
            raise ParameterError(f"сид должен быть 64-битным беззнаковым, получено {seed}")
        self.seed = int(seed)
        self.zero_noise = _zero_noise_default() if zero_noise is None else bool(zero_noise)
        self._sequence = _sequence or np.random.SeedSequence(self.seed)
        self._generator = np.random.Generator(np.random.PCG64(self._sequence))
        self.draws = 0

    def __repr__(self) -> str:
        return f"RandomSource(seed={self.seed}, draws={self.draws}, zero_noise={self.zero_noise})"

    @classmethod
    def for_trial(
        cls, master_seed: int, trial_index: int, zero_noise: Optional[bool] = None
    ) -> "RandomSource":
        """Источник испытания trial_index, выведенный из мастер-сида."""
        sequence = np.random.SeedSequence(master_seed, spawn_key=(trial_index,))
        seed = int(sequence.generate_state(1, np.uint64)[0])
        return cls(seed, zero_noise, _sequence=sequence)

    def spawn(self, key: Union[int, str]) -> "RandomSource":
        """Независимый дочерний поток; одинаковый ключ даёт одинаковый поток."""
        if isinstance(key, str):
            key = zlib.crc32(key.encode("utf-8"))
        sequence = np.random.SeedSequence(
            self._sequence.entropy,
            spawn_key=tuple(self._sequence.spawn_key) + (int(key),),
        )
        seed = int(sequence.generate_state(1, np.uint64)[0])
        return RandomSource(seed, self.zero_noise, _sequence=sequence)

    def uniform(self) -> float:
        """Одно равномерное u ∈ (0, 1)."""
        self.draws += 1
        u = float(self._generator.random())
        return u if u > 0.0 else _TINY_UNIFORM

    def uniform_block(self, size: int) -> np.ndarray:
        """size равномерных чисел в (0, 1) одним вызовом."""
        self.draws += size
        u = self._generator.random(size)
        u[u == 0.0] = _TINY_UNIFORM
        return u

    def integers(self, high: int) -> int:
        """Равномерное целое из [0, high)."""
        self.draws += 1
        return int(self._generator.integers(high))

    def coin(self) -> int:
        """Честная монетка."""
        return 1 if self.uniform() < 0.5 else 0

    def bernoulli(self, p: float) -> int:
        return 1 if self.uniform() < p else 0


@dataclass(frozen=True)
class LaplaceScale:
    """Параметр масштаба γ > 0 распределения Lap(γ)."""
    gamma: float

    def __post_init__(self):
        if not (self.gamma > 0) or math.isinf(self.gamma):
            raise ParameterError(f"масштаб Лапласа должен быть положительным, получено {self.gamma}")


def _as_gamma(scale: Union[LaplaceScale, float]) -> float:
    if isinstance(scale, LaplaceScale):
        return scale.gamma
    gamma = float(scale)
    if not (gamma > 0) or math.isinf(gamma):
        raise ParameterError(f"масштаб Лапласа должен быть положительным, получено {gamma}")
    return gamma


def laplace_inverse_cdf(u: float, gamma: float) -> float:
    """Обратная функция распределения Lap(γ) в точке u ∈ (0, 1)."""
    centered = u - 0.5
    if centered == 0.0:
        return 0.0
    return -gamma * math.copysign(1.0, centered) * math.log1p(-2.0 * abs(centered))


def sample_laplace(src: RandomSource, scale: Union[LaplaceScale, float]) -> float:
    """Один розыгрыш Lap(γ); источник сдвигается ровно на одно равномерное число."""
    gamma = _as_gamma(scale)
    u = src.uniform()
    if src.zero_noise:
        return 0.0
    return laplace_inverse_cdf(u, gamma)


def sample_laplace_block(
    src: RandomSource, scale: Union[LaplaceScale, float], size: int
) -> np.ndarray:
    """size независимых розыгрышей Lap(γ) векторно (по одному равномерному на розыгрыш)."""
    gamma = _as_gamma(scale)
    u = src.uniform_block(size)
    if src.zero_noise:
        return np.zeros(size)
    centered = u - 0.5
    return -gamma * np.sign(centered) * np.log1p(-2.0 * np.abs(centered))


def laplace_scale(sensitivity: float, epsilon: float) -> float:
    """Масштаб Δ/ε механизма Лапласа."""
    if not sensitivity > 0:
        raise ParameterError(f"чувствительность должна быть положительной, получено {sensitivity}")
    if not epsilon > 0:
        raise ParameterError(f"ε должно быть положительным, получено {epsilon}")
    return sensitivity / epsilon


def laplace_mechanism(value: float, sensitivity: float, epsilon: float, src: RandomSource) -> float:
    """value + Lap(Δ/ε)."""
    return value + sample_laplace(src, laplace_scale(sensitivity, epsilon))


class NoiseMonitor:
    """
    Инструментирование «хорошего события»: максимум |шум| / масштаб по всем розыгрышам.

    Событие выполнено при квантиле q, если каждый розыгрыш удовлетворяет |шум| ≤ масштаб·q.
    """

    __slots__ = ("max_ratio", "draws")

    def __init__(self):
        self.max_ratio = 0.0
        self.draws = 0

    def observe(self, noise: float, scale: float) -> None:
        self.draws += 1
        ratio = abs(noise) / scale
        if ratio > self.max_ratio:
            self.max_ratio = ratio

    def observe_block(self, noise: np.ndarray, scale: float) -> None:
        if noise.size == 0:
            return
        self.draws += int(noise.size)
        self.max_ratio = max(self.max_ratio, float(np.max(np.abs(noise))) / scale)

    def within(self, quantile: float) -> bool:
        return self.max_ratio <= quantile
