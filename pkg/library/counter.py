"""
ε-DP счётчик битов при непрерывном наблюдении (бинарное дерево, горизонт T известен заранее).

Каждый бит попадает не более чем в ⌈log2 T⌉ + 1 диадических узлов, поэтому шум узла
Lap((⌈log2 T⌉ + 1)/ε) даёт ε-DP всего потока по композиции уровней.
Шум узлов разыгрывается блоком из собственного источника счётчика и адресуется индексом
узла, так что одинаковые сиды дают одинаковые деревья.
"""
import logging
import math
from typing import Iterable, List

import numpy as np

from .errors import MechanismStateError, ParameterError
from .noise import NoiseMonitor, RandomSource, sample_laplace_block

logger = logging.getLogger(__name__)


def tree_levels(horizon: int) -> int:
    """⌈log2 T⌉ + 1."""
    return (horizon - 1).bit_length() + 1


class PrivateCounter:
    """Бинарный механизм: оценка префиксной суммы = сумма ≤ ⌈log2 T⌉ шумных узлов."""

    def __init__(self, horizon: int, epsilon: float, src: RandomSource):
        if horizon < 1:
            raise ParameterError(f"горизонт счётчика должен быть ≥ 1, получено {horizon}")
        if not epsilon > 0:
            raise ParameterError(f"ε счётчика должно быть положительным, получено {epsilon}")

        self.horizon = int(horizon)
        self.epsilon = float(epsilon)
        self.levels = tree_levels(self.horizon)
        self.noise_scale = self.levels / self.epsilon

        # Узлы уровня j: полные диадические блоки длины 2^j внутри [1..T]
        self._offsets: List[int] = []
        total = 0
        for level in range(self.levels):
            self._offsets.append(total)
            total += self.horizon >> level
        self._node_noise = sample_laplace_block(src, self.noise_scale, total)

        self._exact = [0] * self.levels
        self._noisy = [0.0] * self.levels
        self.rounds_consumed = 0
        self.true_count = 0
        self.max_error = 0
        self.monitor = NoiseMonitor()

    def __repr__(self) -> str:
        return (
            f"PrivateCounter(T={self.horizon}, ε={self.epsilon}, "
            f"round={self.rounds_consumed}, scale={self.noise_scale:g})"
        )

    def feed(self, bit: int) -> int:
        """Принять бит и вернуть округлённую оценку префиксной суммы, зажатую в [0, i]."""
        if self.rounds_consumed >= self.horizon:
            raise MechanismStateError(
                f"счётчик исчерпан: горизонт {self.horizon} раундов уже использован"
            )
        if bit not in (0, 1):
            raise ParameterError(f"счётчик принимает только биты 0/1, получено {bit!r}")

        i = self.rounds_consumed + 1
        level = (i & -i).bit_length() - 1

        # Новый узел уровня level поглощает все открытые узлы младших уровней
        exact = bit
        for lower in range(level):
            exact += self._exact[lower]
            self._exact[lower] = 0
            self._noisy[lower] = 0.0

        noise = float(self._node_noise[self._offsets[level] + (i >> level) - 1])
        self.monitor.observe(noise, self.noise_scale)
        self._exact[level] = exact
        self._noisy[level] = exact + noise

        raw = 0.0
        rest, bit_level = i, 0
        while rest:
            if rest & 1:
                raw += self._noisy[bit_level]
            rest >>= 1
            bit_level += 1

        self.rounds_consumed = i
        self.true_count += bit
        estimate = min(max(math.floor(raw + 0.5), 0), i)
        error = abs(estimate - self.true_count)
        if error > self.max_error:
            self.max_error = error
        return estimate

    @property
    def exhausted(self) -> bool:
        return self.rounds_consumed >= self.horizon

    def good_event(self, beta: float) -> bool:
        """Все затронутые узлы в пределах квантиля ln(T/β)."""
        return self.monitor.within(math.log(self.horizon / beta))


def counter_new(horizon: int, epsilon: float, src: RandomSource) -> PrivateCounter:
    """Создать счётчик на горизонт T."""
    return PrivateCounter(horizon, epsilon, src)


def counter_feed(counter: PrivateCounter, bit: int) -> int:
    """Подать бит, получить оценку."""
    return counter.feed(bit)


def counter_error_bound(horizon: int, epsilon: float, beta: float, c_lambda: float = 1.0) -> float:
    """λ = c_λ·(1/ε)·ln T·ln(T/β) — форма границы ошибки счётчика."""
    return c_lambda * (1.0 / epsilon) * math.log(horizon) * math.log(horizon / beta)


def run_counter_stream(counter: PrivateCounter, bits: Iterable[int]) -> List[int]:
    """Прогнать поток битов, вернуть все оценки."""
    return [counter.feed(int(b)) for b in bits]


def max_counter_error(horizon: int, epsilon: float, src: RandomSource) -> int:
    """Максимальная ошибка на случайном потоке длины T (поток берётся из src.spawn)."""
    bits_src = src.spawn("bits")
    bits = (bits_src.uniform_block(horizon) < 0.5).astype(np.int8)
    counter = PrivateCounter(horizon, epsilon, src.spawn("counter"))
    run_counter_stream(counter, bits)
    return counter.max_error
