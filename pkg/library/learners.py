"""
Непубличные онлайн-обучатели над конечными табличными классами гипотез.

Класс хранится по столбцам: ones[x] — битовая маска строк, помечающих x единицей.
Пространство версий — тоже битовая маска над строками, поэтому сужение V на h(x) = y
стоит одну операцию над int, а размерность Литтлстоуна мемоизируется по маске.

Контракт обучателя: predict(x) не меняет состояние, snapshot() даёт независимую копию,
state_key — хешируемый ключ состояния (None для стохастических обучателей).
"""
import logging
import math
from abc import ABC, abstractmethod
from typing import Dict, Hashable, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .enum import AdversaryStyle
from .errors import ParameterError, RealizabilityError
from .models import LabeledExample
from .noise import RandomSource

logger = logging.getLogger(__name__)

RowLike = Union[str, Sequence[int]]

# Предел полного класса: 2^n строк
MAX_FULL_CLASS_N = 16


class FiniteHypothesisClass:
    """Неизменяемая таблица |H| × n бинарных меток с различными строками."""

    def __init__(self, rows: Sequence[RowLike], names: Optional[Sequence[str]] = None):
        if not rows:
            raise ParameterError("класс гипотез пуст: нужна хотя бы одна строка")

        parsed: List[Tuple[int, ...]] = []
        for idx, row in enumerate(rows):
            bits = tuple(int(ch) for ch in row) if isinstance(row, str) else tuple(int(b) for b in row)
            if any(b not in (0, 1) for b in bits):
                raise ParameterError(f"строка {idx}: допустимы только метки 0/1")
            parsed.append(bits)

        n = len(parsed[0])
        if n < 1:
            raise ParameterError("размер домена n должен быть ≥ 1")
        for idx, bits in enumerate(parsed):
            if len(bits) != n:
                raise ParameterError(f"строка {idx}: длина {len(bits)} ≠ n={n}")
        if len(set(parsed)) != len(parsed):
            raise ParameterError("строки класса гипотез должны быть различными")
        if names is not None and len(names) != len(parsed):
            raise ParameterError(f"имён {len(names)}, а строк {len(parsed)}")

        self.n = n
        self.size = len(parsed)
        self.names: Optional[Tuple[str, ...]] = tuple(names) if names is not None else None
        self.table = np.array(parsed, dtype=np.int8)
        self.table.setflags(write=False)
        self.full_mask = (1 << self.size) - 1

        self.ones: List[int] = []
        for x in range(n):
            mask = 0
            for r in np.flatnonzero(self.table[:, x]):
                mask |= 1 << int(r)
            self.ones.append(mask)

        self._ldim_cache: Dict[int, int] = {}
        self._soa_cache: Dict[Tuple[int, int], int] = {}

    def __repr__(self) -> str:
        return f"FiniteHypothesisClass(n={self.n}, |H|={self.size})"

    def __len__(self) -> int:
        return self.size

    def label(self, h_index: int, x: int) -> int:
        return int(self.table[h_index, x])

    def row_string(self, h_index: int) -> str:
        return "".join(str(int(b)) for b in self.table[h_index])

    def check_point(self, x: int) -> None:
        if not 0 <= x < self.n:
            raise ParameterError(f"точка домена {x} вне [0, {self.n})")

    def restrict(self, mask: int, x: int, y: int) -> int:
        """V ∩ {h : h(x) = y}."""
        return mask & self.ones[x] if y else mask & ~self.ones[x]

    def ldim_of_mask(self, mask: int) -> int:
        """Размерность Литтлстоуна подкласса, заданного маской; пустой подкласс даёт −1."""
        if mask == 0:
            return -1
        if mask & (mask - 1) == 0:
            return 0
        cached = self._ldim_cache.get(mask)
        if cached is not None:
            return cached

        # ldim(V) ≤ ⌊log2 |V|⌋
        upper = mask.bit_count().bit_length() - 1
        best = 0
        for ones in self.ones:
            sub1 = mask & ones
            if sub1 == 0 or sub1 == mask:
                continue
            sub0 = mask ^ sub1
            if min(sub0.bit_count(), sub1.bit_count()).bit_length() <= best:
                continue
            d0 = self.ldim_of_mask(sub0)
            if 1 + d0 <= best:
                continue
            d1 = self.ldim_of_mask(sub1)
            best = max(best, 1 + min(d0, d1))
            if best >= upper:
                break

        self._ldim_cache[mask] = best
        return best

    def soa_label(self, mask: int, x: int) -> int:
        """Метка SOA в точке x при пространстве версий mask (ничья → 1)."""
        key = (mask, x)
        cached = self._soa_cache.get(key)
        if cached is not None:
            return cached
        sub1 = mask & self.ones[x]
        label = 1 if self.ldim_of_mask(sub1) >= self.ldim_of_mask(mask ^ sub1) else 0
        self._soa_cache[key] = label
        return label


def ldim(hclass: FiniteHypothesisClass) -> int:
    """Точная размерность Литтлстоуна класса."""
    if hclass.size < 1:
        raise ParameterError("класс гипотез пуст")
    return hclass.ldim_of_mask(hclass.full_mask)


class OnlineLearner(ABC):
    """Онлайн-обучатель: чистый predict, update, независимый snapshot."""

    deterministic: bool = True

    def __init__(self, hclass: FiniteHypothesisClass):
        self.hclass = hclass

    @abstractmethod
    def predict(self, x: int) -> int:
        ...

    @abstractmethod
    def update(self, x: int, y: int) -> None:
        ...

    @abstractmethod
    def snapshot(self) -> "OnlineLearner":
        ...

    @property
    def state_key(self) -> Optional[Hashable]:
        """Ключ состояния для группировки одинаковых экспертов; None — не группируется."""
        return None

    def predict_all(self) -> np.ndarray:
        """Предсказания во всех точках домена."""
        return np.array([self.predict(x) for x in range(self.hclass.n)], dtype=np.int8)


class _VersionSpaceLearner(OnlineLearner):
    """Обучатели, состояние которых — пространство версий."""

    def __init__(self, hclass: FiniteHypothesisClass, version_space: Optional[int] = None):
        super().__init__(hclass)
        self.version_space = hclass.full_mask if version_space is None else version_space

    def __repr__(self) -> str:
        return f"{type(self).__name__}(|V|={self.surviving})"

    @property
    def surviving(self) -> int:
        return self.version_space.bit_count()

    @property
    def state_key(self) -> Optional[Hashable]:
        return self.version_space

    def update(self, x: int, y: int) -> None:
        narrowed = self.hclass.restrict(self.version_space, x, y)
        if narrowed == 0:
            raise RealizabilityError(
                f"пространство версий опустело на примере (x={x}, y={y}): поток не реализуем"
            )
        self.version_space = narrowed

    def snapshot(self) -> "_VersionSpaceLearner":
        return type(self)(self.hclass, self.version_space)


class SOALearner(_VersionSpaceLearner):
    """Standard Optimal Algorithm: метка, чьё сужение имеет большую размерность (ничья → 1)."""

    def predict(self, x: int) -> int:
        return self.hclass.soa_label(self.version_space, x)


class HalvingLearner(_VersionSpaceLearner):
    """Halving: большинство по выжившим строкам, ничья → 1."""

    def predict(self, x: int) -> int:
        positives = (self.version_space & self.hclass.ones[x]).bit_count()
        return 1 if 2 * positives >= self.surviving else 0

    def predict_all(self) -> np.ndarray:
        total = self.surviving
        return np.array(
            [1 if 2 * (self.version_space & ones).bit_count() >= total else 0 for ones in self.hclass.ones],
            dtype=np.int8,
        )


class RandomizedHalvingLearner(_VersionSpaceLearner):
    """Предсказание — метка случайной выжившей строки (розыгрыш из собственного источника)."""

    deterministic = False

    def __init__(
        self,
        hclass: FiniteHypothesisClass,
        version_space: Optional[int] = None,
        src: Optional[RandomSource] = None,
    ):
        super().__init__(hclass, version_space)
        self._src = src if src is not None else RandomSource(0)
        self._copies = 0

    @property
    def state_key(self) -> Optional[Hashable]:
        return None

    def predict(self, x: int) -> int:
        positives = (self.version_space & self.hclass.ones[x]).bit_count()
        return self._src.bernoulli(positives / self.surviving)

    def snapshot(self) -> "RandomizedHalvingLearner":
        self._copies += 1
        return RandomizedHalvingLearner(
            self.hclass, self.version_space, self._src.spawn(f"snapshot-{self._copies}")
        )


def agnostic_beta(mistake_budget: float, class_size: int) -> float:
    """
    Множитель взвешенного большинства по бюджету M*.
    M* = 0 даёт β = 0 (Halving); иначе β = 1/(1 + √(2·ln|H| / M*)).
    """
    if mistake_budget < 0:
        raise ParameterError(f"бюджет ошибок M* должен быть ≥ 0, получено {mistake_budget}")
    if mistake_budget == 0 or class_size <= 1:
        return 0.0
    return 1.0 / (1.0 + math.sqrt(2.0 * math.log(class_size) / mistake_budget))


class AgnosticExpertLearner(OnlineLearner):
    """
    Агностический эксперт: взвешенное большинство по строкам класса.
    Бюджет M* для β обрезается горизонтом: ошибок больше T не бывает.
    Ошибившиеся строки умножают вес на β; если веса обнулились, веса сбрасываются
    к равномерным (перезапуск).
    """

    def __init__(
        self,
        hclass: FiniteHypothesisClass,
        mistake_budget: float = 0.0,
        horizon: int = 1,
        weights: Optional[np.ndarray] = None,
    ):
        super().__init__(hclass)
        if horizon < 1:
            raise ParameterError(f"горизонт должен быть ≥ 1, получено {horizon}")
        self.mistake_budget = float(mistake_budget)
        self.horizon = int(horizon)
        self.beta = agnostic_beta(min(self.mistake_budget, self.horizon), hclass.size)
        self.weights = np.ones(hclass.size) if weights is None else weights.copy()
        self.restarts = 0

    def __repr__(self) -> str:
        return f"AgnosticExpertLearner(M*={self.mistake_budget:g}, β={self.beta:.4g})"

    @property
    def state_key(self) -> Optional[Hashable]:
        return self.weights.tobytes()

    def predict(self, x: int) -> int:
        positive = float(self.weights @ self.hclass.table[:, x])
        return 1 if 2.0 * positive >= float(self.weights.sum()) else 0

    def predict_all(self) -> np.ndarray:
        positive = self.weights @ self.hclass.table
        return (2.0 * positive >= self.weights.sum()).astype(np.int8)

    def update(self, x: int, y: int) -> None:
        wrong = self.hclass.table[:, x] != y
        self.weights = np.where(wrong, self.weights * self.beta, self.weights)
        top = float(self.weights.max())
        if top <= 0.0:
            self.weights = np.ones(self.hclass.size)
            self.restarts += 1
        else:
            self.weights = self.weights / top

    def snapshot(self) -> "AgnosticExpertLearner":
        copy = AgnosticExpertLearner(self.hclass, self.mistake_budget, self.horizon, self.weights)
        copy.restarts = self.restarts
        return copy


def count_mistakes(learner: OnlineLearner, stream: Iterable[LabeledExample]) -> int:
    """Прогнать поток через обучатель, вернуть число ошибок."""
    mistakes = 0
    for example in stream:
        if learner.predict(example.x) != example.y:
            mistakes += 1
        learner.update(example.x, example.y)
    return mistakes


def make_realizable_stream(
    hclass: FiniteHypothesisClass,
    h_index: int,
    length: int,
    style: AdversaryStyle,
    src: RandomSource,
    learner: Optional[OnlineLearner] = None,
) -> List[LabeledExample]:
    """
    Реализуемый поток длины length с метками строки h_index.

    mistake-forcing: в каждом раунде равномерно выбирается точка, где указанный
    обучатель (по умолчанию SOA) ошибается; если таких нет — равномерная точка.
    Переданный обучатель не меняется: противник ведёт свою копию.
    """
    if not 0 <= h_index < hclass.size:
        raise ParameterError(f"индекс гипотезы {h_index} вне [0, {hclass.size})")
    if length < 0:
        raise ParameterError(f"длина потока должна быть ≥ 0, получено {length}")

    style = AdversaryStyle(style)
    row = hclass.table[h_index]
    tracked: Optional[OnlineLearner] = None
    if style == AdversaryStyle.MISTAKE_FORCING:
        tracked = learner.snapshot() if learner is not None else SOALearner(hclass)

    stream: List[LabeledExample] = []
    for i in range(length):
        if style == AdversaryStyle.ROUND_ROBIN:
            x = i % hclass.n
        elif style == AdversaryStyle.UNIFORM:
            x = src.integers(hclass.n)
        else:
            wrong = np.flatnonzero(tracked.predict_all() != row)
            x = int(wrong[src.integers(len(wrong))]) if wrong.size else src.integers(hclass.n)
            tracked.update(x, int(row[x]))
        stream.append(LabeledExample(x=x, y=int(row[x])))
    return stream


def corrupt_stream(
    stream: Sequence[LabeledExample], flips: int, src: RandomSource
) -> List[LabeledExample]:
    """Ровно flips меток, инвертированных в равномерно выбранных различных позициях."""
    if not 0 <= flips <= len(stream):
        raise ParameterError(f"нельзя перевернуть {flips} меток в потоке длины {len(stream)}")
    if flips == 0:
        return list(stream)
    order = np.argsort(src.uniform_block(len(stream)), kind="stable")
    flipped = set(int(i) for i in order[:flips])
    return [
        LabeledExample(x=ex.x, y=1 - ex.y) if i in flipped else ex
        for i, ex in enumerate(stream)
    ]


def opt_mistakes(hclass: FiniteHypothesisClass, stream: Sequence[LabeledExample]) -> int:
    """OPT = min_h Σ|h(x_t) − y_t|."""
    if not stream:
        return 0
    xs = np.fromiter((ex.x for ex in stream), dtype=np.int64, count=len(stream))
    ys = np.fromiter((ex.y for ex in stream), dtype=np.int8, count=len(stream))
    return int((hclass.table[:, xs] != ys).sum(axis=1).min())


# ---------- генераторы классов ----------

def threshold_class(n: int) -> FiniteHypothesisClass:
    """Пороги h_θ(x) = 1{x ≥ θ}, θ = 0..n; ldim = ⌊log2(n+1)⌋."""
    if n < 1:
        raise ParameterError(f"n должно быть ≥ 1, получено {n}")
    rows = [[1 if x >= theta else 0 for x in range(n)] for theta in range(n + 1)]
    return FiniteHypothesisClass(rows, names=[f"θ={theta}" for theta in range(n + 1)])


def full_class(n: int) -> FiniteHypothesisClass:
    """Все 2^n разметок; строка i помечает x битом x числа i."""
    if not 1 <= n <= MAX_FULL_CLASS_N:
        raise ParameterError(f"полный класс поддерживается для 1 ≤ n ≤ {MAX_FULL_CLASS_N}, получено {n}")
    return FiniteHypothesisClass([[(i >> x) & 1 for x in range(n)] for i in range(2 ** n)])


def point_class(n: int, with_zero: bool = True) -> FiniteHypothesisClass:
    """Точечные функции h_i(x) = 1{x = i} и, по желанию, тождественный ноль."""
    if n < 1:
        raise ParameterError(f"n должно быть ≥ 1, получено {n}")
    rows = [[1 if x == i else 0 for x in range(n)] for i in range(n)]
    if with_zero:
        rows.append([0] * n)
    return FiniteHypothesisClass(rows)


def singleton_class(n: int, row: Optional[RowLike] = None) -> FiniteHypothesisClass:
    """Класс из одной гипотезы (по умолчанию тождественный ноль)."""
    if n < 1:
        raise ParameterError(f"n должно быть ≥ 1, получено {n}")
    return FiniteHypothesisClass([row if row is not None else [0] * n])
