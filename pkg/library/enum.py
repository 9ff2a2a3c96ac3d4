"""
Перечисления библиотеки.
Выделено в отдельный файл для избежания циклических импортов.
"""
from enum import Enum


class AdversaryStyle(str, Enum):
    """Способ выбора точек при генерации реализуемого потока."""
    UNIFORM = "uniform-random"
    MISTAKE_FORCING = "mistake-forcing"
    ROUND_ROBIN = "round-robin"


class HaltCause(str, Enum):
    """Причина остановки POP."""
    NONE = "none"
    CAT_HALTED = "cat-halted"
    MISTAKE_CAP = "mistake-cap"


class PoolMode(str, Enum):
    """Хранение k экспертов POP."""
    AUTO = "auto"              # grouped для детерминированных обучателей
    GROUPED = "grouped"        # эксперты с одинаковым состоянием хранятся один раз
    INDEPENDENT = "independent"


class LearnerKind(str, Enum):
    """Непубличные онлайн-обучатели, доступные из CLI."""
    SOA = "soa"
    HALVING = "halving"
    RANDOMIZED_HALVING = "randomized-halving"
    AGNOSTIC = "agnostic"


class CatVariant(str, Enum):
    """Варианты игры ChallengeAT: исходная и промежуточные гибриды доказательства."""
    STANDARD = "standard"
    NO_COUNT = "no_count"
    ABOVE_THRESHOLD = "above_threshold"
    SKIP_CHALLENGE = "skip_challenge"


class AuditGame(str, Enum):
    """Игры, которые умеет проверять команда audit."""
    RANDOMIZED_RESPONSE = "randomized-response"
    LEAK = "leak"
    CHALLENGE_AT = "challenge-at"
    POP = "pop"
    COMPOSITION = "composition"
    GROUP = "group"


class Verdict(str, Enum):
    """Итог аудита: PASS — нарушение не обнаружено (это не доказательство приватности)."""
    PASS = "PASS"
    FAIL = "FAIL"


class Command(str, Enum):
    """Подкоманды CLI."""
    COUNTER_BENCH = "counter-bench"
    POP_RUN = "pop-run"
    POP_SWEEP = "pop-sweep"
    COIN_GAME = "coin-game"
    AUDIT = "audit"
    LDIM = "ldim"
    HISTORY = "history"
