"""
Иерархия исключений библиотеки и коды выхода CLI.
"""


class ChallengeDPError(Exception):
    """Базовое исключение challenge-dp-lab."""

    exit_code: int = 1


class ParameterError(ChallengeDPError, ValueError):
    """Недопустимый числовой параметр (γ ≤ 0, ε ≤ 0, горизонт 0, пустой класс…)."""

    exit_code = 2


class ConfigError(ChallengeDPError, ValueError):
    """Ошибка конфигурации команды или файла конфигурации."""

    exit_code = 2


class ClassFileError(ChallengeDPError, ValueError):
    """Некорректный файл класса гипотез."""

    exit_code = 2


class InsufficientTrialsError(ParameterError):
    """Аудитор отказывается работать: испытаний слишком мало для заданной уверенности."""

    def __init__(self, trials: int, required_n: int, alpha: float):
        self.trials = trials
        self.required_n = required_n
        self.alpha = alpha
        super().__init__(
            f"N={trials} испытаний недостаточно для уверенности {1 - alpha:.4g}: "
            f"требуется N ≥ {required_n}"
        )


class MechanismStateError(ChallengeDPError, RuntimeError):
    """Операция недопустима в текущем состоянии механизма (остановлен, горизонт исчерпан)."""

    exit_code = 3


class ProtocolError(MechanismStateError):
    """Нарушен порядок вызовов: метка без ожидающего раунда или два раунда подряд."""


class ContractViolationError(ChallengeDPError):
    """Противник, стратегия или обучатель нарушили свой контракт."""

    exit_code = 3

    def __init__(self, message: str, round_index: int | None = None):
        self.round_index = round_index
        if round_index is not None:
            message = f"раунд {round_index}: {message}"
        super().__init__(message)


class AdversaryContractError(ContractViolationError):
    """Противник превысил g вызовов или подал разные пары вне вызова."""


class StrategyContractError(ContractViolationError):
    """Стратегия игры в монетки выбрала недопустимые (p, q)."""


class RealizabilityError(ContractViolationError):
    """Пространство версий опустело на якобы реализуемом потоке."""


class AcceptanceBoundError(ChallengeDPError):
    """Эксперимент обнаружил нарушение проверяемой границы."""

    exit_code = 4


def exit_code_for(error: BaseException) -> int:
    """Код выхода CLI для исключения: 2 конфигурация, 3 контракт, 4 граница, 1 прочее."""
    if isinstance(error, ChallengeDPError):
        return error.exit_code
    return 1
