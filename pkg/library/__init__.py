"""
library/__init__.py: Централизованный экспорт всех модулей библиотеки.
Используется challenge_dp_main, commands и тестами.
"""

# Ошибки и перечисления
from .errors import (
    AcceptanceBoundError,
    AdversaryContractError,
    ChallengeDPError,
    ClassFileError,
    ConfigError,
    ContractViolationError,
    InsufficientTrialsError,
    MechanismStateError,
    ParameterError,
    ProtocolError,
    RealizabilityError,
    StrategyContractError,
)
from .enum import AdversaryStyle, AuditGame, CatVariant, Command, HaltCause, LearnerKind, PoolMode, Verdict

# Модели
from .models import (
    AgnosticRunResult,
    AuditReport,
    CompositionView,
    ExperimentConfig,
    GameTranscript,
    GroupAuditReport,
    LabeledExample,
    MechanismConstants,
    MistakeCapConfig,
    PopConfig,
    PopRunSummary,
    PrivacyBudget,
    RoundRecord,
)

# Шум и счётчик
from .noise import NoiseMonitor, RandomSource, laplace_mechanism, sample_laplace
from .counter import PrivateCounter, counter_error_bound, counter_feed, counter_new

# Разреженный вектор
from .sparse import AboveThreshold, ChallengeAT, QueryValue, above_threshold_step, challenge_at_step

# Классы гипотез и обучатели
from .learners import (
    AgnosticExpertLearner,
    FiniteHypothesisClass,
    HalvingLearner,
    OnlineLearner,
    RandomizedHalvingLearner,
    SOALearner,
    ldim,
)
from .class_loader import dump_class, load_class

# POP
from .pop import (
    PrivateOnlinePredictor,
    agnostic_pop_run,
    pop_default_params,
    pop_feed_label,
    pop_round,
    pop_uw_feed_label,
    pop_uw_round,
    run_pop,
)

# Игры и аудит
from .games import (
    run_challenge_at_game,
    run_coin_game,
    run_composition_game,
    run_hybrid_game,
    run_online_game,
)
from .audit import AuditCounts, audit_epsilon, audit_report, group_privacy_check, group_report

# Инфраструктура CLI
from .middlewares import ErrorHandlerMiddleware
from .results import ResultWriter
from .stats import stats_manager
from .timers import RunTimer
from .workers import run_trials

__all__ = [
    # Ошибки
    "AcceptanceBoundError",
    "AdversaryContractError",
    "ChallengeDPError",
    "ClassFileError",
    "ConfigError",
    "ContractViolationError",
    "InsufficientTrialsError",
    "MechanismStateError",
    "ParameterError",
    "ProtocolError",
    "RealizabilityError",
    "StrategyContractError",

    # Enum и модели
    "AdversaryStyle",
    "AuditGame",
    "CatVariant",
    "Command",
    "HaltCause",
    "LearnerKind",
    "PoolMode",
    "Verdict",
    "AgnosticRunResult",
    "AuditReport",
    "CompositionView",
    "ExperimentConfig",
    "GameTranscript",
    "GroupAuditReport",
    "LabeledExample",
    "MechanismConstants",
    "MistakeCapConfig",
    "PopConfig",
    "PopRunSummary",
    "PrivacyBudget",
    "RoundRecord",

    # Механизмы
    "NoiseMonitor",
    "RandomSource",
    "laplace_mechanism",
    "sample_laplace",
    "PrivateCounter",
    "counter_error_bound",
    "counter_feed",
    "counter_new",
    "AboveThreshold",
    "ChallengeAT",
    "QueryValue",
    "above_threshold_step",
    "challenge_at_step",

    # Обучатели
    "AgnosticExpertLearner",
    "FiniteHypothesisClass",
    "HalvingLearner",
    "OnlineLearner",
    "RandomizedHalvingLearner",
    "SOALearner",
    "ldim",
    "dump_class",
    "load_class",

    # POP
    "PrivateOnlinePredictor",
    "agnostic_pop_run",
    "pop_default_params",
    "pop_feed_label",
    "pop_round",
    "pop_uw_feed_label",
    "pop_uw_round",
    "run_pop",

    # Игры и аудит
    "run_challenge_at_game",
    "run_coin_game",
    "run_composition_game",
    "run_hybrid_game",
    "run_online_game",
    "AuditCounts",
    "audit_epsilon",
    "audit_report",
    "group_privacy_check",
    "group_report",

    # Инфраструктура
    "ErrorHandlerMiddleware",
    "ResultWriter",
    "RunTimer",
    "run_trials",
    "stats_manager",
]
