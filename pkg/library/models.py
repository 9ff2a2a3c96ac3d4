"""
Модели данных: Pydantic v2.
PrivacyBudget и MechanismConstants протягиваются через все механизмы,
LabeledExample — единица онлайн-потока, GameTranscript — вид противника,
ExperimentConfig — разрешённая конфигурация команды CLI.
"""
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .enum import AdversaryStyle, AuditGame, CatVariant, Command, LearnerKind, PoolMode, Verdict

# Символ ⊥ для замаскированных ответов и символ отсутствующего ответа (после остановки)
MASK_SYMBOL = "⊥"
ABSENT_SYMBOL = "-"


class PrivacyBudget(BaseModel):
    """Бюджет (ε, δ, β, T)."""
    model_config = ConfigDict(frozen=True)

    epsilon: float = Field(..., gt=0)
    delta: float = Field(..., gt=0, lt=1)
    beta: float = Field(0.05, gt=0, lt=1)
    horizon: int = Field(..., ge=1)

    @property
    def log_horizon_over_beta(self) -> float:
        """ln(T/β) — квантиль «хорошего события»."""
        return math.log(self.horizon / self.beta)


class MechanismConstants(BaseModel):
    """Скрытые в O(·) константы; каждая попадает в заголовок файла результатов."""
    model_config = ConfigDict(frozen=True)

    c_gamma: float = Field(1.0, gt=0)
    c_lambda: float = Field(1.0, gt=0)
    c_k: float = Field(1.0, gt=0)
    c_r: float = Field(1.0, gt=0)
    c_priv: float = Field(4.0, gt=0)
    c_k_agnostic: float = Field(1.0, gt=0)
    c_u: float = Field(1.0, gt=0)

    @classmethod
    def from_settings(cls) -> "MechanismConstants":
        from config.settings import settings
        return cls(
            c_gamma=settings.c_gamma,
            c_lambda=settings.c_lambda,
            c_k=settings.c_k,
            c_r=settings.c_r,
            c_priv=settings.c_priv,
            c_k_agnostic=settings.c_k_agnostic,
            c_u=settings.c_u,
        )


class LabeledExample(BaseModel):
    """Точка домена с бинарной меткой. Диапазон индекса проверяет класс гипотез."""
    model_config = ConfigDict(frozen=True)

    x: int = Field(..., ge=0)
    y: int = Field(..., ge=0, le=1)


class RoundRecord(BaseModel):
    """Строка транскрипта POP: (i, x, ŷ, y, σ_i, ℓ_i, ошибка)."""
    i: int
    x: int
    y_hat: int
    y: int
    sigma: int
    ell: int
    mistake: bool
    phase: int = 0


class PopConfig(BaseModel):
    """
    Параметры POP.

    k приводится к нечётному (большинство всегда определено), порог t = −k/4 фиксирован.
    """
    k: int = Field(..., ge=1)
    r: int = Field(..., ge=1)
    budget: PrivacyBudget
    constants: MechanismConstants = Field(default_factory=MechanismConstants)
    pool: PoolMode = PoolMode.AUTO
    use_snapshots: bool = False

    @field_validator("k", mode="after")
    @classmethod
    def force_odd(cls, v):
        return v if v % 2 == 1 else v + 1

    @property
    def threshold(self) -> float:
        return -self.k / 4.0


class MistakeCapConfig(BaseModel):
    """Приватный лимит ошибок POP_[u,w]: остановка, когда шумный счётчик ошибок достигает v."""
    u: int = Field(..., ge=1)
    w: int = Field(..., ge=1)
    v: Optional[int] = None
    randomize_v: bool = False

    @model_validator(mode="after")
    def check_range(self):
        if self.u >= self.w:
            raise ValueError(f"требуется u < w, получено u={self.u}, w={self.w}")
        if self.v is not None and not (self.u <= self.v <= self.w):
            raise ValueError(f"v={self.v} вне [{self.u}, {self.w}]")
        return self


class PopRunSummary(BaseModel):
    """Итог одного прогона POP (или одной фазы агностической обёртки)."""
    rounds: int = 0
    mistakes: int = 0
    positives: int = 0
    halted: bool = False
    halt_round: Optional[int] = None
    halt_cause: str = "none"
    fifth_err: int = 0
    expert_advance: int = 0
    k: int = 1
    r: int = 1


class AgnosticRunResult(BaseModel):
    """Итог agnostic_pop_run: ошибки по фазам и суммарно."""
    phases: List[PopRunSummary] = Field(default_factory=list)
    total_mistakes: int = 0
    rounds: int = 0
    k: int = 1
    r: int = 1
    u: int = 1
    w: int = 2
    records: List[RoundRecord] = Field(default_factory=list)

    @property
    def phase_count(self) -> int:
        return len(self.phases)


class GameTranscript(BaseModel):
    """
    Вид противника после OnlineGame: выпущенные ответы (None = ⊥) и сид противника.

    Инвариант маскировки: ответ замаскирован тогда и только тогда, когда раунд вызовной.
    """
    model_config = ConfigDict(frozen=True)

    adversary_seed: int
    released: Tuple[Optional[int], ...] = ()
    challenge_rounds: Tuple[int, ...] = ()
    halted_round: Optional[int] = None

    @model_validator(mode="after")
    def check_masking(self):
        challenges = set(self.challenge_rounds)
        for i, answer in enumerate(self.released):
            if (answer is None) != (i in challenges):
                raise ValueError(f"нарушена маскировка в раунде {i}")
        return self

    def symbols(self) -> Tuple[str, ...]:
        return tuple(MASK_SYMBOL if a is None else str(a) for a in self.released)

    def prefix(self, length: int) -> str:
        """Первые length ответов как дискретный исход; отсутствующие дополняются '-'."""
        head = list(self.symbols()[:length])
        head.extend(ABSENT_SYMBOL for _ in range(length - len(head)))
        return "".join(head)


class CompositionView(BaseModel):
    """Вид мета-противника: все транскрипты подыгр в порядке запуска."""
    model_config = ConfigDict(frozen=True)

    transcripts: Tuple[GameTranscript, ...] = ()

    def prefix(self, length: int) -> str:
        return "|".join(t.prefix(length) for t in self.transcripts)


class AuditReport(BaseModel):
    """Отчёт аудитора: односторонняя нижняя граница ε, доверительный уровень и вердикт."""
    game_id: str
    trials: int
    prefix_length: int
    alpha: float
    delta: float
    target_epsilon: float
    epsilon_lower_bound: float
    epsilon_point: float
    confidence: float
    counts: Dict[str, Tuple[int, int]] = Field(default_factory=dict)
    verdict: Verdict

    @property
    def passed(self) -> bool:
        return self.verdict == Verdict.PASS


class GroupAuditReport(BaseModel):
    """
    Групповая проверка: сквозная g-вызовная игра против (g·ε, g·e^{εg}·δ)
    и цепочка соседних гибридов W_ℓ / W_{ℓ+1}, каждый против (ε, δ).
    """
    game_id: str
    g: int
    end_to_end: AuditReport
    hybrids: List[AuditReport] = Field(default_factory=list)
    verdict: Verdict = Verdict.PASS

    @model_validator(mode="after")
    def combine_verdicts(self):
        failed = not self.end_to_end.passed or any(not h.passed for h in self.hybrids)
        self.verdict = Verdict.FAIL if failed else Verdict.PASS
        return self

    @property
    def passed(self) -> bool:
        return self.verdict == Verdict.PASS

    @property
    def failed_hybrids(self) -> List[int]:
        return [ell for ell, report in enumerate(self.hybrids) if not report.passed]


class ExperimentConfig(BaseModel):
    """Разрешённая конфигурация подкоманды; целиком попадает в заголовок результатов."""
    model_config = ConfigDict(use_enum_values=False)

    command: Command
    class_file: Optional[Path] = None
    out: Optional[Path] = None

    # бюджет
    epsilon: float = Field(1.0, gt=0)
    delta: float = Field(1e-5, gt=0, lt=1)
    beta: float = Field(0.05, gt=0, lt=1)
    horizon: int = Field(1024, ge=1)

    constants: MechanismConstants = Field(default_factory=MechanismConstants)

    master_seed: int = Field(20240601, ge=0, lt=2**64)
    trials: int = Field(100, ge=1)
    workers: int = Field(1, ge=1)
    no_noise: bool = False

    # counter-bench
    horizon_grid: List[int] = Field(default_factory=lambda: [2**p for p in range(6, 15)])
    max_error_bound: Optional[float] = None

    # pop-run / pop-sweep
    learner: LearnerKind = LearnerKind.SOA
    style: AdversaryStyle = AdversaryStyle.MISTAKE_FORCING
    target: Optional[int] = None
    k: Optional[int] = None
    r: Optional[int] = None
    mistake_bound: Optional[float] = None
    epsilon_grid: List[float] = Field(default_factory=lambda: [0.5, 1.0, 2.0])
    class_files: List[Path] = Field(default_factory=list)
    pool: PoolMode = PoolMode.AUTO

    # coin-game
    strategy: str = "greedy"
    coin_budget: int = Field(5, ge=0)
    coin_rounds: int = Field(10_000, ge=1)
    lambdas: List[float] = Field(default_factory=lambda: [40.0, 60.0, 80.0, 100.0])

    # audit
    game: AuditGame = AuditGame.RANDOMIZED_RESPONSE
    prefix_length: int = Field(4, ge=1, le=8)
    alpha: float = Field(0.05, gt=0, lt=1)
    group_size: int = Field(1, ge=0)
    games_count: int = Field(2, ge=1)
    slack: float = Field(0.0, ge=0)

    # history
    limit: int = Field(10, ge=1)

    @property
    def budget(self) -> PrivacyBudget:
        return PrivacyBudget(
            epsilon=self.epsilon, delta=self.delta, beta=self.beta, horizon=self.horizon
        )

    def header(self) -> Dict[str, Any]:
        """Полный разрешённый конфиг для заголовка файла результатов."""
        return self.model_dump(mode="json")
