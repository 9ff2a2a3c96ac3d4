"""
Эмпирический аудит приватности игр.

N испытаний на каждое значение бита b, исход испытания проецируется в конечное событие
(по умолчанию — префикс из K выпущенных ответов). Для каждого события F и направления
считается консервативная оценка ln((p_lo[F|b] − δ) / p_hi[F|b′]) по интервалам
Клоппера–Пирсона с поправкой Бонферрони. PASS означает только «нарушение не найдено».
"""
import logging
import math
from collections import Counter
from typing import Callable, Dict, Iterable, Optional, Sequence, Tuple

from scipy.stats import beta as beta_dist

from .enum import Verdict
from .errors import InsufficientTrialsError, ParameterError
from .games import Adversary, GameMechanism, group_epsilon, run_hybrid_game, run_online_game
from .models import AuditReport, GroupAuditReport

logger = logging.getLogger(__name__)

# Цели ε не ниже этой на мощность не проверяются
_DETECTABLE_EPSILON_CAP = 30.0

# Исход испытания: bit, trial_index → дискретное событие
TrialFn = Callable[[int, int], str]
# Свежий механизм испытания по его индексу; свежий противник
MechanismFactory = Callable[[int], GameMechanism]
AdversaryFactory = Callable[[], Adversary]


class AuditCounts:
    """Мультимножества исходов по значениям бита; слияние ассоциативно и коммутативно."""

    def __init__(self):
        self.outcomes: Dict[int, Counter] = {0: Counter(), 1: Counter()}
        self.trials: Dict[int, int] = {0: 0, 1: 0}

    def __repr__(self) -> str:
        return f"AuditCounts(N0={self.trials[0]}, N1={self.trials[1]}, events={len(self.events())})"

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, AuditCounts)
            and self.outcomes == other.outcomes
            and self.trials == other.trials
        )

    def add(self, bit: int, outcome: str) -> None:
        self.outcomes[bit][outcome] += 1
        self.trials[bit] += 1

    def merge(self, other: "AuditCounts") -> "AuditCounts":
        merged = AuditCounts()
        for bit in (0, 1):
            merged.outcomes[bit] = self.outcomes[bit] + other.outcomes[bit]
            merged.trials[bit] = self.trials[bit] + other.trials[bit]
        return merged

    __add__ = merge

    def events(self) -> Tuple[str, ...]:
        return tuple(sorted(set(self.outcomes[0]) | set(self.outcomes[1])))

    def as_dict(self) -> Dict[str, Tuple[int, int]]:
        return {e: (self.outcomes[0][e], self.outcomes[1][e]) for e in self.events()}


def clopper_pearson(successes: int, trials: int, alpha: float) -> Tuple[float, float]:
    """Двусторонний интервал Клоппера–Пирсона уровня 1 − alpha."""
    if trials < 1:
        raise ParameterError("для интервала нужно хотя бы одно испытание")
    lower = 0.0 if successes == 0 else float(beta_dist.ppf(alpha / 2, successes, trials - successes + 1))
    upper = 1.0 if successes == trials else float(beta_dist.ppf(1 - alpha / 2, successes + 1, trials - successes))
    return lower, upper


def required_trials(alpha: float) -> int:
    """
    Нижний порог N: меньше испытаний не хватает, чтобы даже идеально разделяющее событие
    (N из N против 0 из N) дало положительную границу при двух событиях и поправке α/8
    на сторону интервала. Это проверка осмысленности, а не мощности: см. detectable_trials.
    """
    return int(math.floor(math.log2(8.0 / alpha))) + 1


def detectable_trials(alpha: float, epsilon: float) -> int:
    """
    Наименьшее N, при котором идеально разделяющее событие даёт нижнюю границу выше ε.
    При меньшем N вердикт FAIL против цели ε невозможен в принципе.
    """
    log_odds = -math.log1p(math.exp(-epsilon))
    return int(math.floor(math.log(alpha / 8.0) / log_odds)) + 1


def audit_report(
    counts: AuditCounts,
    game_id: str,
    prefix_length: int,
    alpha: float,
    delta: float,
    target_epsilon: float,
) -> AuditReport:
    """Нижняя граница ε и вердикт по уже собранным счётчикам."""
    if not 0 < alpha < 1:
        raise ParameterError(f"α должно лежать в (0, 1), получено {alpha}")
    needed = required_trials(alpha)
    smallest = min(counts.trials.values())
    if smallest < needed:
        raise InsufficientTrialsError(smallest, needed, alpha)
    if target_epsilon < _DETECTABLE_EPSILON_CAP and smallest < detectable_trials(alpha, target_epsilon):
        logger.warning(
            f"⚠️ Аудит {game_id}: N={smallest} мало, чтобы опровергнуть ε ≤ {target_epsilon:.4g} "
            f"(нужно ≥ {detectable_trials(alpha, target_epsilon)})"
        )

    events = counts.events()
    alpha_eff = alpha / (2 * max(1, len(events)))
    bound = 0.0
    point = 0.0
    for event in events:
        intervals = {
            bit: clopper_pearson(counts.outcomes[bit][event], counts.trials[bit], alpha_eff)
            for bit in (0, 1)
        }
        freqs = {bit: counts.outcomes[bit][event] / counts.trials[bit] for bit in (0, 1)}
        for bit, other in ((0, 1), (1, 0)):
            p_lo = intervals[bit][0] - delta
            p_hi = intervals[other][1]
            if p_lo > 0 and p_hi > 0:
                bound = max(bound, math.log(p_lo / p_hi))
            if freqs[bit] - delta > 0 and freqs[other] > 0:
                point = max(point, math.log((freqs[bit] - delta) / freqs[other]))

    verdict = Verdict.PASS if bound <= target_epsilon else Verdict.FAIL
    report = AuditReport(
        game_id=game_id,
        trials=smallest,
        prefix_length=prefix_length,
        alpha=alpha,
        delta=delta,
        target_epsilon=target_epsilon,
        epsilon_lower_bound=bound,
        epsilon_point=point,
        confidence=1.0 - alpha,
        counts=counts.as_dict(),
        verdict=verdict,
    )
    if verdict == Verdict.FAIL:
        logger.warning(f"⚠️ Аудит {game_id}: нижняя граница {bound:.4f} > цели {target_epsilon:.4f}")
    else:
        logger.info(f"✅ Аудит {game_id}: нижняя граница {bound:.4f} ≤ цели {target_epsilon:.4f}")
    return report


def collect_counts(trial_fn: TrialFn, trial_indices: Iterable[int]) -> AuditCounts:
    """Испытания для обоих значений бита с одинаковыми индексами (и сидами)."""
    counts = AuditCounts()
    for idx in trial_indices:
        for bit in (0, 1):
            counts.add(bit, trial_fn(bit, idx))
    return counts


def audit_epsilon(
    trial_fn: TrialFn,
    trials: int,
    game_id: str = "game",
    prefix_length: int = 4,
    alpha: float = 0.05,
    delta: float = 0.0,
    target_epsilon: float = 1.0,
) -> AuditReport:
    """Аудит в одном процессе; отказ до запуска, если N слишком мало."""
    needed = required_trials(alpha)
    if trials < needed:
        raise InsufficientTrialsError(trials, needed, alpha)
    counts = collect_counts(trial_fn, range(trials))
    return audit_report(counts, game_id, prefix_length, alpha, delta, target_epsilon)


def group_report(
    g: int,
    end_to_end: AuditReport,
    hybrids: Sequence[AuditReport],
    game_id: Optional[str] = None,
) -> GroupAuditReport:
    """Сводка групповой проверки; номер первого непрошедшего гибрида попадает в журнал."""
    report = GroupAuditReport(game_id=game_id or f"group-g{g}", g=g, end_to_end=end_to_end, hybrids=list(hybrids))
    if report.failed_hybrids:
        logger.warning(f"⚠️ {report.game_id}: не прошли гибриды ℓ = {report.failed_hybrids}")
    elif report.passed:
        logger.info(f"✅ {report.game_id}: сквозная игра и {g} гибридов в пределах цели")
    return report


def group_privacy_check(
    mechanism_factory: MechanismFactory,
    adversary_factory: AdversaryFactory,
    horizon: int,
    g: int,
    epsilon: float,
    delta: float,
    trials: int,
    alpha: float = 0.05,
    c_priv: float = 1.0,
    slack: float = 0.0,
    prefix_length: int = 4,
    game_id: Optional[str] = None,
) -> GroupAuditReport:
    """
    Групповая приватность через гибриды.

    Для ℓ = 0..g−1 аудируется пара W_ℓ / W_{ℓ+1} (отличаются одним вызовом) против
    c_priv·ε + slack при δ; сквозная OnlineGame с g вызовами — против группы
    c_priv·g·ε + slack при g·e^{εg}·δ. Механизм испытания idx строится фабрикой заново
    для обоих значений бита, сид противника — idx.
    """
    if g < 0:
        raise ParameterError(f"для групповой проверки нужно g ≥ 0, получено {g}")
    game_id = game_id or f"group-g{g}"
    hybrids = []
    for ell in range(g):
        def hybrid_trial(bit: int, idx: int, ell: int = ell) -> str:
            transcript = run_hybrid_game(mechanism_factory(idx), adversary_factory(), horizon, ell + bit, idx)
            return transcript.prefix(prefix_length)

        hybrids.append(audit_epsilon(
            hybrid_trial, trials, game_id=f"{game_id}-hybrid{ell}", prefix_length=prefix_length,
            alpha=alpha, delta=delta, target_epsilon=c_priv * epsilon + slack,
        ))

    def group_trial(bit: int, idx: int) -> str:
        transcript = run_online_game(mechanism_factory(idx), adversary_factory(), horizon, g, bit, idx)
        return transcript.prefix(prefix_length)

    group_eps, group_delta = group_epsilon(epsilon, delta, g)
    end_to_end = audit_epsilon(
        group_trial, trials, game_id=game_id, prefix_length=prefix_length,
        alpha=alpha, delta=group_delta, target_epsilon=c_priv * group_eps + slack,
    )
    return group_report(g, end_to_end, hybrids, game_id)
