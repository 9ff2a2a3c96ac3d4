import math

import numpy as np
import pytest
from pydantic import ValidationError

from library.enum import CatVariant
from library.errors import AdversaryContractError, ParameterError, StrategyContractError
from library.games import (
    COIN_P_MAX,
    COIN_STRATEGIES,
    Adversary,
    AdversaryMove,
    BudgetPacedStrategy,
    CatGameParams,
    CatMove,
    CoinStrategy,
    FactoryMetaAdversary,
    GreedyStrategy,
    HybridAdversary,
    LeakyEchoMechanism,
    PopMechanism,
    RandomizedResponseMechanism,
    RandomStreamAdversary,
    RecordingMechanism,
    ReplayAdversary,
    ScriptedAdversary,
    ScriptedCatAdversary,
    StreakStrategy,
    ThresholdCatAdversary,
    SubGame,
    ZeroStrategy,
    check_coin_move,
    coin_tail_bound,
    composition_epsilon,
    group_epsilon,
    make_strategy,
    run_challenge_at_game,
    run_coin_game,
    run_coin_game_batch,
    run_composition_game,
    run_hybrid_game,
    run_online_game,
)
from library.learners import SOALearner
from library.models import GameTranscript, LabeledExample, MechanismConstants, PopConfig, PrivacyBudget
from library.noise import RandomSource
from library.pop import PrivateOnlinePredictor

BUDGET = PrivacyBudget(epsilon=1.0, delta=1e-5, beta=0.05, horizon=64)


class EchoInputMechanism(RecordingMechanism):
    """Отвечает входом текущего раунда."""

    def __init__(self):
        super().__init__(LeakyEchoMechanism())

    def respond(self, x: int) -> int:
        super().respond(x)
        return x


class ListeningAdversary(ReplayAdversary):
    """Запоминает всё, что показал стенд."""

    def reset(self, src):
        super().reset(src)
        self.seen = []

    def observe(self, answer):
        self.seen.append(answer)


def _pair(x, y):
    return LabeledExample(x=x, y=y)


# ---------- OnlineGame ----------

@pytest.mark.parametrize("b", [0, 1])
def test_mechanism_sees_only_selected_input(b):
    mechanism = RecordingMechanism(LeakyEchoMechanism())
    moves = [AdversaryMove.plain(0, 1), AdversaryMove(1, _pair(2, 0), _pair(3, 1)), AdversaryMove.plain(4, 0)]
    run_online_game(mechanism, ScriptedAdversary(moves), 3, 1, b, 5)
    assert mechanism.inputs == [(0, 1), (3, 1) if b else (2, 0), (4, 0)]


def test_challenge_answers_are_masked():
    adversary = ListeningAdversary((5, 0), (6, 1), (1, 1), challenge_round=1)
    transcript = run_online_game(EchoInputMechanism(), adversary, 4, 1, 1, 3)
    assert transcript.released == (1, None, 1, 1)
    assert transcript.challenge_rounds == (1,)
    assert adversary.seen == [1, None, 1, 1]
    assert transcript.prefix(6) == "1⊥11--"


def test_transcript_rejects_unmasked_challenge():
    with pytest.raises(ValidationError):
        GameTranscript(adversary_seed=0, released=(1, 0), challenge_rounds=(1,))
    with pytest.raises(ValidationError):
        GameTranscript(adversary_seed=0, released=(None,), challenge_rounds=())


def test_too_many_challenges():
    adversary = ReplayAdversary((0, 0), (1, 1), (2, 0), challenges=2)
    with pytest.raises(AdversaryContractError) as info:
        run_online_game(LeakyEchoMechanism(), adversary, 5, 1, 0, 1)
    assert info.value.round_index == 1


def test_plain_round_pairs_must_match():
    adversary = ScriptedAdversary([AdversaryMove(0, _pair(0, 0), _pair(1, 0))])
    with pytest.raises(AdversaryContractError):
        run_online_game(LeakyEchoMechanism(), adversary, 2, 1, 0, 1)


@pytest.mark.parametrize("b, g, horizon", [(2, 1, 3), (0, -1, 3), (1, 1, -1)])
def test_game_parameter_checks(b, g, horizon):
    with pytest.raises(ParameterError):
        run_online_game(LeakyEchoMechanism(), ScriptedAdversary([AdversaryMove.plain(0, 0)]), horizon, g, b, 0)


def test_adversary_seed_drives_adversary():
    labels = [0, 1, 1, 0, 1]
    first = run_online_game(EchoInputMechanism(), RandomStreamAdversary(labels), 30, 0, 0, 42)
    second = run_online_game(EchoInputMechanism(), RandomStreamAdversary(labels), 30, 0, 0, 42)
    other = run_online_game(EchoInputMechanism(), RandomStreamAdversary(labels), 30, 0, 0, 43)
    assert first == second
    assert first.released != other.released


def test_game_stops_when_pop_halts(full4):
    config = PopConfig(k=3, r=1, budget=PrivacyBudget(epsilon=1.0, delta=1e-5, beta=0.05, horizon=500))
    predictor = PrivateOnlinePredictor(config, SOALearner(full4), RandomSource(1, zero_noise=True))
    # все эксперты учат ноль; расхождение голосов в первой же точке, выученной одним экспертом
    transcript = run_online_game(PopMechanism(predictor), RandomStreamAdversary([0, 0, 0, 0]), 500, 0, 0, 9)
    assert predictor.halted
    assert transcript.halted_round == len(transcript.released) == predictor.halt_round


# ---------- гибриды ----------

def test_hybrid_adversary_rewrites_challenges():
    inner = ReplayAdversary((0, 0), (1, 1), (2, 0), challenges=3)
    hybrid = HybridAdversary(inner, ell=1)
    hybrid.reset(RandomSource(0))
    moves = [hybrid.next_round(i) for i in range(4)]
    assert moves[0] == AdversaryMove(0, _pair(1, 1), _pair(1, 1))
    assert moves[1] == AdversaryMove(1, _pair(0, 0), _pair(1, 1))
    assert moves[2] == AdversaryMove(0, _pair(0, 0), _pair(0, 0))
    assert moves[3] == AdversaryMove.plain(2, 0)


def test_hybrid_adversary_masks_inner_challenges():
    inner = ListeningAdversary((0, 0), (1, 1), (2, 0), challenges=2)
    hybrid = HybridAdversary(inner, ell=0)
    run_online_game(EchoInputMechanism(), hybrid, 3, 1, 0, 1)
    assert inner.seen == [None, None, 2]


def test_hybrid_rejects_negative_ell():
    with pytest.raises(ParameterError):
        HybridAdversary(ScriptedAdversary([AdversaryMove.plain(0, 0)]), -1)


@pytest.mark.parametrize("ell, b", [(0, 0), (3, 1)])
def test_hybrid_endpoints_match_online_game(ell, b):
    def fresh():
        return RecordingMechanism(RandomizedResponseMechanism(1.0, RandomSource(4, zero_noise=False)))

    adversary = ReplayAdversary((0, 0), (1, 1), (0, 1), challenges=3)
    hybrid_mech, game_mech = fresh(), fresh()
    hybrid = run_hybrid_game(hybrid_mech, adversary, 10, ell, 6)
    game = run_online_game(game_mech, adversary, 10, 3, b, 6)
    assert hybrid == game
    assert hybrid_mech.inputs == game_mech.inputs


def test_middle_hybrid_mixes_pairs():
    mechanism = RecordingMechanism(LeakyEchoMechanism())
    adversary = ReplayAdversary((0, 0), (1, 1), (2, 0), challenges=3)
    run_hybrid_game(mechanism, adversary, 4, 1, 0)
    assert mechanism.inputs == [(1, 1), (0, 0), (0, 0), (2, 0)]


# ---------- ChallengeAT ----------

def _cat_params(variant=CatVariant.STANDARD, g=1, reports=3):
    return CatGameParams(
        threshold=0.0, budget=BUDGET, reports=reports,
        constants=MechanismConstants(c_gamma=0.01, c_lambda=0.01), variant=variant, g=g,
    )


@pytest.mark.parametrize("variant", list(CatVariant))
def test_cat_game_masks_challenge(variant):
    transcript = run_challenge_at_game(
        ThresholdCatAdversary(0.0, challenge_rounds=(2,)), _cat_params(variant), 1, 3, RandomSource(5, zero_noise=False)
    )
    assert transcript.challenge_rounds == (2,)
    assert transcript.released[2] is None
    assert all(a in (0, 1) for i, a in enumerate(transcript.released) if i != 2)


def test_cat_zero_noise_halts_after_reports():
    transcript = run_challenge_at_game(
        ThresholdCatAdversary(0.0, challenge_rounds=()), _cat_params(reports=3), 0, 1, RandomSource(1, zero_noise=True)
    )
    # запросы ровно на пороге: σ = 1 в каждом раунде
    assert transcript.released == (1, 1, 1)
    assert transcript.halted_round == 3


def test_cat_no_count_variant_delays_halt():
    """Вызов с σ = 1 не засчитывается в счётчик: остановка на раунд позже."""
    adversary = ThresholdCatAdversary(0.0, challenge_rounds=(0,))
    zero = RandomSource(1, zero_noise=True)
    standard = run_challenge_at_game(adversary, _cat_params(reports=2), 1, 1, zero.spawn("a"))
    no_count = run_challenge_at_game(adversary, _cat_params(CatVariant.NO_COUNT, reports=2), 1, 1, zero.spawn("b"))
    assert standard.halted_round == 2
    assert no_count.halted_round == 3


def test_cat_skip_challenge_variant():
    adversary = ThresholdCatAdversary(0.0, challenge_rounds=(0,))
    transcript = run_challenge_at_game(
        adversary, _cat_params(CatVariant.SKIP_CHALLENGE, reports=2), 0, 1, RandomSource(1, zero_noise=True)
    )
    assert transcript.released == (None, 1, 1)
    assert transcript.halted_round == 3


def test_cat_datasets_must_be_neighbours():
    adversary = ScriptedCatAdversary((0.0, 3.0), [CatMove(0, 0.0, 0.0)])
    with pytest.raises(AdversaryContractError):
        run_challenge_at_game(adversary, _cat_params(), 0, 1, RandomSource(0))


def test_cat_challenge_limit():
    adversary = ThresholdCatAdversary(0.0, challenge_rounds=(0, 1))
    with pytest.raises(AdversaryContractError):
        run_challenge_at_game(adversary, _cat_params(g=1, reports=50), 0, 1, RandomSource(0))
    transcript = run_challenge_at_game(adversary, _cat_params(g=2, reports=50), 0, 1, RandomSource(0))
    assert transcript.challenge_rounds == (0, 1)


def test_cat_plain_queries_must_match():
    adversary = ScriptedCatAdversary((0.0, 1.0), [CatMove(0, 0.0, 1.0)])
    with pytest.raises(AdversaryContractError):
        run_challenge_at_game(adversary, _cat_params(), 1, 1, RandomSource(0))


# ---------- композиция ----------

def _rr_subgame(ell):
    return SubGame(
        RandomizedResponseMechanism(1.0, RandomSource(100 + ell, zero_noise=False)),
        ReplayAdversary((0, 0), (1, 0), (0, 0)),
        3, 1, 200 + ell,
    )


def test_composition_runs_m_games():
    view = run_composition_game(FactoryMetaAdversary(_rr_subgame), 3, 1)
    assert len(view.transcripts) == 3
    assert [t.adversary_seed for t in view.transcripts] == [200, 201, 202]
    assert all(t.challenge_rounds == (0,) for t in view.transcripts)
    assert view.prefix(2).count("|") == 2
    with pytest.raises(ParameterError):
        run_composition_game(FactoryMetaAdversary(_rr_subgame), 0, 1)


def test_composition_epsilon_formula():
    eps_prime, delta_total = composition_epsilon(0.1, 10, 1e-6, delta=1e-8)
    assert eps_prime == pytest.approx(math.sqrt(20 * math.log(1e6)) * 0.1 + 10 * 0.1 * math.expm1(0.1))
    assert delta_total == pytest.approx(10 * 1e-8 + 1e-6)
    with pytest.raises(ParameterError):
        composition_epsilon(0.1, 0, 1e-6)


def test_group_epsilon():
    assert group_epsilon(0.5, 1e-6, 3) == pytest.approx((1.5, 3 * math.exp(1.5) * 1e-6))
    assert group_epsilon(0.5, 1e-6, 0) == (0.0, 0.0)


# ---------- игра в монетки ----------

@pytest.mark.parametrize("p, q", [(0.9, 0.05), (0.5, 0.05), (0.5, 0.6), (-0.1, 0.0)])
def test_invalid_coin_moves(p, q):
    with pytest.raises(StrategyContractError):
        check_coin_move(p, q, 0)


@pytest.mark.parametrize("name", sorted(COIN_STRATEGIES))
def test_builtin_strategies_respect_contract(name):
    strategy = make_strategy(name)
    for budget in range(0, 4):
        for last in (0, 1, 2):
            p, q = strategy.choose(0, budget, 0, last)
            check_coin_move(p, q, 0)


def test_unknown_strategy():
    with pytest.raises(ParameterError):
        make_strategy("nope")


class CheatingStrategy(CoinStrategy):
    name = "cheat"

    def choose_batch(self, i, budget, reward, last):
        return np.full(budget.shape, 0.9), np.full(budget.shape, 0.0)


def test_cheating_strategy_rejected():
    with pytest.raises(StrategyContractError):
        run_coin_game(CheatingStrategy(), 3, 10, RandomSource(0))
    with pytest.raises(StrategyContractError):
        run_coin_game_batch(CheatingStrategy(), 3, 10, 5, RandomSource(0))


def test_zero_budget_gives_no_reward():
    assert run_coin_game(GreedyStrategy(), 0, 50, RandomSource(0)) == 0
    assert not run_coin_game_batch(GreedyStrategy(), 0, 50, 10, RandomSource(0)).any()
    assert not run_coin_game_batch(ZeroStrategy(), 3, 50, 10, RandomSource(0)).any()


def test_batch_is_reproducible():
    a = run_coin_game_batch(StreakStrategy(), 2, 200, 100, RandomSource(3, zero_noise=False))
    b = run_coin_game_batch(StreakStrategy(), 2, 200, 100, RandomSource(3, zero_noise=False))
    assert np.array_equal(a, b)


def test_greedy_reward_mean():
    """Жадная стратегия при k = 1: награды до первого X = 2, в среднем 5."""
    rewards = run_coin_game_batch(GreedyStrategy(), 1, 500, 20_000, RandomSource(8, zero_noise=False))
    assert float(rewards.mean()) == pytest.approx(5.0, abs=0.2)


def test_budget_paced_is_cautious_on_last_unit():
    p, q = BudgetPacedStrategy().choose(0, 1, 0, 0)
    assert p == pytest.approx(0.3) and q == pytest.approx(0.06)
    p, _ = BudgetPacedStrategy().choose(0, 2, 0, 0)
    assert p == pytest.approx(COIN_P_MAX)


def test_tail_bound():
    assert coin_tail_bound(1, 0.0) == 1.0
    assert coin_tail_bound(1, 60.0) == pytest.approx(math.exp(-4))


@pytest.mark.slow
@pytest.mark.parametrize("name", sorted(COIN_STRATEGIES))
@pytest.mark.parametrize("k", [1, 5])
def test_coin_tail_below_bound(name, k):
    runs = 50_000
    rewards = run_coin_game_batch(make_strategy(name), k, 10_000, runs, RandomSource(k + 17, zero_noise=False))
    for lam in (40.0, 60.0, 80.0, 100.0, 120.0, 150.0, 200.0):
        tail = float(np.mean(rewards > lam))
        stderr = math.sqrt(max(tail * (1 - tail), 1.0 / runs) / runs)
        assert tail <= coin_tail_bound(k, lam) + 3 * stderr
