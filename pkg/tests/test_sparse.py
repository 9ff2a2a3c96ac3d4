import math

import pytest
from hypothesis import given, settings, strategies as st

from library.errors import MechanismStateError, ParameterError
from library.models import MechanismConstants, PrivacyBudget
from library.noise import RandomSource
from library.sparse import (
    AboveThreshold,
    ChallengeAT,
    QueryValue,
    above_threshold_scale,
    above_threshold_step,
    challenge_at_scale,
    challenge_at_step,
)


def _budget(horizon=256, epsilon=1.0):
    return PrivacyBudget(epsilon=epsilon, delta=1e-5, beta=0.05, horizon=horizon)


def test_above_threshold_scale_formula():
    gamma = above_threshold_scale(2.0, 0.5, 1e-5, 9, c_gamma=0.5)
    assert gamma == pytest.approx(0.5 * (2.0 / 0.5) * 3 * math.log(9 / 1e-5))


def test_challenge_at_scale_uses_r_plus_lambda():
    assert challenge_at_scale(1.0, 1.0, 1e-5, 4, 5.0) == pytest.approx(3 * math.log(9 / 1e-5))


@pytest.mark.parametrize(
    "sensitivity, epsilon, delta, reports",
    [(0.0, 1.0, 1e-5, 3), (1.0, 0.0, 1e-5, 3), (1.0, 1.0, 0.0, 3), (1.0, 1.0, 1e-5, 0)],
)
def test_bad_sparse_parameters(sensitivity, epsilon, delta, reports):
    with pytest.raises(ParameterError):
        above_threshold_scale(sensitivity, epsilon, delta, reports)


def test_query_value_needs_positive_sensitivity():
    with pytest.raises(ParameterError):
        QueryValue(1.0, sensitivity=0.0)


def test_above_threshold_halts_after_r_positives():
    at = AboveThreshold(0.0, 1.0, 1e-5, 3, RandomSource(1, zero_noise=True))
    answers = [above_threshold_step(at, v) for v in (-1.0, 1.0, -2.0, 0.0, 5.0)]
    assert answers == [0, 1, 0, 1, 1]
    assert at.halted and at.halt_round == 5
    with pytest.raises(MechanismStateError):
        at.step(1.0)


def test_challenge_at_zero_noise_halts_on_rth_positive():
    cat = ChallengeAT(0.0, _budget(), 2, RandomSource(2, zero_noise=True))
    assert challenge_at_step(cat, -3.0) == 0
    assert challenge_at_step(cat, 3.0) == 1
    assert not cat.halted
    assert challenge_at_step(cat, 3.0) == 1
    assert cat.halted and cat.halt_round == 3
    assert cat.last_count == 2
    with pytest.raises(MechanismStateError):
        cat.step(0.0)


def test_sensitivity_mismatch_rejected():
    cat = ChallengeAT(0.0, _budget(), 2, RandomSource(2), sensitivity=1.0)
    with pytest.raises(ParameterError):
        cat.step(QueryValue(0.0, sensitivity=2.0))


def test_count_bit_override_feeds_counter():
    cat = ChallengeAT(0.0, _budget(), 1, RandomSource(3, zero_noise=True))
    assert cat.step(5.0, count_bit=0) == 1
    assert not cat.halted
    assert cat.counter.true_count == 0


def test_lambda_and_gamma_follow_constants():
    budget = _budget(horizon=1024, epsilon=0.5)
    constants = MechanismConstants(c_gamma=0.1, c_lambda=0.2)
    cat = ChallengeAT(0.0, budget, 10, RandomSource(0), constants=constants)
    lam = 0.2 * (1 / 0.5) * math.log(1024) * math.log(1024 / 0.05)
    assert cat.lam == pytest.approx(lam)
    assert cat.gamma == pytest.approx(challenge_at_scale(1.0, 0.5, 1e-5, 10, lam, c_gamma=0.1))
    assert cat.accuracy_margin() == pytest.approx(cat.gamma * math.log(1024 / 0.05))


def test_same_seed_same_transcript():
    values = [((i * 7) % 11) - 5.0 for i in range(200)]

    def run():
        cat = ChallengeAT(0.0, _budget(), 5, RandomSource(77, zero_noise=False),
                          constants=MechanismConstants(c_gamma=0.01, c_lambda=0.01))
        out = []
        for v in values:
            if cat.halted:
                break
            out.append(cat.step(v))
        return out

    assert run() == run()


@settings(max_examples=40, deadline=None)
@given(
    st.integers(0, 2**32),
    st.integers(1, 20),
    st.lists(st.floats(min_value=-20, max_value=20), min_size=1, max_size=256),
)
def test_halt_count_within_observed_counter_error(seed, reports, values):
    """В раунде остановки точное число σ = 1 лежит в [r − λ_obs, r + λ_obs]."""
    cat = ChallengeAT(
        0.0, _budget(horizon=256), reports, RandomSource(seed, zero_noise=False),
        constants=MechanismConstants(c_gamma=0.01, c_lambda=0.01),
    )
    for v in values:
        if cat.halted:
            break
        cat.step(v)
    if cat.halted:
        lam = cat.observed_lambda
        assert reports - lam <= cat.positives <= reports + lam


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32), st.lists(st.floats(min_value=-100, max_value=100), min_size=1, max_size=200))
def test_answers_exact_outside_margin_under_good_event(seed, values):
    """На событии E ответ совпадает с точным сравнением, если |f − t| > G."""
    cat = ChallengeAT(0.0, _budget(horizon=256), 200, RandomSource(seed, zero_noise=False),
                      constants=MechanismConstants(c_gamma=0.001))
    answered = []
    for v in values:
        if cat.halted:
            break
        answered.append((v, cat.step(v)))
    if cat.good_event():
        margin = cat.accuracy_margin()
        for v, sigma in answered:
            if v > margin:
                assert sigma == 1
            elif v < -margin:
                assert sigma == 0


def test_above_threshold_good_event_flag():
    at = AboveThreshold(0.0, 1.0, 1e-5, 3, RandomSource(1, zero_noise=True))
    at.step(-1.0)
    assert at.good_event(100, 0.05)


def _run_until_halt(mechanism, values):
    answers = []
    for v in values:
        if mechanism.halted:
            break
        answers.append(mechanism.step(v))
    return answers, mechanism.halt_round


@settings(max_examples=60, deadline=None)
@given(
    st.integers(0, 2**32),
    st.sampled_from([1, 2, 5]),
    st.lists(st.integers(-3, 3).map(float), min_size=1, max_size=200),
)
def test_zero_noise_challenge_at_matches_above_threshold(seed, reports, values):
    """Без шума точный счётчик останавливает ChallengeAT на r-м «да», как AboveThreshold."""
    at = AboveThreshold(0.0, 1.0, 1e-5, reports, RandomSource(seed, zero_noise=True))
    cat = ChallengeAT(0.0, _budget(horizon=256), reports, RandomSource(seed, zero_noise=True))
    assert _run_until_halt(cat, values) == _run_until_halt(at, values)
    assert cat.positives == at.positives


def test_skip_round_feeds_zero_to_counter():
    cat = ChallengeAT(0.0, _budget(horizon=16), 2, RandomSource(3, zero_noise=True))
    cat.skip_round()
    assert cat.counter.rounds_consumed == 1
    assert cat.rounds == 0 and cat.last_count == 0
    assert cat.step(1.0) == 1
    assert not cat.halted
    assert cat.step(1.0) == 1
    assert cat.halted and cat.halt_round == 2
    assert cat.counter.rounds_consumed == 3
    with pytest.raises(MechanismStateError):
        cat.skip_round()
