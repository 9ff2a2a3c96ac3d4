import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from library.errors import ParameterError
from library.noise import (
    LaplaceScale,
    NoiseMonitor,
    RandomSource,
    laplace_inverse_cdf,
    laplace_mechanism,
    sample_laplace,
    sample_laplace_block,
)


def test_same_seed_same_draws():
    a, b = RandomSource(7, zero_noise=False), RandomSource(7, zero_noise=False)
    assert [sample_laplace(a, 2.0) for _ in range(20)] == [sample_laplace(b, 2.0) for _ in range(20)]


def test_spawn_is_keyed_and_independent_of_parent_draws():
    parent = RandomSource(99, zero_noise=False)
    before = parent.spawn("counter").uniform_block(5)
    parent.uniform_block(100)
    after = parent.spawn("counter").uniform_block(5)
    other = parent.spawn("cat").uniform_block(5)
    assert np.array_equal(before, after)
    assert not np.array_equal(before, other)


def test_for_trial_streams_differ():
    first = RandomSource.for_trial(1, 0, zero_noise=False)
    second = RandomSource.for_trial(1, 1, zero_noise=False)
    assert first.seed != second.seed
    assert RandomSource.for_trial(1, 0, zero_noise=False).seed == first.seed


@pytest.mark.parametrize("seed", [-1, 2**64])
def test_seed_out_of_range(seed):
    with pytest.raises(ParameterError):
        RandomSource(seed)


def test_zero_noise_still_consumes_draws():
    src = RandomSource(3, zero_noise=True)
    assert sample_laplace(src, 5.0) == 0.0
    assert src.draws == 1
    block = sample_laplace_block(src, 5.0, 10)
    assert np.all(block == 0.0)
    assert src.draws == 11


def test_one_uniform_per_draw():
    src = RandomSource(4, zero_noise=False)
    for _ in range(13):
        sample_laplace(src, 1.0)
    assert src.draws == 13


@pytest.mark.parametrize("gamma", [0.0, -1.0, math.inf])
def test_bad_scale(gamma):
    with pytest.raises(ParameterError):
        LaplaceScale(gamma)
    with pytest.raises(ParameterError):
        sample_laplace(RandomSource(1), gamma)


def test_laplace_mechanism_rejects_bad_epsilon():
    with pytest.raises(ParameterError):
        laplace_mechanism(1.0, 1.0, 0.0, RandomSource(1))


@given(st.floats(min_value=1e-9, max_value=1 - 1e-9), st.floats(min_value=0.01, max_value=100))
def test_inverse_cdf_is_odd_around_half(u, gamma):
    assert laplace_inverse_cdf(u, gamma) == pytest.approx(-laplace_inverse_cdf(1 - u, gamma), rel=1e-6, abs=1e-9)


def test_inverse_cdf_center():
    assert laplace_inverse_cdf(0.5, 3.0) == 0.0


def test_empirical_moments():
    gamma = 2.0
    draws = sample_laplace_block(RandomSource(2024, zero_noise=False), gamma, 200_000)
    assert abs(float(np.mean(draws))) < 0.05
    assert float(np.mean(np.abs(draws))) == pytest.approx(gamma, abs=0.05)
    # Pr[|X| > 2γ] = e^{-2}
    assert float(np.mean(np.abs(draws) > 2 * gamma)) == pytest.approx(math.exp(-2), abs=0.01)


def test_block_matches_sequential_draws():
    block = sample_laplace_block(RandomSource(5, zero_noise=False), 1.5, 50)
    src = RandomSource(5, zero_noise=False)
    single = np.array([sample_laplace(src, 1.5) for _ in range(50)])
    assert np.allclose(block, single)


@settings(max_examples=50)
@given(st.lists(st.floats(min_value=-50, max_value=50), min_size=1, max_size=30), st.floats(min_value=0.1, max_value=10))
def test_monitor_tracks_max_ratio(noises, scale):
    monitor = NoiseMonitor()
    for noise in noises:
        monitor.observe(noise, scale)
    expected = max(abs(n) for n in noises) / scale
    assert monitor.max_ratio == pytest.approx(expected)
    assert monitor.within(expected + 1e-9)
    assert monitor.draws == len(noises)


def test_inverse_cdf_quartile():
    assert laplace_inverse_cdf(0.75, 1.0) == pytest.approx(math.log(2))
    assert laplace_inverse_cdf(0.25, 1.0) == pytest.approx(-math.log(2))


@pytest.mark.parametrize("gamma", [0.5, 1.0, 4.0])
def test_sample_laplace_fits_distribution(gamma):
    src = RandomSource(2024, zero_noise=False)
    samples = [sample_laplace(src, gamma) for _ in range(5000)]
    result = stats.kstest(samples, "laplace", args=(0.0, gamma))
    assert result.pvalue > 1e-3


@pytest.mark.parametrize("gamma", [0.5, 1.0, 4.0])
def test_sample_laplace_block_fits_distribution(gamma):
    samples = sample_laplace_block(RandomSource(77, zero_noise=False), gamma, 5000)
    assert stats.kstest(samples, "laplace", args=(0.0, gamma)).pvalue > 1e-3


@pytest.mark.parametrize("sensitivity, epsilon", [(1.0, 1.0), (2.0, 0.5), (1.0, 4.0)])
def test_laplace_mechanism_error_quantile(sensitivity, epsilon):
    """95-й процентиль |ошибки| равен (Δ/ε)·ln 20."""
    src = RandomSource(5, zero_noise=False)
    errors = np.abs([laplace_mechanism(10.0, sensitivity, epsilon, src) - 10.0 for _ in range(20000)])
    expected = sensitivity / epsilon * math.log(20)
    assert np.quantile(errors, 0.95) == pytest.approx(expected, rel=0.06)
