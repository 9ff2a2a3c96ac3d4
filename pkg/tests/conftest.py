"""
Общие фикстуры тестов: изолированные папки результатов и реестра, источники случайности.
"""
import pytest

from config.settings import settings
from library.learners import full_class, point_class, threshold_class
from library.models import PrivacyBudget
from library.noise import RandomSource
from library.stats import stats_manager


@pytest.fixture
def src():
    return RandomSource(12345, zero_noise=False)


@pytest.fixture
def quiet_src():
    """Источник с нулевым шумом: розыгрыши делаются, но шум равен нулю."""
    return RandomSource(12345, zero_noise=True)


@pytest.fixture
def thresholds16():
    return threshold_class(16)


@pytest.fixture
def full4():
    return full_class(4)


@pytest.fixture
def points5():
    return point_class(5)


@pytest.fixture
def budget():
    return PrivacyBudget(epsilon=1.0, delta=1e-5, beta=0.05, horizon=512)


@pytest.fixture
def workspace(tmp_path, monkeypatch):
    """Папки данных, результатов, логов и реестр запусков во временной директории."""
    monkeypatch.setattr(settings, "data_dir", tmp_path / "data")
    monkeypatch.setattr(settings, "results_dir", tmp_path / "data" / "results")
    monkeypatch.setattr(settings, "logs_dir", tmp_path / "logs")
    monkeypatch.setattr(settings, "db_path", tmp_path / "data" / "runs.db")
    monkeypatch.setattr(settings, "use_file_logging", False)
    monkeypatch.setattr(settings, "workers", 1)
    monkeypatch.setattr(settings, "noise_disabled", False)
    monkeypatch.setattr(stats_manager, "db_path", tmp_path / "data" / "runs.db")
    return tmp_path
