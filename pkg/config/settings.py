"""
Конфигурация лаборатории: пути, сиды, константы механизмов, логирование.
Pydantic v2 + pydantic-settings: переменные окружения CDP_* и файл .env.
"""
import os
import sys
import logging
from pathlib import Path
from typing import Optional

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Настройки экспериментов и библиотеки."""

    # === РЕЖИМ РАБОТЫ ===
    environment: str = Field(default="production")

    # === ПУТИ К ФАЙЛАМ И ПАПКАМ ===
    base_dir: Path = Path(__file__).parent.parent
    classes_dir: Path = base_dir / "classes"
    data_dir: Path = base_dir / "data"
    results_dir: Path = base_dir / "data" / "results"
    logs_dir: Path = base_dir / "logs"
    db_path: Path = base_dir / "data" / "runs.db"

    # === ВОСПРОИЗВОДИМОСТЬ ===
    master_seed: int = 20240601
    trials: int = 100
    workers: int = 0  # 0 = все доступные ядра
    # Ожидаемая длительность команды в секундах; при превышении сторож пишет предупреждение
    run_budget_seconds: Optional[float] = None

    # Глобальный выключатель шума: все лапласовские розыгрыши становятся нулями
    noise_disabled: bool = False

    # === КОНСТАНТЫ O(·) ИЗ ТЕОРЕМ (записываются в каждый файл результатов) ===
    c_gamma: float = 1.0
    c_lambda: float = 1.0
    c_k: float = 1.0
    c_r: float = 1.0
    c_priv: float = 4.0
    c_k_agnostic: float = 1.0
    c_u: float = 1.0

    # === ПАРАМЕТРЫ ЛОГИРОВАНИЯ ===
    log_level: str = "INFO"
    use_file_logging: bool = True

    model_config = SettingsConfigDict(
        env_prefix="CDP_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    @field_validator("environment", mode="before")
    @classmethod
    def validate_environment(cls, v):
        """Окружение в нижнем регистре, по умолчанию production."""
        value = (v or "production").strip().lower()
        if value not in {"production", "development", "test"}:
            raise ValueError(f"неизвестное окружение: {value}")
        return value

    @field_validator("log_level", mode="before")
    @classmethod
    def validate_log_level(cls, v):
        """Уровень логирования должен существовать в logging."""
        level = str(v or "INFO").upper()
        if not isinstance(getattr(logging, level, None), int):
            raise ValueError(f"неизвестный уровень логирования: {level}")
        return level

    @field_validator("master_seed")
    @classmethod
    def validate_seed(cls, v):
        """Сид — 64-битное беззнаковое целое."""
        if v < 0 or v >= 2**64:
            raise ValueError("master_seed должен лежать в [0, 2^64)")
        return v

    @field_validator("trials", "workers")
    @classmethod
    def validate_counts(cls, v):
        if v < 0:
            raise ValueError("количество не может быть отрицательным")
        return v

    @field_validator("c_gamma", "c_lambda", "c_k", "c_r", "c_priv", "c_k_agnostic", "c_u")
    @classmethod
    def validate_constants(cls, v):
        """Все константы строго положительны."""
        if v <= 0:
            raise ValueError("константы механизмов должны быть положительными")
        return v

    def resolved_workers(self) -> int:
        """Число процессов с учётом значения 0 = все ядра."""
        return self.workers or (os.cpu_count() or 1)


# === ИНИЦИАЛИЗАЦИЯ ===
settings = Settings()
logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def setup_logging():
    """Консольное логирование плюс файл logs/challenge_dp.log (если разрешено)."""
    log_level = getattr(logging, settings.log_level.upper(), logging.INFO)

    logging.basicConfig(
        level=log_level,
        format=LOG_FORMAT,
        handlers=[logging.StreamHandler(sys.stdout)]
    )

    if settings.use_file_logging:
        try:
            settings.logs_dir.mkdir(parents=True, exist_ok=True)
            file_handler = logging.FileHandler(
                settings.logs_dir / "challenge_dp.log",
                encoding="utf-8"
            )
            file_handler.setFormatter(logging.Formatter(LOG_FORMAT))
            logging.getLogger().addHandler(file_handler)
            logger.debug("✅ Логирование в файл активировано")
        except (OSError, PermissionError) as e:
            logger.warning(
                f"⚠️ Не удалось создать логирование в файл ({e}). "
                "Используется только консольное логирование."
            )


def ensure_directories_exist():
    """Создание рабочих директорий с обработкой ошибок."""
    required_dirs = [
        (settings.data_dir, "data"),
        (settings.results_dir, "results"),
        (settings.logs_dir, "logs"),
    ]

    for dir_path, dir_name in required_dirs:
        try:
            dir_path.mkdir(parents=True, exist_ok=True)
            logger.debug(f"✅ Директория {dir_name}: {dir_path}")
        except PermissionError:
            logger.error(f"❌ ОШИБКА ПРАВ: Нет доступа к созданию {dir_name} ({dir_path})")
            if settings.environment == "production":
                raise
        except OSError as e:
            logger.error(f"❌ ОШИБКА ОС: Не удалось создать {dir_name} ({dir_path}): {e}")
            if settings.environment == "production":
                raise


def validate_environment():
    """Проверка конфигурации перед запуском команды."""
    logger.info(f"🧪 Запуск в режиме: {settings.environment.upper()}")

    if not settings.classes_dir.exists():
        logger.warning(f"⚠️ Папка классов гипотез не найдена: {settings.classes_dir}")

    if settings.noise_disabled:
        logger.warning("⚠️ Шум отключён глобально (CDP_NOISE_DISABLED): приватности нет")

    logger.debug("✅ Конфигурация валидна")
