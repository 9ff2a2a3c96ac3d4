"""
Пакет конфигурации.
Автоматический импорт настроек.
"""
from .settings import (
    settings,
    Settings,
    setup_logging,
    ensure_directories_exist,
    validate_environment,
)

__all__ = [
    "settings",
    "Settings",
    "setup_logging",
    "ensure_directories_exist",
    "validate_environment",
]
