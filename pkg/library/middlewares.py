"""
Middleware для обработчиков команд CLI: перехват ошибок и коды выхода.
"""
import logging
from typing import Any, Awaitable, Callable, Dict

from pydantic import ValidationError

from .errors import ChallengeDPError, ConfigError, exit_code_for

logger = logging.getLogger(__name__)

Handler = Callable[[Dict[str, Any]], Awaitable[int]]


class ErrorHandlerMiddleware:
    """
    Оборачивает обработчик команды.
    Логирует ошибку и превращает её в код выхода: 2 конфигурация, 3 контракт,
    4 нарушение границы, 1 прочее.
    """

    async def __call__(self, handler: Handler, data: Dict[str, Any]) -> int:
        """Вызов обработчика с перехватом ошибок."""
        command = data.get("command", "?")
        try:
            return await handler(data)

        except ValidationError as e:
            error = ConfigError(f"некорректная конфигурация: {e}")
            logger.error(f"❌ {command}: {error}")
            data["error"] = error
            return error.exit_code

        except ChallengeDPError as e:
            code = exit_code_for(e)
            logger.error(f"❌ {command}: {type(e).__name__}: {e}", exc_info=code == 1)
            data["error"] = e
            return code

        except Exception as e:
            logger.error(f"❌ Непредвиденная ошибка в команде {command}: {e}", exc_info=True)
            data["error"] = e
            return 1
