"""
commands/ldim.py: точная размерность Литтлстоуна файла класса.
"""
import logging
import math
from typing import Any, Dict

from library.learners import ldim
from library.results import ResultWriter

from .common import finish, require_class

logger = logging.getLogger(__name__)


async def cmd_ldim(data: Dict[str, Any]) -> int:
    config = data["config"]
    hclass = require_class(config)
    value = ldim(hclass)
    summary = {
        "class_file": str(config.class_file),
        "n": hclass.n,
        "size": hclass.size,
        "ldim": value,
        "log2_size_floor": int(math.floor(math.log2(hclass.size))),
    }
    finish(data, ResultWriter(config), summary)
    print(f"ldim({config.class_file}) = {value}")
    return 0
