"""
Загрузка и запись файлов классов гипотез.

Формат: заголовок `n=<int> h=<int>`, затем h строк из n символов {0,1};
после строки через пробел допускается имя гипотезы, строки с '#' — комментарии.
"""
import logging
import re
from pathlib import Path
from typing import List, Optional, Union

from config.settings import settings
from .errors import ClassFileError, ParameterError
from .learners import FiniteHypothesisClass

logger = logging.getLogger(__name__)

_HEADER = re.compile(r"^\s*n\s*=\s*(\d+)\s+h\s*=\s*(\d+)\s*$")


def resolve_class_path(name: Union[str, Path]) -> Path:
    """
    Путь к файлу класса.

    Поддерживается 2 варианта (по приоритету):
    1. Путь как есть (абсолютный или относительно текущей папки)
    2. Имя в папке классов: classes/{name} или classes/{name}.txt
    """
    path = Path(name)
    if path.exists():
        return path
    for candidate in (settings.classes_dir / path, settings.classes_dir / f"{path}.txt"):
        if candidate.exists():
            logger.info(f"📂 Используется файл из папки классов: {candidate.name}")
            return candidate
    raise ClassFileError(f"файл класса не найден: {name}")


def parse_class_text(text: str, source: str = "<text>") -> FiniteHypothesisClass:
    """Разбор содержимого файла класса."""
    lines = [
        line.strip() for line in text.splitlines()
        if line.strip() and not line.strip().startswith("#")
    ]
    if not lines:
        raise ClassFileError(f"{source}: пустой файл класса")

    header = _HEADER.match(lines[0])
    if header is None:
        raise ClassFileError(f"{source}: ожидается заголовок 'n=<int> h=<int>', получено {lines[0]!r}")
    n, h = int(header.group(1)), int(header.group(2))
    if n < 1 or h < 1:
        raise ClassFileError(f"{source}: требуется n ≥ 1 и h ≥ 1, получено n={n}, h={h}")

    body = lines[1:]
    if len(body) != h:
        raise ClassFileError(f"{source}: заявлено h={h} строк, найдено {len(body)}")

    rows: List[str] = []
    names: List[str] = []
    for idx, line in enumerate(body, start=1):
        parts = line.split(maxsplit=1)
        bits = parts[0]
        if len(bits) != n or set(bits) - {"0", "1"}:
            raise ClassFileError(f"{source}: строка {idx} должна состоять из {n} символов 0/1: {bits!r}")
        rows.append(bits)
        names.append(parts[1] if len(parts) > 1 else f"h{idx - 1}")

    try:
        return FiniteHypothesisClass(rows, names=names)
    except ParameterError as e:
        raise ClassFileError(f"{source}: {e}") from e


def load_class(name: Union[str, Path]) -> FiniteHypothesisClass:
    """Загружает класс гипотез из файла."""
    path = resolve_class_path(name)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        logger.error(f"❌ Ошибка чтения файла класса {path}: {e}")
        raise ClassFileError(f"не удалось прочитать {path}: {e}") from e

    hclass = parse_class_text(text, source=path.name)
    logger.info(f"✅ Загружен класс {path.name}: n={hclass.n}, |H|={hclass.size}")
    return hclass


def dump_class(hclass: FiniteHypothesisClass, path: Optional[Path] = None) -> str:
    """Текст файла класса; если указан path — ещё и записывает его."""
    lines = [f"n={hclass.n} h={hclass.size}"]
    for idx in range(hclass.size):
        row = hclass.row_string(idx)
        lines.append(f"{row} {hclass.names[idx]}" if hclass.names else row)
    text = "\n".join(lines) + "\n"
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        logger.info(f"📂 Класс записан в {path}")
    return text
