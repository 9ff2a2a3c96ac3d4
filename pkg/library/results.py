"""
Файлы результатов: построчный JSON (header → записи → summary) и TSV по метрикам.

Ключи сортируются, числа пишутся через repr, поэтому повторный запуск с тем же
конфигом даёт байт-в-байт тот же файл, кроме поля timestamp заголовка.
"""
import json
import logging
from collections import defaultdict
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from config.settings import settings
from .models import ExperimentConfig

logger = logging.getLogger(__name__)


def _dumps(record: Dict[str, Any]) -> str:
    return json.dumps(record, sort_keys=True, ensure_ascii=False, default=str)


class ResultWriter:
    """Накопитель записей одной команды; пишет файлы в close()."""

    def __init__(self, config: ExperimentConfig, path: Optional[Path] = None):
        self.config = config
        self.path = Path(path or config.out or settings.results_dir / f"{config.command.value}.jsonl")
        self._records: List[Dict[str, Any]] = []
        self._metrics: Dict[str, List[Tuple[Any, Any]]] = defaultdict(list)

    def header(self) -> Dict[str, Any]:
        return {
            "type": "header",
            "config": self.config.header(),
            "constants": self.config.constants.model_dump(mode="json"),
            "timestamp": datetime.now().isoformat(timespec="seconds"),
        }

    def record(self, kind: str, **fields: Any) -> None:
        """Одна запись (round, trial, cell, event, …)."""
        self._records.append({"type": kind, **fields})

    def metric(self, name: str, x: Any, y: Any) -> None:
        """Точка графика для TSV-файла метрики."""
        self._metrics[name].append((x, y))

    def metric_path(self, name: str) -> Path:
        return self.path.with_name(f"{self.path.stem}.{name}.tsv")

    def close(self, summary: Dict[str, Any]) -> Path:
        """Записать JSONL и TSV; вернуть путь основного файла."""
        self.path.parent.mkdir(parents=True, exist_ok=True)
        lines = [_dumps(self.header())]
        lines.extend(_dumps(r) for r in self._records)
        lines.append(_dumps({"type": "summary", **summary}))
        self.path.write_text("\n".join(lines) + "\n", encoding="utf-8")

        for name, points in self._metrics.items():
            body = ["x\ty"] + [f"{x!r}\t{y!r}" for x, y in points]
            self.metric_path(name).write_text("\n".join(body) + "\n", encoding="utf-8")

        logger.info(f"📂 Результаты записаны: {self.path} ({len(self._records)} записей)")
        return self.path


def read_results(path: Path) -> List[Dict[str, Any]]:
    """Прочитать JSONL-файл результатов."""
    with path.open("r", encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]
