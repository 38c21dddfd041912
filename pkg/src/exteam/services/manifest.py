"""실행 매니페스트: 설정 해시, 입력/출력 해시, 타이밍 기록."""

from __future__ import annotations

import hashlib
import json
import logging
import time
from contextlib import contextmanager
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

from exteam import __version__
from exteam.config import AppConfig
from exteam.models import RunManifest, save_json

logger = logging.getLogger(__name__)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def config_hash(settings: dict[str, Any]) -> str:
    """정렬된 JSON의 sha256. 같은 설정이면 같은 해시."""
    canonical = json.dumps(settings, sort_keys=True, default=str, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def file_hash(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


class ManifestRecorder:
    """한 CLI 실행 동안 입력/출력/타이밍을 모아 manifest.json으로 쓴다."""

    def __init__(self, command: str, config: AppConfig, options: dict[str, Any] | None = None):
        settings = {**config.model_dump(mode="json"), **(options or {})}
        self.manifest = RunManifest(
            command=command,
            tool_version=__version__,
            config_hash=config_hash(settings),
            seed=config.seed,
            settings=settings,
            started_at=_now(),
        )
        self._config = config

    def add_input(self, path: Path) -> None:
        self.manifest.inputs.append({"path": str(path), "sha256": file_hash(path)})

    def add_output(self, path: Path) -> None:
        self.manifest.outputs.append({"path": str(path), "sha256": file_hash(path)})

    @contextmanager
    def timed(self, name: str):
        start = time.perf_counter()
        try:
            yield
        finally:
            self.manifest.timings[name] = time.perf_counter() - start

    def write(self, path: Path | None = None) -> Path:
        self.manifest.finished_at = _now()
        target = path or self._config.manifest_path
        save_json(self.manifest, target)
        logger.info("Wrote manifest %s (config %s)", target, self.manifest.config_hash[:12])
        return target
