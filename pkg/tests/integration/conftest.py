"""Acceptance sweep fixtures. 느린 테스트만 모여 있음: pytest -m slow tests/integration"""

import pytest

from exteam.config import AppConfig


@pytest.fixture
def sweep_config(tmp_path) -> AppConfig:
    """기본 예산을 쓰되 산출물은 tmp로."""
    return AppConfig(output_dir=tmp_path / "runs", threads=2)
