import json
from pathlib import Path

import numpy as np
import pytest
from scipy import stats

from exteam.config import AppConfig
from exteam.services.policy_space import RelaxedKernel
from exteam.services.team_model import (
    AdditiveNoiseObservation,
    DynamicTeam,
    FiniteSpace,
    StaticTeam,
    example_one_team,
)


@pytest.fixture(autouse=True)
def _use_test_env(monkeypatch):
    """모든 테스트에서 .env 대신 .env.test를 사용하도록 강제."""
    monkeypatch.setattr(
        AppConfig, "model_config", {**AppConfig.model_config, "env_file": ".env.test"}
    )
    monkeypatch.delenv("EXTEAM_THREADS", raising=False)


@pytest.fixture
def test_config(tmp_path: Path) -> AppConfig:
    """테스트용 AppConfig. 출력은 tmp_path 아래로."""
    return AppConfig(output_dir=tmp_path / "runs")


@pytest.fixture
def example_one() -> StaticTeam:
    """N=2 기준 인스턴스."""
    return example_one_team(2)


@pytest.fixture
def bernoulli_half() -> RelaxedKernel:
    """관측 하나, 행동 {0,1} 위 ½/½ 커널."""
    return RelaxedKernel(np.array([[[0.5, 0.5]]]))


@pytest.fixture
def const0() -> RelaxedKernel:
    return RelaxedKernel.constant(0, 1, 2)


@pytest.fixture
def const1() -> RelaxedKernel:
    return RelaxedKernel.constant(1, 1, 2)


EXAMPLE_ONE_DOC = {
    "omega0": {"labels": ["w0"], "prior": [1.0]},
    "obs": {"labels": ["none"]},
    "actions": {"labels": ["0", "1"], "values": [0, 1]},
    "obs_kernel": [[1.0]],
    "cost": {"kind": "mean_field_quadratic", "params": {"target": 0.5, "scale": 1.0}},
    "N": 2,
}


@pytest.fixture
def example_one_doc() -> dict:
    return json.loads(json.dumps(EXAMPLE_ONE_DOC))


@pytest.fixture
def write_json(tmp_path: Path):
    """dict를 tmp_path 아래 JSON 파일로 쓰는 헬퍼."""

    def _write(name: str, data) -> Path:
        path = tmp_path / name
        path.write_text(json.dumps(data), encoding="utf-8")
        return path

    return _write


@pytest.fixture
def gaussian_lattice_team():
    """y = κ(x) + v, v ~ 격자 위 가우시안인 무작위 2-상태 동적 팀과 그 관측 모델.

    zero_shift=True gives κ ≡ 0 on a lattice equal to the noise lattice, so
    every likelihood ratio is exactly 1.
    """

    def _build(
        rng: np.random.Generator,
        *,
        num_dms: int = 2,
        horizon: int = 2,
        zero_shift: bool = False,
    ) -> tuple[DynamicTeam, AdditiveNoiseObservation]:
        shifts = {"0": 0, "1": 0 if zero_shift else int(rng.integers(1, 3))}
        model = AdditiveNoiseObservation(
            kappa=lambda x: 0.5 * shifts[x],
            step=0.5,
            noise_half_width=int(rng.integers(1, 3)),
            shift_range=(0, 0) if zero_shift else (0, 2),
            density=stats.norm(0.0, float(rng.uniform(0.7, 1.5))).pdf,
        )
        binary = FiniteSpace.numeric((0, 1))
        next_state = rng.integers(0, 2, size=(2, 2))
        target = float(rng.uniform(0.0, 1.0))
        penalty = float(rng.uniform(0.0, 1.0))

        def dynamics(x: str, u: str, xbar: float, ubar: float, w: str) -> str:
            return binary.labels[next_state[int(x), int(u)]]

        def cost(omega: str, x: float, u: float, ubar: float, xbar: float) -> float:
            return (ubar - target) ** 2 + penalty * (x - u) ** 2

        team = DynamicTeam(
            horizon=horizon,
            omega0=FiniteSpace(("w0",)),
            prior=np.array([1.0]),
            states=binary,
            actions=binary,
            init_kernel=rng.dirichlet([1.0, 1.0])[None, :],
            dyn_noise=FiniteSpace(("w",)),
            dyn_noise_probs=np.array([1.0]),
            dynamics=(dynamics,) * horizon,
            stage_cost=cost,
            num_dms=num_dms,
            **model.observation_fields(horizon),
        )
        return team, model

    return _build
