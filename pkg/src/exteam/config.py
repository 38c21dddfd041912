from fractions import Fraction
from pathlib import Path

from pydantic import Field, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class AppConfig(BaseSettings):
    """실험실 전체 설정. .env 파일 또는 EXTEAM_* 환경변수에서 로드."""

    model_config = SettingsConfigDict(
        env_prefix="EXTEAM_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    # 출력 경로
    output_dir: Path = Path("runs")

    # 병렬 실행
    # Chunk size is fixed independently of the thread count so that
    # reductions happen in the same order for any --threads value.
    threads: int = Field(1, ge=1)
    chunk_size: int = Field(4096, ge=1)

    # 열거 예산 (Enumeration budgets)
    enumeration_budget: int = Field(10**8, ge=1)
    profile_budget: int = Field(10**7, ge=1)
    df_budget: int = Field(10**6, ge=1)
    symmetrize_max_n: int = Field(8, ge=1)

    # 정책 격자 (1/k 꼴만 허용)
    kernel_grid_pitch: float = 1 / 64
    definetti_grid_pitch: float = 1 / 16

    # Projected gradient
    fd_step: float = Field(1e-5, gt=0)
    gradient_tol: float = Field(1e-8, gt=0)
    gradient_max_iter: int = Field(500, ge=1)
    restarts: int = Field(8, ge=1)

    # Cross-entropy
    ce_population: int = Field(40, ge=2)
    ce_elites: int = Field(8, ge=1)
    ce_iterations: int = Field(30, ge=1)
    ce_smoothing: float = Field(0.7, gt=0, le=1)
    ce_init_std: float = Field(2.0, gt=0)
    ce_samples: int = Field(20_000, ge=1)

    # Monte Carlo
    samples: int = Field(100_000, ge=1)

    # Static reduction
    weight_guard: float = Field(1e6, gt=0)

    seed: int = 0

    @field_validator("kernel_grid_pitch", "definetti_grid_pitch")
    @classmethod
    def _reciprocal_pitch(cls, v: float) -> float:
        frac = Fraction(v).limit_denominator(10**6)
        if not 0 < v <= 1 or frac.numerator != 1:
            raise ValueError(f"pitch must be 1/k for a positive integer k, got {v}")
        return v

    @model_validator(mode="after")
    def _elites_fit_population(self) -> "AppConfig":
        if self.ce_population < 2 * self.ce_elites:
            raise ValueError(
                f"ce_population ({self.ce_population}) must be at least 2·ce_elites "
                f"({self.ce_elites})"
            )
        return self

    # ── 파생 경로 ──

    @property
    def gap_curve_path(self) -> Path:
        return self.output_dir / "gap_curve.csv"

    @property
    def gap_curve_json_path(self) -> Path:
        return self.output_dir / "gap_curve.json"

    @property
    def limit_path(self) -> Path:
        return self.output_dir / "limit.csv"

    @property
    def df_audit_path(self) -> Path:
        return self.output_dir / "df_audit.csv"

    @property
    def restriction_path(self) -> Path:
        return self.output_dir / "restriction.csv"

    @property
    def estimate_path(self) -> Path:
        return self.output_dir / "estimate.csv"

    @property
    def opt_result_path(self) -> Path:
        return self.output_dir / "opt_result.json"

    @property
    def manifest_path(self) -> Path:
        return self.output_dir / "manifest.json"

    @property
    def log_dir(self) -> Path:
        return self.output_dir / ".log"
