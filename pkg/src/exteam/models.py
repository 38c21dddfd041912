"""서비스 간 결과 데이터 모델 및 JSON/CSV 직렬화 유틸리티."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np

# ── 열거형 ──


class MixtureTag(str, Enum):
    """정책 혼합의 구조 태그."""

    GENERAL = "general"
    EX = "ex"  # exchangeable
    CO = "co"  # common randomness, independent given z
    CO_SYM = "co_sym"  # common randomness, identical factors given z
    PR = "pr"  # independent product
    PR_SYM = "pr_sym"  # i.i.d.
    DIRAC = "dirac"  # single deterministic profile


class OptMethod(str, Enum):
    BRUTE_FORCE = "brute_force"
    GRID = "grid"
    PROJECTED_GRADIENT = "projected_gradient"
    PRODUCT_GRID = "product_grid"
    CROSS_ENTROPY = "cross_entropy"
    EXCHANGEABLE = "exchangeable"


# ── 평가 결과 ──


@dataclass(frozen=True)
class CostEstimate:
    """기대 비용 추정치. exact=True면 std_error=0, samples=0."""

    value: float
    std_error: float = 0.0
    exact: bool = True
    samples: int = 0
    seed: int | None = None

    CSV_HEADER = ("value", "std_error", "exact", "samples", "seed")

    def to_csv_row(self) -> list[str]:
        return [
            format_float(self.value),
            format_float(self.std_error),
            "true" if self.exact else "false",
            str(self.samples),
            "" if self.seed is None else str(self.seed),
        ]

    def within(self, target: float, sigmas: float = 3.0) -> bool:
        """MC 추정치가 target의 sigmas·σ 이내인지 (정확값이면 1e-9)."""
        if self.exact or self.std_error == 0.0:
            return abs(self.value - target) <= 1e-9
        return abs(self.value - target) <= sigmas * self.std_error


@dataclass(frozen=True)
class EmpiricalMeasure:
    """(1/n) Σ δ_{u_i}: support 라벨과 가중치, 임베딩 평균."""

    support: tuple[str, ...]
    weights: tuple[float, ...]
    mean: float | None = None

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.support, self.weights))


# ── 최적화 결과 ──


@dataclass
class OptResult:
    best_value: float
    best_policy: Any  # policy_space.Mixture
    method: OptMethod
    evaluations: int = 0
    restarts: int = 0
    trace: list[float] = field(default_factory=list)  # CE: per-iteration elite mean


# ── 스케일링 결과 ──


@dataclass(frozen=True)
class GapRow:
    n: int
    j_sym: float
    j_det: float
    eps: float
    runtime_s: float = 0.0


@dataclass
class GapCurve:
    rows: list[GapRow]
    method: str = "grid"
    tail_window: int | None = None

    def to_csv(self, path: Path, timings: bool = False) -> Path:
        header = ["N", "J_sym", "J_det", "eps"] + (["runtime_s"] if timings else [])
        body = []
        for r in self.rows:
            row = [str(r.n), format_float(r.j_sym), format_float(r.j_det), format_float(r.eps)]
            if timings:
                row.append(f"{r.runtime_s:.6f}")
            body.append(row)
        return write_csv(path, header, body)

    @property
    def eps(self) -> list[float]:
        return [r.eps for r in self.rows]

    @property
    def tail_proxy(self) -> float | None:
        """max ε_N over the last tail_window rows."""
        if self.tail_window is None:
            return None
        return max(self.eps[-self.tail_window :])


@dataclass
class LimitEstimate:
    value: float
    n_list: list[int]
    values: list[float]
    tail_window: int
    monotone: bool

    def to_csv(self, path: Path) -> Path:
        tail = set(self.n_list[-self.tail_window :])
        body = [
            [str(n), format_float(v), "true" if n in tail else "false"]
            for n, v in zip(self.n_list, self.values)
        ]
        body.append(["limit", format_float(self.value), "true" if self.monotone else "false"])
        return write_csv(path, ["N", "J", "tail"], body)


@dataclass(frozen=True)
class DFAuditRow:
    instance: int
    n: int
    m: int
    tv: float
    bound: float

    @property
    def slack(self) -> float:
        return self.bound - self.tv

    @property
    def violation(self) -> bool:
        return self.tv > self.bound + 1e-12


@dataclass
class DFAuditReport:
    rows: list[DFAuditRow]

    @property
    def violations(self) -> int:
        return sum(r.violation for r in self.rows)

    @property
    def min_slack(self) -> float:
        return min((r.slack for r in self.rows), default=math.inf)

    @property
    def median_slack(self) -> float:
        if not self.rows:
            return math.inf
        return float(np.median([r.slack for r in self.rows]))

    def summary(self) -> dict[str, Any]:
        return {
            "rows": len(self.rows),
            "instances": len({r.instance for r in self.rows}),
            "violations": self.violations,
            "min_slack": self.min_slack,
            "median_slack": self.median_slack,
        }

    def to_csv(self, path: Path) -> Path:
        header = ["instance", "N", "m", "tv", "bound", "slack", "violation"]
        body = [
            [
                str(r.instance),
                str(r.n),
                str(r.m),
                format_float(r.tv),
                format_float(r.bound),
                format_float(r.slack),
                "true" if r.violation else "false",
            ]
            for r in self.rows
        ]
        return write_csv(path, header, body)


@dataclass(frozen=True)
class RestrictionRow:
    n: int
    j_restricted: float
    j_det: float

    @property
    def excess(self) -> float:
        return self.j_restricted - self.j_det


@dataclass
class RestrictionCurve:
    rows: list[RestrictionRow]

    def to_csv(self, path: Path) -> Path:
        body = [
            [str(r.n), format_float(r.j_restricted), format_float(r.j_det), format_float(r.excess)]
            for r in self.rows
        ]
        return write_csv(path, ["N", "J_restricted", "J_det", "excess"], body)


# ── 실행 매니페스트 ──


@dataclass
class RunManifest:
    """재현성 기록: 설정 해시, 시드, 산출물 해시, 타이밍."""

    command: str
    tool_version: str
    config_hash: str
    seed: int
    settings: dict[str, Any] = field(default_factory=dict)
    inputs: list[dict[str, str]] = field(default_factory=list)
    outputs: list[dict[str, str]] = field(default_factory=list)
    timings: dict[str, float] = field(default_factory=dict)
    started_at: str = ""
    finished_at: str = ""


# ── 직렬화 유틸리티 ──


def format_float(x: float) -> str:
    """고정 포맷 (최단 왕복 repr). 같은 값이면 같은 바이트."""
    return repr(float(x))


def _serialize(obj):
    """dataclass/enum/numpy JSON 직렬화 헬퍼."""
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, Path):
        return str(obj)
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"Object of type {type(obj)} is not JSON serializable")


def save_json(data, path: Path) -> Path:
    """dataclass, list[dataclass] 또는 dict를 JSON으로 저장 (키 정렬)."""
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, dict):
        payload = data
    elif isinstance(data, list):
        payload = [asdict(d) for d in data]
    else:
        payload = asdict(data)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, ensure_ascii=False, indent=2, sort_keys=True, default=_serialize)
        f.write("\n")
    return path


def load_json(path: Path) -> dict | list:
    """JSON 파일 로드."""
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def write_csv(path: Path, header: list[str] | tuple[str, ...], rows: list[list[str]]) -> Path:
    """헤더 + 행을 '\\n' 줄바꿈으로 기록."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    return path
