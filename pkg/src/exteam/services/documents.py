"""문제/정책 JSON 문서: pydantic 검증, 팀·혼합 객체 생성, 직렬화."""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from exteam.exceptions import ConfigError, PolicyError
from exteam.models import MixtureTag
from exteam.services.policy_space import (
    DeterministicPolicy,
    Mixture,
    PolicyProfile,
    RelaxedKernel,
    check_tag,
)
from exteam.services.team_model import (
    DynamicTeam,
    FiniteSpace,
    MeanFieldCost,
    StaticTeam,
    TableCost,
    mean_field_quadratic,
)

logger = logging.getLogger(__name__)

Team = StaticTeam | DynamicTeam


# ── 문서 모델 ──


class SpaceDoc(BaseModel):
    model_config = ConfigDict(extra="forbid")

    labels: list[str] = Field(min_length=1)
    values: list[float] | None = None
    prior: list[float] | None = None
    probs: list[float] | None = None

    @field_validator("labels", mode="before")
    @classmethod
    def _labels_as_str(cls, v: Any) -> Any:
        if isinstance(v, list):
            return [str(x) for x in v]
        return v

    def space(self) -> FiniteSpace:
        return FiniteSpace(tuple(self.labels), None if self.values is None else tuple(self.values))


class CostDoc(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["mean_field_quadratic", "table", "constant"]
    params: dict[str, Any] = Field(default_factory=dict)


class ProblemDocument(BaseModel):
    """정적 문제 + (horizon이 있으면) 동적 확장 필드."""

    model_config = ConfigDict(extra="forbid")

    omega0: SpaceDoc
    obs: SpaceDoc
    actions: SpaceDoc
    cost: CostDoc
    N: int = Field(ge=1)
    obs_kernel: list[list[float]] | None = None
    horizon: int | None = Field(default=None, ge=1)
    states: SpaceDoc | None = None
    init_kernel: list[list[float]] | None = None
    dyn_noise: SpaceDoc | None = None
    obs_noise: SpaceDoc | None = None
    dynamics_table: list[list[list[list[str]]]] | None = None  # [t][x][u][w] -> state
    obs_table: list[list[list[str]]] | None = None  # [t][x][v] -> observation

    @model_validator(mode="after")
    def _check_variant(self) -> ProblemDocument:
        if self.omega0.prior is None:
            raise ValueError("omega0.prior is required")
        if self.horizon is None:
            if self.obs_kernel is None:
                raise ValueError("obs_kernel is required for static problems")
            return self
        required = ("states", "init_kernel", "dyn_noise", "obs_noise", "dynamics_table",
                    "obs_table")
        missing = [name for name in required if getattr(self, name) is None]
        if missing:
            raise ValueError(f"dynamic problems need {', '.join(missing)}")
        for name in ("dyn_noise", "obs_noise"):
            if getattr(self, name).probs is None:
                raise ValueError(f"{name}.probs is required")
        return self

    @property
    def is_dynamic(self) -> bool:
        return self.horizon is not None


class KernelDoc(BaseModel):
    """rows: [T][Y][U] / [Y][U] 숫자 배열 또는 {y: {u: p}}; map: 관측 → 행동 라벨."""

    model_config = ConfigDict(extra="forbid")

    rows: list[Any] | dict[str, dict[str, float]] | None = None
    map: list[dict[str, str]] | dict[str, str] | None = None

    @model_validator(mode="after")
    def _one_form(self) -> KernelDoc:
        if (self.rows is None) == (self.map is None):
            raise ValueError("a kernel needs exactly one of 'rows' or 'map'")
        return self


class AtomDoc(BaseModel):
    model_config = ConfigDict(extra="forbid")

    weight: float = Field(ge=0)
    profile: list[KernelDoc] = Field(min_length=1)


class MixtureDocument(BaseModel):
    """atoms (명시적 지지) 또는 iid (N개 동일 커널 레시피)."""

    model_config = ConfigDict(extra="forbid")

    tag: MixtureTag = MixtureTag.GENERAL
    atoms: list[AtomDoc] | None = None
    iid: KernelDoc | None = None

    @model_validator(mode="after")
    def _one_form(self) -> MixtureDocument:
        if (self.atoms is None) == (self.iid is None):
            raise ValueError("a policy document needs exactly one of 'atoms' or 'iid'")
        return self


# ── 로딩 ──


def read_document(path: Path) -> dict:
    """JSON 로드. 파싱 오류는 줄/열을 담은 ConfigError."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(
            f"{path}: invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}"
        ) from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return data


def _validate(model: type[BaseModel], data: dict, source: str) -> Any:
    try:
        return model.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        where = ".".join(str(p) for p in first["loc"]) or "<document>"
        raise ConfigError(f"{source}: field '{where}': {first['msg']}") from None


def parse_problem(data: dict, source: str = "problem") -> ProblemDocument:
    return _validate(ProblemDocument, data, source)


def load_problem(path: Path) -> Team:
    doc = parse_problem(read_document(path), str(path))
    team = team_from_document(doc)
    logger.info("Loaded %s problem from %s (N=%d)",
                "dynamic" if doc.is_dynamic else "static", path, doc.N)
    return team


def parse_mixture(data: dict, source: str = "policy") -> MixtureDocument:
    return _validate(MixtureDocument, data, source)


def load_mixture(path: Path, team: Team) -> Mixture:
    return mixture_from_document(parse_mixture(read_document(path), str(path)), team)


# ── 문서 → 팀 ──


def _omega_targets(params: dict, omega: FiniteSpace, key: str, default: Any) -> Any:
    target = params.get(key, default)
    if isinstance(target, list) and len(target) != omega.size:
        raise ConfigError(f"cost.params.{key} needs one entry per omega0 label")
    return target


def _static_cost(doc: ProblemDocument, omega: FiniteSpace) -> MeanFieldCost | TableCost:
    params = doc.cost.params
    if doc.cost.kind == "mean_field_quadratic":
        return MeanFieldCost(
            mean_field_quadratic(
                _omega_targets(params, omega, "target", 0.5),
                float(params.get("scale", 1.0)),
                float(params.get("action_penalty", 0.0)),
                omega.labels,
            )
        )
    if doc.cost.kind == "constant":
        value = float(params.get("value", 0.0))
        return MeanFieldCost(lambda omega, u, ubar: value)
    if "table" not in params:
        raise ConfigError("cost.params.table is required for table costs")
    expected = (omega.size,) + (len(doc.actions.labels),) * doc.N
    _check_shape(params["table"], expected, "cost.params.table")
    return TableCost(np.asarray(params["table"], dtype=float))


def _dynamic_cost(doc: ProblemDocument, omega: FiniteSpace, states: FiniteSpace,
                  actions: FiniteSpace):
    params = doc.cost.params
    if doc.cost.kind == "constant":
        value = float(params.get("value", 0.0))
        return lambda omega, x, u, ubar, xbar: value
    if doc.cost.kind == "mean_field_quadratic":
        target = _omega_targets(params, omega, "target", 0.5)
        targets = dict(zip(omega.labels, target if isinstance(target, list)
                           else [target] * omega.size))
        scale = float(params.get("scale", 1.0))
        action_penalty = float(params.get("action_penalty", 0.0))
        state_penalty = float(params.get("state_penalty", 0.0))
        state_target = params.get("state_target")

        def quadratic(w: str, x: float, u: float, ubar: float, xbar: float) -> float:
            tgt = float(targets[w])
            x_tgt = tgt if state_target is None else float(state_target)
            return (scale * (ubar - tgt) ** 2 + action_penalty * (u - tgt) ** 2
                    + state_penalty * (x - x_tgt) ** 2)

        return quadratic

    # table [ω][x][u]; mean-field terms do not enter
    expected = (omega.size, states.size, actions.size)
    _check_shape(params.get("table"), expected, "cost.params.table")
    table = np.asarray(params["table"], dtype=float)
    x_index = _value_index(states, "states")
    u_index = _value_index(actions, "actions")
    w_index = {label: i for i, label in enumerate(omega.labels)}

    def tabulated(w: str, x: float, u: float, ubar: float, xbar: float) -> float:
        return float(table[w_index[w], x_index[x], u_index[u]])

    return tabulated


def _value_index(space: FiniteSpace, what: str) -> dict[float, int]:
    index = {v: i for i, v in enumerate(space.values or ())}
    if len(index) != space.size:
        raise ConfigError(f"{what}.values must be distinct for table costs")
    return index


def _check_shape(table: Any, expected: tuple[int, ...], field_name: str) -> None:
    try:
        shape = np.shape(table)
    except ValueError:
        raise ConfigError(f"{field_name} is ragged; expected shape {expected}") from None
    if shape != expected:
        raise ConfigError(f"{field_name} has shape {shape}, expected {expected}")


def _check_labels(table: list, allowed: FiniteSpace, field_name: str) -> None:
    flat: list = table
    while flat and isinstance(flat[0], list):
        flat = [x for sub in flat for x in sub]
    bad = sorted({x for x in flat if x not in allowed.labels})
    if bad:
        raise ConfigError(f"{field_name} uses unknown labels {bad}")


def team_from_document(doc: ProblemDocument) -> Team:
    omega = doc.omega0.space()
    obs = doc.obs.space()
    actions = doc.actions.space()
    if not doc.is_dynamic:
        return StaticTeam(
            omega0=omega,
            prior=np.asarray(doc.omega0.prior),
            obs=obs,
            actions=actions,
            obs_kernel=np.asarray(doc.obs_kernel),
            cost=_static_cost(doc, omega),
            num_dms=doc.N,
        )

    horizon = doc.horizon
    states = doc.states.space()  # type: ignore[union-attr]
    dyn_noise = doc.dyn_noise.space()  # type: ignore[union-attr]
    obs_noise = doc.obs_noise.space()  # type: ignore[union-attr]
    dyn_table, obs_table = doc.dynamics_table, doc.obs_table
    expected_dyn = (horizon, states.size, actions.size, dyn_noise.size)
    expected_obs = (horizon, states.size, obs_noise.size)
    _check_shape(dyn_table, expected_dyn, "dynamics_table")
    _check_shape(obs_table, expected_obs, "obs_table")
    _check_labels(dyn_table, states, "dynamics_table")  # type: ignore[arg-type]
    _check_labels(obs_table, obs, "obs_table")  # type: ignore[arg-type]

    def make_dynamics(t: int):
        def f(x: str, u: str, xbar: float, ubar: float, w: str) -> str:
            return dyn_table[t][states.index_of(x)][actions.index_of(u)][dyn_noise.index_of(w)]

        return f

    def make_obs(t: int):
        def h(x_hist: tuple[str, ...], u_hist: tuple[str, ...], v: str) -> str:
            return obs_table[t][states.index_of(x_hist[-1])][obs_noise.index_of(v)]

        return h

    return DynamicTeam(
        horizon=horizon,  # type: ignore[arg-type]
        omega0=omega,
        prior=np.asarray(doc.omega0.prior),
        states=states,
        obs=obs,
        actions=actions,
        init_kernel=np.asarray(doc.init_kernel),
        dyn_noise=dyn_noise,
        dyn_noise_probs=np.asarray(doc.dyn_noise.probs),  # type: ignore[union-attr]
        obs_noise=obs_noise,
        obs_noise_probs=np.asarray(doc.obs_noise.probs),  # type: ignore[union-attr]
        dynamics=tuple(make_dynamics(t) for t in range(horizon)),  # type: ignore[arg-type]
        obs_maps=tuple(make_obs(t) for t in range(horizon)),  # type: ignore[arg-type]
        stage_cost=_dynamic_cost(doc, omega, states, actions),
        num_dms=doc.N,
    )


# ── 문서 ↔ 혼합 ──


def _horizon(team: Team) -> int:
    return team.horizon if isinstance(team, DynamicTeam) else 1


def kernel_from_document(doc: KernelDoc, team: Team) -> RelaxedKernel:
    horizon = _horizon(team)
    if doc.map is not None:
        stages = doc.map if isinstance(doc.map, list) else [doc.map]
        if len(stages) != horizon:
            raise PolicyError(f"map has {len(stages)} stages, team horizon is {horizon}")
        table = []
        for stage in stages:
            missing = [y for y in team.obs.labels if y not in stage]
            if missing:
                raise PolicyError(f"map is not total: no action for observations {missing}")
            table.append(tuple(team.actions.index_of(stage[y]) for y in team.obs.labels))
        return DeterministicPolicy(tuple(table)).to_kernel(team.actions.size)

    rows = doc.rows
    if isinstance(rows, dict):
        rows = [rows]
    if rows and isinstance(rows[0], dict):
        arr = np.array(
            [
                [[float(stage.get(y, {}).get(u, 0.0)) for u in team.actions.labels]
                 for y in team.obs.labels]
                for stage in rows
            ]
        )
    else:
        try:
            arr = np.asarray(rows, dtype=float)
        except (TypeError, ValueError):
            raise PolicyError("kernel rows must be a numeric array") from None
    return RelaxedKernel(arr)


def mixture_from_document(doc: MixtureDocument, team: Team) -> Mixture:
    if doc.iid is not None:
        return Mixture.iid(kernel_from_document(doc.iid, team), team.num_dms)
    atoms = tuple(
        (a.weight, PolicyProfile(tuple(kernel_from_document(k, team) for k in a.profile)))
        for a in doc.atoms  # type: ignore[union-attr]
    )
    if doc.tag in (MixtureTag.CO, MixtureTag.CO_SYM):
        raise PolicyError("common-randomness layouts are built in code, not from documents")
    mixture = Mixture(atoms, doc.tag)
    if not check_tag(mixture):
        raise PolicyError(f"policy tag '{doc.tag.value}' does not hold for its atoms")
    return mixture


def kernel_to_document(kernel: RelaxedKernel, team: Team) -> dict:
    if kernel.is_deterministic:
        maps = kernel.to_deterministic().to_labels(team.obs.labels, team.actions.labels)
        return {"map": maps}
    return {"rows": kernel.rows.tolist()}


def mixture_to_document(P: Mixture, team: Team) -> dict:
    return {
        "tag": P.tag.value,
        "atoms": [
            {"weight": w, "profile": [kernel_to_document(k, team) for k in p]}
            for w, p in P.atoms
        ],
    }
