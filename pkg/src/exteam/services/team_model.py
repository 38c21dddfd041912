"""팀 문제 인스턴스(정적/동적), 구조 가정 검증, static reduction 데이터."""

from __future__ import annotations

import itertools
import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import stats

from exteam.exceptions import BudgetExceededError, ModelError

logger = logging.getLogger(__name__)

PROB_TOL = 1e-12
DENSITY_TOL = 1e-9
MAX_EXCHANGEABILITY_N = 6
COST_CHECK_STATES = 10**4

# (omega0, action value, mean action) -> cost
StageCost = Callable[[str, float, float], float]
# (omega0, state value, action value, mean action, mean state) -> cost
DynamicStageCost = Callable[[str, float, float, float, float], float]
# (state, action, mean state, mean action, noise) -> next state
Dynamics = Callable[[str, str, float, float, str], str]
# (state history, action history, current observation noise) -> observation
ObservationMap = Callable[[tuple[str, ...], tuple[str, ...], str], str]
# (t, observation, omega0, private state history, private action history) -> likelihood ratio
WeightFn = Callable[[int, str, str, tuple[str, ...], tuple[str, ...]], float]


def _probability_vector(p: Any, what: str) -> np.ndarray:
    arr = np.asarray(p, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ModelError(f"{what}: expected a nonempty probability vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise ModelError(f"{what}: entries must be finite and nonnegative")
    if abs(arr.sum() - 1.0) > PROB_TOL:
        raise ModelError(f"{what}: sums to {arr.sum():.15g}, expected 1")
    arr.setflags(write=False)
    return arr


def _stochastic_matrix(m: Any, rows: int, cols: int, what: str) -> np.ndarray:
    arr = np.asarray(m, dtype=float)
    if arr.shape != (rows, cols):
        raise ModelError(f"{what}: expected shape {(rows, cols)}, got {arr.shape}")
    for i in range(rows):
        _probability_vector(arr[i], f"{what} row {i}")
    arr.setflags(write=False)
    return arr


# ── 공간 ──


@dataclass(frozen=True)
class FiniteSpace:
    """유한 라벨 공간. 행동/상태 공간은 평균장 평균용 수치 임베딩을 가진다."""

    labels: tuple[str, ...]
    values: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        labels = tuple(str(label) for label in self.labels)
        if not labels:
            raise ModelError("FiniteSpace needs at least one label")
        if len(set(labels)) != len(labels):
            raise ModelError(f"FiniteSpace labels must be distinct: {labels}")
        object.__setattr__(self, "labels", labels)
        if self.values is not None:
            values = tuple(float(v) for v in self.values)
            if len(values) != len(labels):
                raise ModelError(
                    f"numeric embedding has {len(values)} values for {len(labels)} labels"
                )
            if not all(math.isfinite(v) for v in values):
                raise ModelError("numeric embedding values must be finite")
            object.__setattr__(self, "values", values)
        object.__setattr__(self, "_index", {label: i for i, label in enumerate(labels)})

    @classmethod
    def from_labels(cls, labels: Sequence[Any], values: Sequence[float] | None = None) -> FiniteSpace:
        return cls(tuple(str(x) for x in labels), None if values is None else tuple(values))

    @classmethod
    def numeric(cls, values: Sequence[float]) -> FiniteSpace:
        """values=(0, 1) → labels ('0', '1') with the same embedding."""
        return cls(tuple(f"{float(v):g}" for v in values), tuple(values))

    @property
    def size(self) -> int:
        return len(self.labels)

    def index_of(self, label: str) -> int:
        try:
            return self._index[str(label)]  # type: ignore[attr-defined]
        except KeyError:
            raise ModelError(f"'{label}' is not in space {self.labels}") from None

    def value_of(self, label: str) -> float:
        return self.values_array[self.index_of(label)]

    def resolve(self, item: Any) -> int:
        """라벨 또는 임베딩 값을 인덱스로 변환."""
        key = str(item)
        if key in self._index:  # type: ignore[attr-defined]
            return self._index[key]  # type: ignore[attr-defined]
        if self.values is not None and isinstance(item, (int, float)):
            for i, v in enumerate(self.values):
                if math.isclose(v, float(item), rel_tol=0.0, abs_tol=PROB_TOL):
                    return i
        raise ModelError(f"'{item}' is not in space {self.labels}")

    @property
    def values_array(self) -> np.ndarray:
        if self.values is None:
            raise ModelError(f"space {self.labels} has no numeric embedding")
        return np.asarray(self.values, dtype=float)


# ── 비용 ──


@dataclass(frozen=True)
class MeanFieldCost:
    """(1/N) Σ_i c(ω₀, u^i, ū) 형태의 평균장 비용."""

    stage_cost: StageCost

    def joint(self, omega: str, action_values: Sequence[float]) -> float:
        n = len(action_values)
        ubar = sum(action_values) / n
        return sum(self.stage_cost(omega, u, ubar) for u in action_values) / n

    def counts(self, omega: str, counts: Sequence[int], values: Sequence[float]) -> float:
        """행동 개수 벡터만으로 결정되는 비용 (평균장 비용은 교환가능)."""
        n = sum(counts)
        ubar = sum(c * v for c, v in zip(counts, values)) / n
        return sum(c * self.stage_cost(omega, v, ubar) for c, v in zip(counts, values) if c) / n


@dataclass(frozen=True, eq=False)
class TableCost:
    """밀집 결합 비용 표 c(ω₀, u¹, …, u^N), 라벨 순서로 인덱싱."""

    table: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.table, dtype=float)
        if arr.ndim < 2:
            raise ModelError("cost table needs an omega axis and at least one action axis")
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise ModelError("cost table entries must be finite and nonnegative")
        arr.setflags(write=False)
        object.__setattr__(self, "table", arr)

    @property
    def num_dms(self) -> int:
        return self.table.ndim - 1


CostModel = MeanFieldCost | TableCost


def mean_field_quadratic(
    target: float | Sequence[float] = 0.5,
    scale: float = 1.0,
    action_penalty: float = 0.0,
    omega_labels: Sequence[str] = ("w0",),
) -> StageCost:
    """c(ω₀,u,ū) = scale·(ū − target_ω)² + action_penalty·(u − target_ω)²."""
    if isinstance(target, (int, float)):
        targets = {label: float(target) for label in omega_labels}
    else:
        if len(target) != len(omega_labels):
            raise ModelError(f"target has {len(target)} entries for {len(omega_labels)} omegas")
        targets = {label: float(t) for label, t in zip(omega_labels, target)}

    def stage_cost(omega: str, u: float, ubar: float) -> float:
        tgt = targets[omega]
        return scale * (ubar - tgt) ** 2 + action_penalty * (u - tgt) ** 2

    return stage_cost


# ── 정적 팀 ──


@dataclass(frozen=True, eq=False)
class StaticTeam:
    """정적 N-DM 팀 (P_N). 관측은 공유 obs_kernel로 ω₀ 조건부 i.i.d."""

    omega0: FiniteSpace
    prior: np.ndarray
    obs: FiniteSpace
    actions: FiniteSpace
    obs_kernel: np.ndarray
    cost: CostModel
    num_dms: int

    def __post_init__(self) -> None:
        if self.num_dms < 1:
            raise ModelError(f"num_dms must be positive, got {self.num_dms}")
        prior = _probability_vector(self.prior, "prior")
        if prior.size != self.omega0.size:
            raise ModelError(f"prior has {prior.size} entries for {self.omega0.size} omegas")
        object.__setattr__(self, "prior", prior)
        object.__setattr__(
            self,
            "obs_kernel",
            _stochastic_matrix(self.obs_kernel, self.omega0.size, self.obs.size, "obs_kernel"),
        )
        if isinstance(self.cost, MeanFieldCost):
            if self.actions.values is None:
                raise ModelError("mean-field costs need a numeric action embedding")
        else:
            expected = (self.omega0.size,) + (self.actions.size,) * self.num_dms
            if self.cost.table.shape != expected:
                raise ModelError(
                    f"cost table shape {self.cost.table.shape} does not match {expected}"
                )
        object.__setattr__(self, "_count_cache", {})

    @property
    def is_mean_field(self) -> bool:
        return isinstance(self.cost, MeanFieldCost)

    def with_num_dms(self, n: int) -> StaticTeam:
        """같은 문제를 N=n으로. 표 비용은 N에 묶여 있어 불가."""
        if not self.is_mean_field:
            raise ModelError("table costs are tied to their N; only mean-field teams rescale")
        return StaticTeam(
            self.omega0, self.prior, self.obs, self.actions, self.obs_kernel, self.cost, n
        )

    def count_cost(self, omega_idx: int, counts: tuple[int, ...]) -> float:
        """평균장 비용을 행동 개수 벡터로 평가 (캐시)."""
        key = (omega_idx, counts)
        cache: dict = self._count_cache  # type: ignore[attr-defined]
        if key not in cache:
            value = self.cost.counts(  # type: ignore[union-attr]
                self.omega0.labels[omega_idx], counts, self.actions.values
            )
            if not math.isfinite(value) or value < 0:
                raise ModelError(
                    f"stage cost returned {value} at omega={self.omega0.labels[omega_idx]}, "
                    f"counts={counts}; costs must be finite and nonnegative"
                )
            cache[key] = value
        return cache[key]

    def joint_cost_idx(self, omega_idx: int, action_idx: Sequence[int]) -> float:
        if isinstance(self.cost, TableCost):
            return float(self.cost.table[(omega_idx, *action_idx)])
        counts = [0] * self.actions.size
        for a in action_idx:
            counts[a] += 1
        return self.count_cost(omega_idx, tuple(counts))

    def joint_cost(self, omega: str, actions: Sequence[Any]) -> float:
        """라벨(또는 임베딩 값)으로 주어진 행동 튜플의 결합 비용."""
        if len(actions) != self.num_dms:
            raise ModelError(f"expected {self.num_dms} actions, got {len(actions)}")
        return self.joint_cost_idx(
            self.omega0.index_of(omega), [self.actions.resolve(a) for a in actions]
        )


def example_one_team(num_dms: int = 2) -> StaticTeam:
    """기준 인스턴스: 관측 없음, u ∈ {0,1}, 비용 ((1/N)Σu − ½)²."""
    omega0 = FiniteSpace(("w0",))
    return StaticTeam(
        omega0=omega0,
        prior=np.array([1.0]),
        obs=FiniteSpace(("none",)),
        actions=FiniteSpace.numeric((0, 1)),
        obs_kernel=np.array([[1.0]]),
        cost=MeanFieldCost(mean_field_quadratic(0.5, 1.0, 0.0, omega0.labels)),
        num_dms=num_dms,
    )


def constant_cost_team(num_dms: int = 2, value: float = 1.0) -> StaticTeam:
    """모든 정책이 같은 비용 value를 내는 퇴화 팀."""
    return StaticTeam(
        omega0=FiniteSpace(("w0",)),
        prior=np.array([1.0]),
        obs=FiniteSpace(("y0", "y1")),
        actions=FiniteSpace.numeric((0, 1)),
        obs_kernel=np.array([[0.5, 0.5]]),
        cost=MeanFieldCost(lambda omega, u, ubar: value),
        num_dms=num_dms,
    )


def mean_field_cost(team: StaticTeam, omega0: str, actions: Sequence[Any]) -> float:
    """(1/N) Σ_i c(ω₀, u^i, (1/N)Σ_p u^p), 임베딩으로 평균."""
    if not team.is_mean_field:
        raise ModelError("mean_field_cost needs a mean-field stage cost")
    if len(actions) != team.num_dms:
        raise ModelError(f"expected {team.num_dms} actions, got {len(actions)}")
    values = [team.actions.values[team.actions.resolve(a)] for a in actions]  # type: ignore[index]
    return team.cost.joint(omega0, values)  # type: ignore[union-attr]


def validate_exchangeable_cost(
    cost: StaticTeam | Callable[[str, tuple], float],
    n_check: int,
    *,
    omega_labels: Sequence[str] = ("w0",),
    action_values: Sequence[Any] = (0, 1),
    tol: float = PROB_TOL,
) -> bool:
    """결합 비용이 모든 ω₀, 모든 순열에 대해 불변인지 확인.

    c(t) == c(sort(t)) for every tuple t is equivalent to invariance under
    all of S_n, so each tuple is compared once against its sorted form.
    """
    if n_check > MAX_EXCHANGEABILITY_N:
        raise BudgetExceededError(
            "exchangeability check", math.factorial(n_check), math.factorial(6)
        )
    if n_check < 1:
        raise ModelError(f"n_check must be positive, got {n_check}")

    if isinstance(cost, StaticTeam):
        team = cost
        if not team.is_mean_field and team.num_dms != n_check:
            raise ModelError(f"table cost is defined for N={team.num_dms}, not {n_check}")
        if team.is_mean_field and team.num_dms != n_check:
            team = team.with_num_dms(n_check)
        omegas = range(team.omega0.size)

        def evaluate(w: int, idx: tuple[int, ...]) -> float:
            return team.joint_cost_idx(w, idx)

        n_actions = team.actions.size
    else:
        fn = cost
        omegas = range(len(omega_labels))

        def evaluate(w: int, idx: tuple[int, ...]) -> float:
            return float(fn(omega_labels[w], tuple(action_values[i] for i in idx)))

        n_actions = len(action_values)

    for w in omegas:
        for idx in itertools.product(range(n_actions), repeat=n_check):
            canonical = tuple(sorted(idx))
            if canonical == idx:
                continue
            if abs(evaluate(w, idx) - evaluate(w, canonical)) > tol:
                logger.debug("Not exchangeable at omega=%d actions=%s", w, idx)
                return False
    return True


# ── 참조 측도 / static reduction ──


def countable_reference_measure(obs_space: FiniteSpace) -> np.ndarray:
    """Q(m_p) = 2^{-p} (p < k), 꼬리 질량은 마지막 라벨로 접는다: Q(m_k) = 2^{-(k-1)}."""
    k = obs_space.size
    q = np.array([2.0 ** -(p + 1) for p in range(k)])
    q[-1] = 2.0 ** -(k - 1)
    return q


@dataclass(frozen=True, eq=False)
class ReductionData:
    """정책 독립 참조 측도 τ와 우도비 ψ (τ에 대한 관측 밀도)."""

    tau: np.ndarray
    weight_fn: WeightFn

    def __post_init__(self) -> None:
        object.__setattr__(self, "tau", _probability_vector(self.tau, "reference measure"))

    def weights(
        self,
        obs: FiniteSpace,
        t: int,
        omega: str,
        x_hist: tuple[str, ...],
        u_hist: tuple[str, ...],
    ) -> np.ndarray:
        return np.array([self.weight_fn(t, y, omega, x_hist, u_hist) for y in obs.labels])

    def check_density(
        self,
        obs: FiniteSpace,
        t: int,
        omega: str,
        x_hist: tuple[str, ...],
        u_hist: tuple[str, ...],
        tol: float = DENSITY_TOL,
    ) -> bool:
        """Σ_y ψ(y,·) τ(y) = 1 이고 ψ ≥ 0 인지."""
        psi = self.weights(obs, t, omega, x_hist, u_hist)
        return bool(np.all(psi >= 0) and abs(float(psi @ self.tau) - 1.0) <= tol)

    @classmethod
    def from_team(cls, team: DynamicTeam, tau: np.ndarray | None = None) -> ReductionData:
        """ψ = ν/τ 를 모델에서 직접 유도. 기본 τ는 가산 참조 측도 (모든 원자 양수)."""
        tau_arr = countable_reference_measure(team.obs) if tau is None else np.asarray(tau)
        if np.any(tau_arr <= 0):
            raise ModelError("reference measure must be strictly positive to dominate every law")

        def weight_fn(t: int, y: str, omega: str, x_hist: tuple, u_hist: tuple) -> float:
            law = team.observation_law(t, x_hist, u_hist)
            j = team.obs.index_of(y)
            return float(law[j] / tau_arr[j])

        return cls(tau_arr, weight_fn)


@dataclass(frozen=True)
class AdditiveNoiseObservation:
    """y = κ(x) + v, v는 격자 {−K..K}·step 위에서 밀도 θ에 비례.

    κ must return multiples of step within shift_range·step. The observation
    lattice covers every reachable κ + v, so the discretized likelihood ratio
    is an exact density with respect to the reference measure τ ∝ θ.
    """

    kappa: Callable[..., float]
    step: float = 0.5
    noise_half_width: int = 4
    shift_range: tuple[int, int] = (0, 0)
    density: Callable[[np.ndarray], np.ndarray] = field(default=stats.norm(0.0, 1.0).pdf)

    def __post_init__(self) -> None:
        if self.step <= 0 or self.noise_half_width < 0:
            raise ModelError("step must be positive and noise_half_width nonnegative")
        lo, hi = self.shift_range
        if lo > hi:
            raise ModelError(f"shift_range must be ordered, got {self.shift_range}")

    @staticmethod
    def _label(units: int, step: float) -> str:
        return f"{units * step:g}"

    @property
    def noise_units(self) -> list[int]:
        k = self.noise_half_width
        return list(range(-k, k + 1))

    @property
    def obs_units(self) -> list[int]:
        lo, hi = self.shift_range
        k = self.noise_half_width
        return list(range(lo - k, hi + k + 1))

    @property
    def noise_space(self) -> FiniteSpace:
        return FiniteSpace(
            tuple(self._label(u, self.step) for u in self.noise_units),
            tuple(u * self.step for u in self.noise_units),
        )

    @property
    def obs_space(self) -> FiniteSpace:
        return FiniteSpace(
            tuple(self._label(u, self.step) for u in self.obs_units),
            tuple(u * self.step for u in self.obs_units),
        )

    def _theta(self, units: Sequence[int]) -> np.ndarray:
        theta = np.asarray(self.density(np.asarray(units, dtype=float) * self.step), dtype=float)
        if np.any(theta <= 0) or not np.all(np.isfinite(theta)):
            raise ModelError("noise density must be strictly positive on the grid")
        return theta

    @property
    def noise_probs(self) -> np.ndarray:
        theta = self._theta(self.noise_units)
        return theta / theta.sum()

    def reference_measure(self) -> np.ndarray:
        """τ(y) ∝ θ(y) on the observation lattice, renormalized."""
        theta = self._theta(self.obs_units)
        return theta / theta.sum()

    def shift_units(self, *args: Any) -> int:
        shift = float(self.kappa(*args)) / self.step
        units = round(shift)
        lo, hi = self.shift_range
        if abs(shift - units) > 1e-9 or not lo <= units <= hi:
            raise ModelError(f"kappa{args} = {shift * self.step} is off the lattice or out of range")
        return units

    def obs_map(self, x_hist: tuple[str, ...], u_hist: tuple[str, ...], v: str) -> str:
        v_units = round(float(v) / self.step)
        return self._label(self.shift_units(x_hist[-1]) + v_units, self.step)

    def weight(self, y: str, *args: Any) -> float:
        """격자 이산화된 ψ(y) = θ(y−κ)/θ(y) · Z_Y/Z_V (격자 밖이면 0)."""
        y_units = round(float(y) / self.step)
        v_units = y_units - self.shift_units(*args)
        if abs(v_units) > self.noise_half_width:
            return 0.0
        theta_y = self._theta([y_units])[0]
        z_y = self._theta(self.obs_units).sum()
        z_v = self._theta(self.noise_units).sum()
        return float(self._theta([v_units])[0] / theta_y * (z_y / z_v))

    def reduction_data(self) -> ReductionData:
        def weight_fn(t: int, y: str, omega: str, x_hist: tuple, u_hist: tuple) -> float:
            return self.weight(y, x_hist[-1])

        return ReductionData(self.reference_measure(), weight_fn)

    def observation_fields(self, horizon: int) -> dict[str, Any]:
        """DynamicTeam 생성자에 넘길 관측 관련 필드."""
        return {
            "obs": self.obs_space,
            "obs_noise": self.noise_space,
            "obs_noise_probs": self.noise_probs,
            "obs_maps": (self.obs_map,) * horizon,
        }


def reduction_weight(
    model: AdditiveNoiseObservation, y: float, *args: Any, discretized: bool = False
) -> float:
    """가법 잡음 관측의 우도비 ψ = θ(y − κ(args)) / θ(y).

    discretized=True returns the lattice-normalized ratio used with the
    renormalized reference measure.
    """
    if discretized:
        return model.weight(f"{y:g}", *args)
    theta_y = float(model.density(np.asarray(y, dtype=float)))
    if theta_y == 0.0:
        raise ModelError(f"noise density vanishes at y={y}; reject this grid point")
    return float(model.density(np.asarray(y - float(model.kappa(*args)), dtype=float))) / theta_y


# ── 동적 팀 ──


@dataclass(frozen=True, eq=False)
class DynamicTeam:
    """T-단계 평균장 동적 팀 (P_T^N). f_t, h_t는 모든 DM이 공유 (대칭 정보 구조).

    Observation maps receive the current noise draw only, so given the state
    and action history observations are independent across time.
    """

    horizon: int
    omega0: FiniteSpace
    prior: np.ndarray
    states: FiniteSpace
    obs: FiniteSpace
    actions: FiniteSpace
    init_kernel: np.ndarray
    dyn_noise: FiniteSpace
    dyn_noise_probs: np.ndarray
    obs_noise: FiniteSpace
    obs_noise_probs: np.ndarray
    dynamics: tuple[Dynamics, ...]
    obs_maps: tuple[ObservationMap, ...]
    stage_cost: DynamicStageCost
    num_dms: int
    reduction: ReductionData | None = None

    def __post_init__(self) -> None:
        if self.horizon < 1 or self.num_dms < 1:
            raise ModelError("horizon and num_dms must be positive")
        object.__setattr__(self, "prior", _probability_vector(self.prior, "prior"))
        object.__setattr__(
            self,
            "init_kernel",
            _stochastic_matrix(
                self.init_kernel, self.omega0.size, self.states.size, "init_kernel"
            ),
        )
        for name in ("dyn_noise", "obs_noise"):
            probs = _probability_vector(getattr(self, f"{name}_probs"), f"{name} probabilities")
            if probs.size != getattr(self, name).size:
                raise ModelError(f"{name} probabilities do not match its space")
            object.__setattr__(self, f"{name}_probs", probs)
        for name in ("dynamics", "obs_maps"):
            maps = tuple(getattr(self, name))
            if len(maps) != self.horizon:
                raise ModelError(f"{name} needs one map per stage ({self.horizon}), got {len(maps)}")
            object.__setattr__(self, name, maps)
        if self.states.values is None or self.actions.values is None:
            raise ModelError("dynamic teams need numeric state and action embeddings")
        if self.reduction is not None and self.reduction.tau.size != self.obs.size:
            raise ModelError("reference measure does not match the observation space")
        object.__setattr__(self, "_law_cache", {})

    def with_num_dms(self, n: int) -> DynamicTeam:
        fields = {k: getattr(self, k) for k in self.__dataclass_fields__}
        fields["num_dms"] = n
        return DynamicTeam(**fields)

    def with_reduction(self, reduction: ReductionData) -> DynamicTeam:
        fields = {k: getattr(self, k) for k in self.__dataclass_fields__}
        fields["reduction"] = reduction
        return DynamicTeam(**fields)

    def observation_law(
        self, t: int, x_hist: tuple[str, ...], u_hist: tuple[str, ...]
    ) -> np.ndarray:
        """ν_t(·| x_{0:t}, u_{0:t−1}): 관측 잡음을 h_t로 push-forward."""
        key = (t, x_hist, u_hist)
        cache: dict = self._law_cache  # type: ignore[attr-defined]
        if key not in cache:
            law = np.zeros(self.obs.size)
            h = self.obs_maps[t]
            for v, p in zip(self.obs_noise.labels, self.obs_noise_probs):
                if p > 0:
                    law[self.obs.index_of(h(x_hist, u_hist, v))] += p
            law.setflags(write=False)
            cache[key] = law
        return cache[key]

    def stage_cost_checked(
        self, omega: str, x: float, u: float, ubar: float, xbar: float
    ) -> float:
        value = float(self.stage_cost(omega, x, u, ubar, xbar))
        if not math.isfinite(value) or value < 0:
            raise ModelError(f"stage cost returned {value}; costs must be finite and nonnegative")
        return value

    @classmethod
    def from_static(cls, team: StaticTeam) -> DynamicTeam:
        """T=1 래퍼. 상태 = ω₀ 복사본, 관측 잡음 = ω별 후보 관측 튜플.

        The noise v is a tuple (v_ω)_ω with law Π_ω obs_kernel[ω, v_ω] and
        h(x=ω, v) = v_ω, which reproduces obs_kernel exactly.
        """
        if not team.is_mean_field:
            raise ModelError("only mean-field static teams have a dynamic wrapper")
        n_omega, n_obs = team.omega0.size, team.obs.size
        tuples = list(itertools.product(range(n_obs), repeat=n_omega))
        noise_labels = tuple("|".join(team.obs.labels[j] for j in tup) for tup in tuples)
        noise_probs = np.array(
            [math.prod(team.obs_kernel[w, j] for w, j in enumerate(tup)) for tup in tuples]
        )
        noise_probs = noise_probs / noise_probs.sum()
        omega_index = {label: i for i, label in enumerate(team.omega0.labels)}
        stage = team.cost.stage_cost  # type: ignore[union-attr]

        def obs_map(x_hist: tuple[str, ...], u_hist: tuple[str, ...], v: str) -> str:
            return v.split("|")[omega_index[x_hist[-1]]]

        def dynamics(x: str, u: str, xbar: float, ubar: float, w: str) -> str:
            return x

        def cost(omega: str, x: float, u: float, ubar: float, xbar: float) -> float:
            return stage(omega, u, ubar)

        return cls(
            horizon=1,
            omega0=team.omega0,
            prior=team.prior,
            states=FiniteSpace(team.omega0.labels, tuple(float(i) for i in range(n_omega))),
            obs=team.obs,
            actions=team.actions,
            init_kernel=np.eye(n_omega),
            dyn_noise=FiniteSpace(("w",)),
            dyn_noise_probs=np.array([1.0]),
            obs_noise=FiniteSpace(noise_labels),
            obs_noise_probs=noise_probs,
            dynamics=(dynamics,),
            obs_maps=(obs_map,),
            stage_cost=cost,
            num_dms=team.num_dms,
        )


def example_dynamic_team(num_dms: int = 2, horizon: int = 2) -> DynamicTeam:
    """번들 동적 패밀리: x_{t+1} = u_t, y_t = x_t, 단계 비용 (ū_t − ½)²."""

    def dynamics(x: str, u: str, xbar: float, ubar: float, w: str) -> str:
        return u

    def obs_map(x_hist: tuple[str, ...], u_hist: tuple[str, ...], v: str) -> str:
        return x_hist[-1]

    def cost(omega: str, x: float, u: float, ubar: float, xbar: float) -> float:
        return (ubar - 0.5) ** 2

    binary = FiniteSpace.numeric((0, 1))
    return DynamicTeam(
        horizon=horizon,
        omega0=FiniteSpace(("w0",)),
        prior=np.array([1.0]),
        states=binary,
        obs=FiniteSpace(binary.labels),
        actions=binary,
        init_kernel=np.array([[1.0, 0.0]]),
        dyn_noise=FiniteSpace(("w",)),
        dyn_noise_probs=np.array([1.0]),
        obs_noise=FiniteSpace(("v",)),
        obs_noise_probs=np.array([1.0]),
        dynamics=(dynamics,) * horizon,
        obs_maps=(obs_map,) * horizon,
        stage_cost=cost,
        num_dms=num_dms,
    )


# ── 가정 점검 ──


@dataclass
class AssumptionCheck:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class AssumptionReport:
    checks: list[AssumptionCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name: str, passed: bool, detail: str = "") -> None:
        self.checks.append(AssumptionCheck(name, passed, detail))


def check_assumptions(team: StaticTeam | DynamicTeam) -> AssumptionReport:
    """유한 공간에서 점검 가능한 구조 가정들을 보고."""
    report = AssumptionReport()
    if isinstance(team, StaticTeam):
        n_check = min(team.num_dms, MAX_EXCHANGEABILITY_N)
        if team.is_mean_field:
            report.add("exchangeable cost", True, "mean-field form")
        elif team.num_dms <= MAX_EXCHANGEABILITY_N:
            report.add("exchangeable cost", validate_exchangeable_cost(team, n_check))
        else:
            report.add("exchangeable cost", False, f"N={team.num_dms} too large to enumerate")
        report.add("absolute continuity", *_observation_support(team))
        report.add("conditionally i.i.d. observations", True, "shared obs_kernel")
        report.add("bounded nonnegative cost", *_static_cost_bounded(team))
    else:
        report.add("exchangeable cost", True, "mean-field stage cost")
        report.add("symmetric information structure", True, "shared f_t and h_t")
        report.add("i.i.d. noise", True, "one noise law per stage shared by all DMs")
        if team.reduction is not None:
            ok = all(
                team.reduction.check_density(team.obs, t, team.omega0.labels[0], xh, uh)
                for t, xh, uh in _sample_histories(team)
            )
            report.add("independent reduction density", ok)
    for check in report.checks:
        logger.info("Assumption %-36s %s %s", check.name, "ok" if check.passed else "FAIL",
                    check.detail)
    return report


def _observation_support(team: StaticTeam) -> tuple[bool, str]:
    """Q는 모든 관측에 양수이므로, 관측 법칙의 합이 Q와 같은 support를 갖는지만 본다."""
    reachable = team.prior @ team.obs_kernel
    dead = [label for label, mass in zip(team.obs.labels, reachable) if mass <= PROB_TOL]
    if dead:
        return False, f"observations {dead} have zero probability under the prior"
    return True, "every observation is charged by the prior-mixed observation law"


def _static_cost_bounded(team: StaticTeam) -> tuple[bool, str]:
    """개수 벡터 위에서 비용을 평가. 너무 많으면 seed 0으로 표본 추출."""
    if isinstance(team.cost, TableCost):
        return True, "table entries validated on load"
    n, k = team.num_dms, team.actions.size
    n_states = math.comb(n + k - 1, k - 1)
    if n_states <= COST_CHECK_STATES:
        combos = [
            tuple(combo.count(a) for a in range(k))
            for combo in itertools.combinations_with_replacement(range(k), n)
        ]
        detail = f"all {n_states} count vectors"
    else:
        rng = np.random.default_rng(0)
        combos = [tuple(int(n * (a == b)) for a in range(k)) for b in range(k)]
        combos += [
            tuple(int(c) for c in rng.multinomial(n, rng.dirichlet(np.ones(k))))
            for _ in range(COST_CHECK_STATES)
        ]
        detail = f"{len(combos)} sampled of {n_states} count vectors"
    try:
        for w in range(team.omega0.size):
            for counts in combos:
                team.count_cost(w, counts)
    except ModelError as e:
        return False, str(e)
    return True, detail


def _sample_histories(team: DynamicTeam) -> list[tuple[int, tuple[str, ...], tuple[str, ...]]]:
    """짧은 히스토리 (t ≤ 1)에서 밀도 조건을 점검할 인자들."""
    out = []
    for x in team.states.labels:
        out.append((0, (x,), ()))
        if team.horizon > 1:
            for x2 in team.states.labels:
                for u in team.actions.labels:
                    out.append((1, (x, x2), (u,)))
    return out
