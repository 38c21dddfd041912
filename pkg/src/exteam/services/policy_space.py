"""정책 공간: 결정적 정책, 완화 커널, 프로파일, 혼합(randomized policy)과 구조 연산.

Permutations are 0-based tuples. ``permute_mixture(P, sigma)`` puts at
coordinate j the kernel P had at coordinate ``sigma[j]``.
"""

from __future__ import annotations

import itertools
import logging
import math
from collections import Counter, defaultdict
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from functools import reduce
from typing import Any

import numpy as np
from scipy.optimize import minimize, nnls

from exteam.exceptions import BudgetExceededError, PolicyError, SolverError
from exteam.infra.budget import check_budget
from exteam.infra.simplex import simplex_grid, total_variation
from exteam.models import MixtureTag

logger = logging.getLogger(__name__)

ROW_TOL = 1e-12
KEY_DECIMALS = 12
DEFAULT_MAX_SYMMETRIZE_N = 8
DEFAULT_DF_BUDGET = 10**6
SUPPORT_TOL = 1e-10

# ── 결정적 정책 / 완화 커널 ──


@dataclass(frozen=True)
class DeterministicPolicy:
    """단계별 관측 → 행동 인덱스 표. table[t][y] = action index."""

    table: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        table = tuple(tuple(int(a) for a in stage) for stage in self.table)
        if not table or not table[0]:
            raise PolicyError("deterministic policy needs at least one stage and observation")
        if len({len(stage) for stage in table}) != 1:
            raise PolicyError("every stage must map the same observation space")
        if any(a < 0 for stage in table for a in stage):
            raise PolicyError("action indices must be nonnegative")
        object.__setattr__(self, "table", table)

    @property
    def horizon(self) -> int:
        return len(self.table)

    @property
    def n_obs(self) -> int:
        return len(self.table[0])

    def act(self, t: int, y: int) -> int:
        return self.table[t][y]

    def to_kernel(self, n_actions: int) -> RelaxedKernel:
        rows = np.zeros((self.horizon, self.n_obs, n_actions))
        for t, stage in enumerate(self.table):
            for y, a in enumerate(stage):
                if a >= n_actions:
                    raise PolicyError(f"action index {a} outside {n_actions} actions")
                rows[t, y, a] = 1.0
        return RelaxedKernel(rows)

    def to_labels(self, obs_labels: Sequence[str], action_labels: Sequence[str]) -> list[dict]:
        return [
            {obs_labels[y]: action_labels[a] for y, a in enumerate(stage)} for stage in self.table
        ]


def enumerate_deterministic(horizon: int, n_obs: int, n_actions: int) -> list[DeterministicPolicy]:
    """모든 결정적 정책을 사전식 순서로 (|U|^{T·|Y|}개)."""
    out = []
    for flat in itertools.product(range(n_actions), repeat=horizon * n_obs):
        out.append(
            DeterministicPolicy(tuple(flat[t * n_obs : (t + 1) * n_obs] for t in range(horizon)))
        )
    return out


@dataclass(frozen=True, eq=False)
class RelaxedKernel:
    """완화 정책 γ(du|y). rows[t, y] 는 행동 위의 확률 벡터, shape (T, |Y|, |U|).

    Equality and hashing go through ``key()``, entries rounded to 12 decimals.
    """

    rows: np.ndarray

    def __post_init__(self) -> None:
        rows = np.array(self.rows, dtype=float)
        if rows.ndim == 2:
            rows = rows[None, :, :]
        if rows.ndim != 3 or 0 in rows.shape:
            raise PolicyError(f"kernel rows must have shape (T, |Y|, |U|), got {rows.shape}")
        if not np.all(np.isfinite(rows)):
            raise PolicyError("kernel entries must be finite")
        if np.any(rows < -ROW_TOL) or np.any(rows > 1 + ROW_TOL):
            raise PolicyError("kernel entries must lie in [0, 1]")
        sums = rows.sum(axis=-1)
        if np.any(np.abs(sums - 1.0) > ROW_TOL):
            raise PolicyError(f"kernel rows must sum to 1, got {sums.ravel().tolist()}")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        rounded = np.round(rows, KEY_DECIMALS) + 0.0
        object.__setattr__(self, "_key", (rows.shape, tuple(rounded.ravel().tolist())))

    def key(self) -> tuple:
        return self._key  # type: ignore[attr-defined]

    def __eq__(self, other: object) -> bool:
        return isinstance(other, RelaxedKernel) and self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def __repr__(self) -> str:
        return f"RelaxedKernel({self.rows.tolist()})"

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.rows.shape  # type: ignore[return-value]

    @property
    def is_deterministic(self) -> bool:
        return bool(np.all((np.abs(self.rows) <= ROW_TOL) | (np.abs(self.rows - 1) <= ROW_TOL)))

    def to_deterministic(self) -> DeterministicPolicy:
        if not self.is_deterministic:
            raise PolicyError("kernel has randomized rows")
        return DeterministicPolicy(tuple(map(tuple, np.argmax(self.rows, axis=-1).tolist())))

    @classmethod
    def uniform(cls, n_obs: int, n_actions: int, horizon: int = 1) -> RelaxedKernel:
        return cls(np.full((horizon, n_obs, n_actions), 1.0 / n_actions))

    @classmethod
    def constant(cls, action: int, n_obs: int, n_actions: int, horizon: int = 1) -> RelaxedKernel:
        return DeterministicPolicy(((action,) * n_obs,) * horizon).to_kernel(n_actions)


def kernel_grid(shape: tuple[int, int, int], pitch: float) -> list[RelaxedKernel]:
    """모든 행이 pitch 격자 위에 있는 커널들 (행 격자의 곱)."""
    horizon, n_obs, n_actions = shape
    row_points = simplex_grid(n_actions, pitch)
    return [
        RelaxedKernel(np.array(combo).reshape(horizon, n_obs, n_actions))
        for combo in itertools.product(row_points, repeat=horizon * n_obs)
    ]


# ── 프로파일 ──


@dataclass(frozen=True)
class PolicyProfile:
    """DM별 커널 튜플 (γ¹, …, γ^N)."""

    per_dm: tuple[RelaxedKernel, ...]

    def __post_init__(self) -> None:
        per_dm = tuple(self.per_dm)
        if not per_dm:
            raise PolicyError("profile needs at least one decision maker")
        if not all(isinstance(k, RelaxedKernel) for k in per_dm):
            raise PolicyError("profile entries must be RelaxedKernel")
        if len({k.shape for k in per_dm}) != 1:
            raise PolicyError("all kernels in a profile must share the same spaces")
        object.__setattr__(self, "per_dm", per_dm)

    @classmethod
    def of(cls, *kernels: RelaxedKernel) -> PolicyProfile:
        return cls(tuple(kernels))

    @classmethod
    def iid(cls, kernel: RelaxedKernel, n: int) -> PolicyProfile:
        return cls((kernel,) * n)

    def __len__(self) -> int:
        return len(self.per_dm)

    def __iter__(self):
        return iter(self.per_dm)

    def __getitem__(self, i: int) -> RelaxedKernel:
        return self.per_dm[i]

    @property
    def n_dms(self) -> int:
        return len(self.per_dm)

    @property
    def kernel_shape(self) -> tuple[int, int, int]:
        return self.per_dm[0].shape

    @property
    def is_deterministic(self) -> bool:
        return all(k.is_deterministic for k in self.per_dm)

    def key(self) -> tuple:
        return tuple(k.key() for k in self.per_dm)

    def permuted(self, sigma: Sequence[int]) -> PolicyProfile:
        return PolicyProfile(tuple(self.per_dm[s] for s in sigma))

    def restricted(self, m: int) -> PolicyProfile:
        return PolicyProfile(self.per_dm[:m])


# ── 혼합 ──


@dataclass(frozen=True)
class KernelLaw:
    """한 DM의 커널 위 유한 분포 (P^i 또는 P^i(·|z))."""

    atoms: tuple[tuple[float, RelaxedKernel], ...]

    def __post_init__(self) -> None:
        atoms = tuple((float(w), k) for w, k in self.atoms)
        _check_weights([w for w, _ in atoms], "kernel law")
        object.__setattr__(self, "atoms", atoms)

    @classmethod
    def point(cls, kernel: RelaxedKernel) -> KernelLaw:
        return cls(((1.0, kernel),))

    @classmethod
    def coerce(cls, item: KernelLaw | RelaxedKernel) -> KernelLaw:
        return item if isinstance(item, KernelLaw) else cls.point(item)

    def law(self) -> dict[RelaxedKernel, float]:
        out: dict[RelaxedKernel, float] = defaultdict(float)
        for w, k in self.atoms:
            out[k] += w
        return dict(out)


@dataclass(frozen=True)
class CommonRandomness:
    """공통 난수 레이아웃: η(z)와 z별 DM 인자 P^i(·|z)."""

    eta: tuple[float, ...]
    factors: tuple[tuple[KernelLaw, ...], ...]  # [z][i]

    def permuted(self, sigma: Sequence[int]) -> CommonRandomness:
        return CommonRandomness(self.eta, tuple(tuple(f[s] for s in sigma) for f in self.factors))

    def restricted(self, m: int) -> CommonRandomness:
        return CommonRandomness(self.eta, tuple(f[:m] for f in self.factors))

    @property
    def symmetric(self) -> bool:
        return all(len({_law_key(x) for x in f}) == 1 for f in self.factors)


def _law_key(law: KernelLaw) -> tuple:
    return tuple(sorted((k.key(), round(w, KEY_DECIMALS)) for k, w in law.law().items()))


def _check_weights(weights: Sequence[float], what: str) -> None:
    if not weights:
        raise PolicyError(f"{what} needs at least one atom")
    if any(not math.isfinite(w) or w < 0 for w in weights):
        raise PolicyError(f"{what} weights must be finite and nonnegative")
    total = math.fsum(weights)
    if abs(total - 1.0) > ROW_TOL:
        raise PolicyError(f"{what} weights sum to {total:.15g}, expected 1")


@dataclass(frozen=True, eq=False)
class Mixture:
    """프로파일 위 유한 분포 P_π와 구조 태그."""

    atoms: tuple[tuple[float, PolicyProfile], ...]
    tag: MixtureTag = MixtureTag.GENERAL
    common_randomness: CommonRandomness | None = None

    def __post_init__(self) -> None:
        atoms = tuple((float(w), p) for w, p in self.atoms)
        _check_weights([w for w, _ in atoms], "mixture")
        if len({p.n_dms for _, p in atoms}) != 1 or len({p.kernel_shape for _, p in atoms}) != 1:
            raise PolicyError("all mixture atoms must cover the same DMs and spaces")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "tag", MixtureTag(self.tag))
        if self.tag in (MixtureTag.CO, MixtureTag.CO_SYM) and self.common_randomness is None:
            raise PolicyError(f"{self.tag.value} mixtures need a common-randomness layout")

    # ── 생성자 ──

    @classmethod
    def general(cls, atoms: Iterable[tuple[float, PolicyProfile]]) -> Mixture:
        return cls(tuple(atoms), MixtureTag.GENERAL)

    @classmethod
    def dirac(cls, profile: PolicyProfile) -> Mixture:
        """δ_profile. 결정적이면 DIRAC, 동일 커널이면 PR_SYM, 아니면 PR."""
        if profile.is_deterministic:
            tag = MixtureTag.DIRAC
        elif len(set(profile.per_dm)) == 1:
            tag = MixtureTag.PR_SYM
        else:
            tag = MixtureTag.PR
        return cls(((1.0, profile),), tag)

    @classmethod
    def product(cls, factors: Sequence[KernelLaw | RelaxedKernel]) -> Mixture:
        """독립 곱 ⊗_i P^i."""
        laws = [KernelLaw.coerce(f) for f in factors]
        atoms = _expand_product(laws, 1.0)
        merged = _merge(atoms)
        if len(merged) == 1 and next(iter(merged)).is_deterministic:
            tag = MixtureTag.DIRAC
        elif len({_law_key(f) for f in laws}) == 1:
            tag = MixtureTag.PR_SYM
        else:
            tag = MixtureTag.PR
        return cls(tuple((w, p) for p, w in merged.items()), tag)

    @classmethod
    def iid(cls, factor: KernelLaw | RelaxedKernel, n: int) -> Mixture:
        law = KernelLaw.coerce(factor)
        merged = _merge(_expand_product([law] * n, 1.0))
        return cls(tuple((w, p) for p, w in merged.items()), MixtureTag.PR_SYM)

    @classmethod
    def common_randomness_mixture(
        cls,
        eta: Sequence[float],
        factors: Sequence[Sequence[KernelLaw | RelaxedKernel]],
    ) -> Mixture:
        """Σ_z η(z) ⊗_i P^i(·|z). z별 인자가 모두 같으면 CO_SYM."""
        if len(eta) != len(factors):
            raise PolicyError(f"eta has {len(eta)} atoms but {len(factors)} factor rows")
        _check_weights(list(eta), "common randomness")
        layout = CommonRandomness(
            tuple(float(e) for e in eta),
            tuple(tuple(KernelLaw.coerce(f) for f in row) for row in factors),
        )
        if len({len(row) for row in layout.factors}) != 1:
            raise PolicyError("every z must carry one factor per DM")
        atoms: list[tuple[float, PolicyProfile]] = []
        for e, row in zip(layout.eta, layout.factors):
            if e > 0:
                atoms.extend(_expand_product(list(row), e))
        merged = _merge(atoms)
        tag = MixtureTag.CO_SYM if layout.symmetric else MixtureTag.CO
        return cls(tuple((w, p) for p, w in merged.items()), tag, layout)

    # ── 조회 ──

    @property
    def n_dms(self) -> int:
        return self.atoms[0][1].n_dms

    @property
    def kernel_shape(self) -> tuple[int, int, int]:
        return self.atoms[0][1].kernel_shape

    @property
    def support(self) -> list[PolicyProfile]:
        return [p for _, p in self.atoms]

    def law(self) -> dict[PolicyProfile, float]:
        """중복 원자를 합친 프로파일 위 분포."""
        cached = getattr(self, "_law", None)
        if cached is None:
            cached = _merge(self.atoms)
            object.__setattr__(self, "_law", cached)
        return cached

    def merged(self) -> Mixture:
        return Mixture(
            tuple((w, p) for p, w in self.law().items()), self.tag, self.common_randomness
        )

    def marginal(self, i: int) -> dict[RelaxedKernel, float]:
        out: dict[RelaxedKernel, float] = defaultdict(float)
        for w, p in self.atoms:
            out[p[i]] += w
        return dict(out)

    def same_law(self, other: Mixture, tol: float = ROW_TOL) -> bool:
        return law_distance(self, other) <= tol


def _expand_product(
    laws: Sequence[KernelLaw], scale: float
) -> list[tuple[float, PolicyProfile]]:
    out = []
    for combo in itertools.product(*[law.atoms for law in laws]):
        w = scale * math.prod(a[0] for a in combo)
        if w > 0:
            out.append((w, PolicyProfile(tuple(a[1] for a in combo))))
    return out


def _merge(atoms: Iterable[tuple[float, PolicyProfile]]) -> dict[PolicyProfile, float]:
    out: dict[PolicyProfile, float] = {}
    for w, p in atoms:
        out[p] = out.get(p, 0.0) + w
    return out


def law_distance(p: Mixture, q: Mixture) -> float:
    """두 혼합이 유도하는 프로파일 분포 사이 TV."""
    return total_variation(p.law(), q.law())


# ── 구조 연산 ──


def _check_permutation(sigma: Sequence[int], n: int) -> tuple[int, ...]:
    try:
        sig = tuple(int(s) for s in sigma)
    except (TypeError, ValueError):
        raise PolicyError(f"sigma must be a sequence of indices, got {sigma!r}") from None
    if sorted(sig) != list(range(n)):
        raise PolicyError(f"sigma {sig} is not a bijection on 0..{n - 1}")
    return sig


def permute_mixture(P: Mixture, sigma: Sequence[int]) -> Mixture:
    """P^σ: 좌표 j에 P의 좌표 σ(j) 커널을 놓는다. 가중치는 그대로."""
    sig = _check_permutation(sigma, P.n_dms)
    atoms = tuple((w, p.permuted(sig)) for w, p in P.atoms)
    layout = P.common_randomness.permuted(sig) if P.common_randomness else None
    return Mixture(atoms, P.tag, layout)


def _permuted_law(law: dict[PolicyProfile, float], sigma: Sequence[int]) -> dict:
    out: dict[PolicyProfile, float] = {}
    for p, w in law.items():
        q = p.permuted(sigma)
        out[q] = out.get(q, 0.0) + w
    return out


def symmetrize(P: Mixture, max_n: int = DEFAULT_MAX_SYMMETRIZE_N) -> Mixture:
    """(1/N!) Σ_σ P^σ, 중복 원자 병합. 결과 태그 EX."""
    n = P.n_dms
    if n > max_n:
        raise BudgetExceededError(
            "exact symmetrization", math.factorial(n), math.factorial(max_n),
            "symmetrize_sampled",
        )
    if P.tag in (MixtureTag.EX, MixtureTag.PR_SYM, MixtureTag.CO_SYM):
        if is_exchangeable(P):
            return Mixture(P.atoms, MixtureTag.EX)
        logger.warning("symmetrize: %s-tagged mixture is not exchangeable; averaging over S_%d",
                       P.tag.value, n)
    scale = 1.0 / math.factorial(n)
    acc: dict[PolicyProfile, float] = {}
    for sigma in itertools.permutations(range(n)):
        for w, p in P.atoms:
            q = p.permuted(sigma)
            acc[q] = acc.get(q, 0.0) + w * scale
    logger.debug("symmetrize: N=%d, %d atoms -> %d atoms", n, len(P.atoms), len(acc))
    return Mixture(tuple((w, p) for p, w in acc.items()), MixtureTag.EX)


def symmetrize_sampled(P: Mixture, n_draws: int, seed: int = 0) -> Mixture:
    """무작위 순열 n_draws개의 평균. 기대값에서만 비용이 보존된다 (태그 GENERAL)."""
    if n_draws < 1:
        raise PolicyError(f"n_draws must be positive, got {n_draws}")
    rng = np.random.default_rng(seed)
    acc: dict[PolicyProfile, float] = {}
    for _ in range(n_draws):
        sigma = tuple(rng.permutation(P.n_dms).tolist())
        for w, p in P.atoms:
            q = p.permuted(sigma)
            acc[q] = acc.get(q, 0.0) + w / n_draws
    return Mixture(tuple((w, p) for p, w in acc.items()), MixtureTag.GENERAL)


def is_exchangeable(P: Mixture, tol: float = ROW_TOL) -> bool:
    """프로파일 분포가 S_N 생성원(인접 전치, N-순환)에 대해 불변이면 모든 σ에 불변."""
    n = P.n_dms
    if n == 1:
        return True
    law = P.law()
    swap = (1, 0) + tuple(range(2, n))
    cycle = tuple(range(1, n)) + (0,)
    return all(total_variation(law, _permuted_law(law, g)) <= tol for g in (swap, cycle))


def restrict(P: Mixture, m: int) -> Mixture:
    """처음 m개 좌표로의 marginal. 모든 태그는 restriction에서 유지된다."""
    if not 1 <= m <= P.n_dms:
        raise PolicyError(f"m must be in 1..{P.n_dms}, got {m}")
    if m == P.n_dms:
        return P
    merged = _merge((w, p.restricted(m)) for w, p in P.atoms)
    layout = P.common_randomness.restricted(m) if P.common_randomness else None
    return Mixture(tuple((w, p) for p, w in merged.items()), P.tag, layout)


def df_extend_marginal(P: Mixture, m: int, budget: int = DEFAULT_DF_BUDGET) -> Mixture:
    """(γ^{I_1}, …, γ^{I_m}), I_j i.i.d. uniform{1..N} 의 분포.

    Index tuples with the same multiset of kernels give the m-fold product
    of the atom's empirical measure, so atoms are grouped by that measure.
    """
    n = P.n_dms
    if m < 1:
        raise PolicyError(f"m must be positive, got {m}")
    check_budget("de Finetti extension", n**m, budget, "a smaller m")
    if not is_exchangeable(P, tol=1e-9):
        raise PolicyError("de Finetti extension needs an exchangeable mixture")

    groups: dict[tuple, tuple[list[tuple[RelaxedKernel, float]], float]] = {}
    for w, p in P.atoms:
        counts = Counter(p.per_dm)
        emp = sorted(((k, c / n) for k, c in counts.items()), key=lambda kc: kc[0].key())
        gkey = tuple((k.key(), c) for k, c in emp)
        prev = groups.get(gkey)
        groups[gkey] = (emp, (prev[1] if prev else 0.0) + w)

    acc: dict[PolicyProfile, float] = {}
    for emp, w in groups.values():
        for combo in itertools.product(emp, repeat=m):
            q = PolicyProfile(tuple(k for k, _ in combo))
            acc[q] = acc.get(q, 0.0) + w * math.prod(c for _, c in combo)
    return Mixture(tuple((w, p) for p, w in acc.items()), MixtureTag.EX)


# ── 결정적 분해 / de Finetti 추출 ──


def _map_table(shape: tuple[int, int, int], budget: int) -> np.ndarray:
    horizon, n_obs, n_actions = shape
    check_budget("deterministic maps", n_actions ** (horizon * n_obs), budget)
    policies = enumerate_deterministic(horizon, n_obs, n_actions)
    return np.array([p.table for p in policies], dtype=int)


def _decompose(kernel: RelaxedKernel, maps: np.ndarray) -> np.ndarray:
    """kernel의 결정적 정책 위 분해 벡터 d[g] = Π_{t,y} γ(g(t,y)|y)."""
    horizon, n_obs, _ = kernel.shape
    t_idx = np.arange(horizon)[None, :, None]
    y_idx = np.arange(n_obs)[None, None, :]
    return np.prod(kernel.rows[t_idx, y_idx, maps], axis=(1, 2))


def deterministic_law(P: Mixture, budget: int = DEFAULT_DF_BUDGET) -> np.ndarray:
    """P가 결정적 프로파일 위에 유도하는 분포 (사전식 인덱스, 길이 D^N)."""
    maps = _map_table(P.kernel_shape, budget)
    check_budget("deterministic profile law", len(maps) ** P.n_dms, budget)
    cache: dict[RelaxedKernel, np.ndarray] = {}
    out = np.zeros(len(maps) ** P.n_dms)
    for w, p in P.atoms:
        vecs = []
        for k in p.per_dm:
            if k not in cache:
                cache[k] = _decompose(k, maps)
            vecs.append(cache[k])
        out += w * reduce(np.kron, vecs)
    return out


def kernel_to_deterministic_mixture(kernel: RelaxedKernel, budget: int = DEFAULT_DF_BUDGET) -> Mixture:
    """행별 독립 분해: 맵 g의 가중치 = Π_{t,y} k(g(t,y)|y). 0-가중 맵은 생략."""
    horizon, n_obs, n_actions = kernel.shape
    rows = kernel.rows.reshape(horizon * n_obs, n_actions)
    supports = [np.flatnonzero(row > 0).tolist() for row in rows]
    check_budget("kernel decomposition", math.prod(len(s) for s in supports), budget)
    atoms = []
    for combo in itertools.product(*supports):
        w = math.prod(rows[r, a] for r, a in enumerate(combo))
        table = tuple(combo[t * n_obs : (t + 1) * n_obs] for t in range(horizon))
        atoms.append((w, PolicyProfile((DeterministicPolicy(table).to_kernel(n_actions),))))
    total = math.fsum(w for w, _ in atoms)
    atoms = [(w / total, p) for w, p in atoms]
    tag = MixtureTag.DIRAC if len(atoms) == 1 else MixtureTag.PR
    return Mixture(tuple(atoms), tag)


def mix_kernels(P: Mixture, dm: int = 0) -> RelaxedKernel:
    """Σ_a w_a γ_a^{dm}: 혼합을 한 DM의 완화 커널로 다시 합친다."""
    rows = sum(w * p[dm].rows for w, p in P.atoms)
    rows = rows / rows.sum(axis=-1, keepdims=True)
    return RelaxedKernel(rows)


@dataclass(frozen=True)
class DeFinettiFit:
    weights: tuple[float, ...]
    kernels: tuple[RelaxedKernel, ...]
    residual: float  # ℓ² on the deterministic-profile law
    residual_tv: float

    def mixture(self, n: int) -> Mixture:
        """Σ_z η(z) Π_z^{⊗n} (CO_SYM)."""
        pairs = [(w, k) for w, k in zip(self.weights, self.kernels) if w > 0]
        total = math.fsum(w for w, _ in pairs)
        return Mixture.common_randomness_mixture(
            [w / total for w, _ in pairs], [[k] * n for _, k in pairs]
        )


def _simplex_least_squares(A: np.ndarray, b: np.ndarray, tol: float) -> np.ndarray:
    """min ||Aη − b||² on the probability simplex.

    SLSQP from the normalized NNLS point picks the support; an active-set pass
    then solves the equality-constrained KKT system on it until no weight goes
    negative and no inactive column has a smaller gradient.
    """
    n_cols = A.shape[1]
    x0, _ = nnls(A, b)
    x0 = x0 / x0.sum() if x0.sum() > 0 else np.full(n_cols, 1.0 / n_cols)

    def objective(x: np.ndarray) -> tuple[float, np.ndarray]:
        r = A @ x - b
        return 0.5 * float(r @ r), A.T @ r

    res = minimize(
        objective,
        x0,
        jac=True,
        method="SLSQP",
        bounds=[(0.0, 1.0)] * n_cols,
        constraints=({"type": "eq", "fun": lambda x: x.sum() - 1.0, "jac": np.ones_like},),
        options={"ftol": tol, "maxiter": 1000},
    )
    if not np.all(np.isfinite(res.x)):
        raise SolverError(f"de Finetti fit failed: {res.message}")
    if not res.success:
        logger.warning("de Finetti SLSQP stopped early: %s", res.message)
    eta = np.clip(res.x, 0.0, None)

    support = np.flatnonzero(eta > SUPPORT_TOL)
    for _ in range(2 * n_cols):
        if support.size == 0:
            break
        x = _equality_least_squares(A[:, support], b)
        if x.min() < -SUPPORT_TOL:
            support = np.delete(support, int(np.argmin(x)))
            continue
        candidate = np.zeros(n_cols)
        candidate[support] = np.clip(x, 0.0, None)
        grad = A.T @ (A @ candidate - b)
        level = float(grad[support].mean())
        outside = np.setdiff1d(np.arange(n_cols), support)
        if outside.size == 0 or grad[outside].min() >= level - SUPPORT_TOL:
            eta = candidate
            break
        support = np.append(support, outside[int(np.argmin(grad[outside]))])
    else:
        logger.debug("de Finetti active-set refinement did not settle; keeping SLSQP weights")
    return eta / math.fsum(eta)


def _equality_least_squares(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """min ||Ax − b||² s.t. Σx = 1 (KKT 선형계)."""
    k = A.shape[1]
    kkt = np.zeros((k + 1, k + 1))
    kkt[:k, :k] = A.T @ A
    kkt[:k, k] = 1.0
    kkt[k, :k] = 1.0
    rhs = np.concatenate([A.T @ b, [1.0]])
    return np.linalg.lstsq(kkt, rhs, rcond=None)[0][:k]


def definetti_extract(
    P: Mixture,
    candidates: Sequence[RelaxedKernel] | str = "grid",
    *,
    pitch: float = 1 / 16,
    budget: int = DEFAULT_DF_BUDGET,
    tol: float = 1e-14,
) -> DeFinettiFit:
    """P ≈ Σ_z η(z) (kernel_z)^{⊗m} 를 결정적 프로파일 분포 위에서 심플렉스 제약 최소제곱으로 적합.

    The weights solve the least-squares problem on the probability simplex
    exactly; both residuals are computed for them.
    """
    if isinstance(candidates, str):
        if candidates != "grid":
            raise PolicyError(f"unknown candidate set '{candidates}'")
        check_budget(
            "de Finetti grid",
            len(simplex_grid(P.kernel_shape[2], pitch)) ** (P.kernel_shape[0] * P.kernel_shape[1]),
            budget,
            "a coarser pitch",
        )
        kernels = kernel_grid(P.kernel_shape, pitch)
    else:
        kernels = list(candidates)
    if not kernels:
        raise PolicyError("de Finetti extraction needs at least one candidate kernel")
    if any(k.shape != P.kernel_shape for k in kernels):
        raise PolicyError("candidate kernels must match the mixture's spaces")

    m = P.n_dms
    maps = _map_table(P.kernel_shape, budget)
    check_budget("de Finetti profile law", len(maps) ** m * len(kernels), budget * 10)
    target = deterministic_law(P, budget)
    columns = []
    for k in kernels:
        d = _decompose(k, maps)
        columns.append(reduce(np.kron, [d] * m))
    A = np.column_stack(columns)

    eta = _simplex_least_squares(A, target, tol)
    diff = A @ eta - target
    fit = DeFinettiFit(
        weights=tuple(float(x) for x in eta),
        kernels=tuple(kernels),
        residual=float(np.linalg.norm(diff)),
        residual_tv=0.5 * float(np.abs(diff).sum()),
    )
    logger.debug(
        "de Finetti fit: m=%d, %d candidates, residual=%.3e", m, len(kernels), fit.residual
    )
    return fit


# ── 태그 검증 ──


def check_tag(P: Mixture, tol: float = 1e-9) -> bool:
    """태그가 주장하는 구조를 P의 분포가 실제로 갖는지."""
    tag = P.tag
    if tag is MixtureTag.GENERAL:
        return True
    if tag is MixtureTag.EX:
        return is_exchangeable(P, tol)
    if tag is MixtureTag.DIRAC:
        law = {p: w for p, w in P.law().items() if w > tol}
        return len(law) == 1 and next(iter(law)).is_deterministic
    if tag in (MixtureTag.PR, MixtureTag.PR_SYM):
        marginals = [P.marginal(i) for i in range(P.n_dms)]
        laws = [KernelLaw(tuple((w, k) for k, w in mg.items())) for mg in marginals]
        product = _merge(_expand_product(laws, 1.0))
        if total_variation(product, P.law()) > tol:
            return False
        if tag is MixtureTag.PR_SYM:
            return all(total_variation(marginals[0], mg) <= tol for mg in marginals[1:])
        return True
    layout = P.common_randomness
    if layout is None:
        return False
    expanded: list[tuple[float, PolicyProfile]] = []
    for e, row in zip(layout.eta, layout.factors):
        expanded.extend(_expand_product(list(row), e))
    if total_variation(_merge(expanded), P.law()) > tol:
        return False
    return layout.symmetric if tag is MixtureTag.CO_SYM else True


# ── 무작위 생성 ──


def random_kernel(
    rng: np.random.Generator, shape: tuple[int, int, int], deterministic: bool = False
) -> RelaxedKernel:
    horizon, n_obs, n_actions = shape
    if deterministic:
        return RelaxedKernel(np.eye(n_actions)[rng.integers(0, n_actions, size=(horizon, n_obs))])
    return RelaxedKernel(rng.dirichlet(np.ones(n_actions), size=(horizon, n_obs)))


def random_exchangeable_mixture(
    rng: np.random.Generator,
    n_dms: int,
    *,
    shape: tuple[int, int, int] = (1, 1, 2),
    max_profiles: int = 3,
    pool_size: int = 3,
    deterministic: bool = True,
) -> Mixture:
    """무작위 프로파일 혼합을 대칭화. 커널은 작은 pool에서 뽑아 중복이 생기게 한다."""
    pool = [random_kernel(rng, shape, deterministic) for _ in range(pool_size)]
    n_profiles = int(rng.integers(1, max_profiles + 1))
    weights = rng.dirichlet(np.ones(n_profiles))
    atoms = []
    for w in weights:
        picks = rng.integers(0, len(pool), size=n_dms)
        atoms.append((float(w), PolicyProfile(tuple(pool[i] for i in picks))))
    fixed = _fix_weight_sum(atoms)
    return symmetrize(Mixture.general(fixed))


def _fix_weight_sum(atoms: list[tuple[float, Any]]) -> list[tuple[float, Any]]:
    total = math.fsum(w for w, _ in atoms)
    return [(w / total, p) for w, p in atoms]
