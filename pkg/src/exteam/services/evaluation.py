"""기대 팀 비용 평가: 정적/동적, 정확 열거/Monte Carlo, static reduction(중요도 가중)."""

from __future__ import annotations

import itertools
import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass
from functools import reduce
from typing import Any

import numpy as np

from exteam.config import AppConfig
from exteam.exceptions import ModelError, PolicyError
from exteam.infra.budget import check_budget
from exteam.infra.parallel import map_chunks
from exteam.infra.simplex import total_variation
from exteam.models import CostEstimate, EmpiricalMeasure
from exteam.services.policy_space import Mixture, PolicyProfile
from exteam.services.team_model import (
    DENSITY_TOL,
    DynamicTeam,
    FiniteSpace,
    ReductionData,
    StaticTeam,
    TableCost,
)

logger = logging.getLogger(__name__)

PolicyLike = Mixture | PolicyProfile


def _as_mixture(policy: PolicyLike) -> Mixture:
    if isinstance(policy, PolicyProfile):
        return Mixture.dirac(policy)
    if isinstance(policy, Mixture):
        return policy
    raise PolicyError(f"expected a Mixture or PolicyProfile, got {type(policy).__name__}")


def _check_fits(team: StaticTeam | DynamicTeam, P: Mixture) -> None:
    horizon = team.horizon if isinstance(team, DynamicTeam) else 1
    expected = (horizon, team.obs.size, team.actions.size)
    if P.n_dms != team.num_dms:
        raise PolicyError(f"policy covers {P.n_dms} DMs but the team has {team.num_dms}")
    if P.kernel_shape != expected:
        raise PolicyError(f"policy kernels have shape {P.kernel_shape}, team needs {expected}")


# ── 정적: 정확 열거 ──


def static_enumeration_terms(team: StaticTeam) -> int:
    n, k = team.num_dms, team.actions.size
    if isinstance(team.cost, TableCost):
        return team.omega0.size * (n * team.obs.size * k + k**n)
    return team.omega0.size * n * math.comb(n + k - 1, k - 1) * k


def static_profile_cost(team: StaticTeam, kernels: Sequence[np.ndarray]) -> float:
    """프로파일 하나의 정확한 기대 비용. kernels[i]는 (|Y|,|U|) 또는 (1,|Y|,|U|).

    Each DM's observation is summed out first (r_i = μ̂_ω · γ_i); mean-field
    costs then only need the law of the action-count vector. No validation,
    so callers may pass points just outside the simplex.
    """
    rows = [np.asarray(k, dtype=float).reshape(team.obs.size, team.actions.size) for k in kernels]
    total = 0.0
    for w in range(team.omega0.size):
        prior = team.prior[w]
        if prior == 0:
            continue
        r = [team.obs_kernel[w] @ k for k in rows]
        if isinstance(team.cost, TableCost):
            joint = reduce(np.multiply.outer, r)
            total += prior * float(np.sum(joint * team.cost.table[w]))
            continue
        dist: dict[tuple[int, ...], float] = {(0,) * team.actions.size: 1.0}
        for ri in r:
            nxt: dict[tuple[int, ...], float] = {}
            for counts, p in dist.items():
                for a, q in enumerate(ri):
                    if q == 0:
                        continue
                    c = counts[:a] + (counts[a] + 1,) + counts[a + 1 :]
                    nxt[c] = nxt.get(c, 0.0) + p * q
            dist = nxt
        total += prior * math.fsum(p * team.count_cost(w, c) for c, p in dist.items())
    return total


def expected_cost_static_exact(
    team: StaticTeam,
    policy: PolicyLike,
    *,
    budget: int | None = None,
    config: AppConfig | None = None,
) -> CostEstimate:
    """Σ_atoms w · E[cost | profile]. 관측 sum-out 후 행동 개수 convolution."""
    P = _as_mixture(policy)
    _check_fits(team, P)
    budget = budget if budget is not None else (config or AppConfig()).enumeration_budget
    terms = len(P.atoms) * static_enumeration_terms(team)
    check_budget("exact static evaluation", terms, budget, "--mc")
    value = math.fsum(w * static_profile_cost(team, [k.rows for k in p]) for w, p in P.atoms)
    logger.debug("Static exact: %d atoms -> %.12g", len(P.atoms), value)
    return CostEstimate(value=value, std_error=0.0, exact=True, samples=0)


# ── Monte Carlo 공통 ──


def _chunk_sizes(n_samples: int, chunk_size: int) -> list[int]:
    if n_samples < 1:
        raise ModelError(f"n_samples must be positive, got {n_samples}")
    full, rest = divmod(n_samples, chunk_size)
    return [chunk_size] * full + ([rest] if rest else [])


def _inverse_cdf(u: np.ndarray, cdf: np.ndarray) -> np.ndarray:
    """u[...]에 대해 cdf[..., k]로 범주 인덱스 (side='right', 마지막 범주로 clip)."""
    return np.minimum((cdf <= u[..., None]).sum(axis=-1), cdf.shape[-1] - 1)


def _draw(rng: np.random.Generator, cdf: np.ndarray) -> int:
    return min(int(np.searchsorted(cdf, rng.random(), side="right")), len(cdf) - 1)


@dataclass(frozen=True)
class _ChunkStats:
    n: int
    mean: float
    m2: float

    @classmethod
    def of(cls, values: np.ndarray) -> _ChunkStats:
        mean = float(values.mean())
        return cls(len(values), mean, float(((values - mean) ** 2).sum()))


def _combine(stats: list[_ChunkStats], seed: int) -> CostEstimate:
    """chunk 순서대로 병합 (Chan et al. 병렬 분산)."""
    n, mean, m2 = 0, 0.0, 0.0
    for s in stats:
        total = n + s.n
        delta = s.mean - mean
        mean = mean + delta * s.n / total
        m2 = m2 + s.m2 + delta * delta * n * s.n / total
        n = total
    if not math.isfinite(mean):
        raise ModelError("Monte Carlo estimate is not finite")
    std_error = math.sqrt(m2 / (n - 1) / n) if n > 1 else 0.0
    return CostEstimate(value=mean, std_error=std_error, exact=False, samples=n, seed=seed)


def _resolve_parallel(
    config: AppConfig | None, chunk_size: int | None, threads: int | None
) -> tuple[int, int]:
    cfg = config or AppConfig()
    return (chunk_size or cfg.chunk_size, threads or cfg.threads)


# ── 정적: Monte Carlo ──


def expected_cost_static_mc(
    team: StaticTeam,
    policy: PolicyLike,
    n_samples: int,
    seed: int,
    *,
    chunk_size: int | None = None,
    threads: int | None = None,
    config: AppConfig | None = None,
) -> CostEstimate:
    """표본 순서 (atom, ω₀, DM별 관측, DM별 행동). chunk마다 SeedSequence 자식 rng."""
    P = _as_mixture(policy)
    _check_fits(team, P)
    chunk_size, threads = _resolve_parallel(config, chunk_size, threads)
    sizes = _chunk_sizes(n_samples, chunk_size)
    children = np.random.SeedSequence(seed).spawn(len(sizes))

    n = team.num_dms
    atom_cdf = np.cumsum([w for w, _ in P.atoms])
    prior_cdf = np.cumsum(team.prior)
    obs_cdf = np.cumsum(team.obs_kernel, axis=1)
    kernel_cdf = np.cumsum(
        np.stack([np.stack([k.rows[0] for k in p]) for _, p in P.atoms]), axis=-1
    )  # (A, N, |Y|, |U|)
    dm = np.arange(n)[None, :]

    def run(index: int, chunk: Sequence[int]) -> _ChunkStats:
        size = chunk[0]
        rng = np.random.default_rng(children[index])
        atoms = _inverse_cdf(rng.random(size), atom_cdf)
        omegas = _inverse_cdf(rng.random(size), prior_cdf)
        ys = _inverse_cdf(rng.random((size, n)), obs_cdf[omegas][:, None, :])
        us = _inverse_cdf(rng.random((size, n)), kernel_cdf[atoms[:, None], dm, ys])
        return _ChunkStats.of(_joint_costs(team, omegas, us))

    estimate = _combine(map_chunks(run, sizes, 1, threads), seed)
    logger.debug("Static MC: n=%d seed=%d -> %.6g ± %.2g", n_samples, seed, estimate.value,
                 estimate.std_error)
    return estimate


def _joint_costs(team: StaticTeam, omegas: np.ndarray, us: np.ndarray) -> np.ndarray:
    if isinstance(team.cost, TableCost):
        return team.cost.table[(omegas, *us.T)]
    counts = np.stack([(us == a).sum(axis=1) for a in range(team.actions.size)], axis=1)
    keys = np.column_stack([omegas, counts])
    uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
    values = np.array([team.count_cost(int(row[0]), tuple(int(c) for c in row[1:])) for row in uniq])
    return values[inverse.reshape(-1)]


# ── 동적: 정확 열거 ──


def _as_dynamic(team: StaticTeam | DynamicTeam) -> DynamicTeam:
    return DynamicTeam.from_static(team) if isinstance(team, StaticTeam) else team


def dynamic_enumeration_terms(team: DynamicTeam, atoms: int) -> int:
    n = team.num_dms
    n_init = max(int(np.count_nonzero(row)) for row in team.init_kernel)
    n_noise = int(np.count_nonzero(team.dyn_noise_probs))
    per_stage = team.actions.size**n
    tree = n_init**n * per_stage * (per_stage * n_noise**n) ** (team.horizon - 1)
    return atoms * team.omega0.size * tree * n


def _obs_law(
    team: DynamicTeam,
    reduction: ReductionData | None,
    t: int,
    omega: str,
    x_hist: tuple[str, ...],
    u_hist: tuple[str, ...],
    weight_guard: float,
) -> np.ndarray:
    if reduction is None:
        return team.observation_law(t, x_hist, u_hist)
    psi = _checked_weights(team, reduction, t, omega, x_hist, u_hist, weight_guard)
    return reduction.tau * psi


def _checked_weights(
    team: DynamicTeam,
    reduction: ReductionData,
    t: int,
    omega: str,
    x_hist: tuple[str, ...],
    u_hist: tuple[str, ...],
    weight_guard: float,
) -> np.ndarray:
    psi = reduction.weights(team.obs, t, omega, x_hist, u_hist)
    if np.any(psi > weight_guard):
        raise ModelError(
            f"likelihood ratio {float(psi.max()):.3g} exceeds guard {weight_guard:g}; "
            "the observation grid is too coarse"
        )
    if np.any(psi < 0) or abs(float(psi @ reduction.tau) - 1.0) > DENSITY_TOL:
        raise ModelError(f"reduction weights are not a density at t={t}, history={x_hist}")
    return psi


def dynamic_profile_cost(
    team: DynamicTeam,
    kernels: Sequence[np.ndarray],
    reduction: ReductionData | None = None,
    weight_guard: float = 1e6,
) -> float:
    """프로파일 하나의 정확한 기대 비용: 결합 히스토리 분포를 앞으로 전파.

    Each DM's observation only feeds its action, so it is summed out per DM
    (with τ·ψ in place of ν when a reduction is given).
    """
    n = team.num_dms
    xs_val = dict(zip(team.states.labels, team.states.values))  # type: ignore[arg-type]
    us_val = team.actions.values
    u_labels = team.actions.labels
    rows = [np.asarray(k, dtype=float).reshape(team.horizon, team.obs.size, -1) for k in kernels]
    noise = [(lab, p) for lab, p in zip(team.dyn_noise.labels, team.dyn_noise_probs) if p > 0]

    total = 0.0
    for w, omega in enumerate(team.omega0.labels):
        if team.prior[w] == 0:
            continue
        init = [(x, p) for x, p in zip(team.states.labels, team.init_kernel[w]) if p > 0]
        frontier: dict[tuple, float] = {}
        for combo in itertools.product(init, repeat=n):
            hist = tuple(((x,), ()) for x, _ in combo)
            frontier[hist] = frontier.get(hist, 0.0) + math.prod(p for _, p in combo)

        cost = 0.0
        for t in range(team.horizon):
            nxt: dict[tuple, float] = {}
            for hist, p_hist in frontier.items():
                laws = []
                for i, (xh, uh) in enumerate(hist):
                    law_y = _obs_law(team, reduction, t, omega, xh, uh, weight_guard)
                    laws.append(law_y @ rows[i][t])
                xbar = sum(xs_val[xh[-1]] for xh, _ in hist) / n
                supports = [[(a, q) for a, q in enumerate(law) if q != 0] for law in laws]
                for joint in itertools.product(*supports):
                    p_u = p_hist * math.prod(q for _, q in joint)
                    ubar = sum(us_val[a] for a, _ in joint) / n  # type: ignore[index]
                    stage = sum(
                        team.stage_cost_checked(
                            omega, xs_val[xh[-1]], us_val[a], ubar, xbar  # type: ignore[index]
                        )
                        for (xh, _), (a, _) in zip(hist, joint)
                    )
                    cost += p_u * stage / n
                    if t == team.horizon - 1:
                        continue
                    f = team.dynamics[t]
                    for noise_combo in itertools.product(noise, repeat=n):
                        p_next = p_u * math.prod(q for _, q in noise_combo)
                        new_hist = tuple(
                            (
                                xh + (f(xh[-1], u_labels[a], xbar, ubar, v),),
                                uh + (u_labels[a],),
                            )
                            for (xh, uh), (a, _), (v, _) in zip(hist, joint, noise_combo)
                        )
                        nxt[new_hist] = nxt.get(new_hist, 0.0) + p_next
            frontier = nxt
        total += team.prior[w] * cost
    return total


def _dynamic_exact(
    team: DynamicTeam,
    P: Mixture,
    reduction: ReductionData | None,
    budget: int,
    weight_guard: float,
) -> CostEstimate:
    terms = dynamic_enumeration_terms(team, len(P.atoms))
    check_budget("exact dynamic evaluation", terms, budget, "--mc")
    value = math.fsum(
        w * dynamic_profile_cost(team, [k.rows for k in p], reduction, weight_guard)
        for w, p in P.atoms
    )
    return CostEstimate(value=value, std_error=0.0, exact=True, samples=0)


# ── 동적: Monte Carlo ──


def dynamic_mc_estimate(
    team: DynamicTeam,
    P: Mixture,
    n_samples: int,
    seed: int,
    reduction: ReductionData | None,
    chunk_size: int,
    threads: int,
    weight_guard: float,
) -> CostEstimate:
    """표본 순서 (atom, ω₀, DM별 초기 상태, 단계별 [DM별 관측, DM별 행동, DM별 잡음])."""
    n = team.num_dms
    sizes = _chunk_sizes(n_samples, chunk_size)
    children = np.random.SeedSequence(seed).spawn(len(sizes))
    atom_cdf = np.cumsum([w for w, _ in P.atoms])
    prior_cdf = np.cumsum(team.prior)
    init_cdf = np.cumsum(team.init_kernel, axis=1)
    noise_cdf = np.cumsum(team.dyn_noise_probs)
    kernel_cdf = [[np.cumsum(k.rows, axis=-1) for k in p] for _, p in P.atoms]
    xs_val = dict(zip(team.states.labels, team.states.values))  # type: ignore[arg-type]
    us_val = team.actions.values
    x_labels, u_labels = team.states.labels, team.actions.labels
    w_labels = team.dyn_noise.labels
    tau_cdf = np.cumsum(reduction.tau) if reduction is not None else None

    def run(index: int, chunk: Sequence[int]) -> _ChunkStats:
        rng = np.random.default_rng(children[index])
        law_cdf: dict[tuple, np.ndarray] = {}
        psi_cache: dict[tuple, np.ndarray] = {}
        values = np.empty(chunk[0])
        for s in range(chunk[0]):
            a = _draw(rng, atom_cdf)
            w = _draw(rng, prior_cdf)
            omega = team.omega0.labels[w]
            hist = [((x_labels[_draw(rng, init_cdf[w])],), ()) for _ in range(n)]
            weight, cost = 1.0, 0.0
            for t in range(team.horizon):
                ys = []
                for xh, uh in hist:
                    if reduction is None:
                        key = (t, xh, uh)
                        if key not in law_cdf:
                            law_cdf[key] = np.cumsum(team.observation_law(t, xh, uh))
                        ys.append(_draw(rng, law_cdf[key]))
                    else:
                        y = _draw(rng, tau_cdf)  # type: ignore[arg-type]
                        key = (t, omega, xh, uh)
                        if key not in psi_cache:
                            psi_cache[key] = _checked_weights(
                                team, reduction, t, omega, xh, uh, weight_guard
                            )
                        weight *= psi_cache[key][y]
                        ys.append(y)
                acts = [_draw(rng, kernel_cdf[a][i][t, y]) for i, y in enumerate(ys)]
                xbar = sum(xs_val[xh[-1]] for xh, _ in hist) / n
                ubar = sum(us_val[u] for u in acts) / n  # type: ignore[index]
                cost += sum(
                    team.stage_cost_checked(omega, xs_val[xh[-1]], us_val[u], ubar, xbar)  # type: ignore[index]
                    for (xh, _), u in zip(hist, acts)
                ) / n
                if t == team.horizon - 1:
                    continue
                f = team.dynamics[t]
                hist = [
                    (
                        xh + (f(xh[-1], u_labels[u], xbar, ubar, w_labels[_draw(rng, noise_cdf)]),),
                        uh + (u_labels[u],),
                    )
                    for (xh, uh), u in zip(hist, acts)
                ]
            values[s] = weight * cost
        return _ChunkStats.of(values)

    return _combine(map_chunks(run, sizes, 1, threads), seed)


def expected_cost_dynamic(
    team: DynamicTeam | StaticTeam,
    policy: PolicyLike,
    mode: str = "exact",
    n_samples: int | None = None,
    seed: int = 0,
    *,
    budget: int | None = None,
    chunk_size: int | None = None,
    threads: int | None = None,
    config: AppConfig | None = None,
) -> CostEstimate:
    """(1/N) Σ_t Σ_i c(ω₀, x_t^i, u_t^i, ū_t, x̄_t) 의 기대값. mode는 'exact' 또는 'mc'."""
    cfg = config or AppConfig()
    dyn = _as_dynamic(team)
    P = _as_mixture(policy)
    _check_fits(dyn, P)
    if mode == "exact":
        return _dynamic_exact(
            dyn, P, None, budget if budget is not None else cfg.enumeration_budget, cfg.weight_guard
        )
    if mode != "mc":
        raise ModelError(f"mode must be 'exact' or 'mc', got '{mode}'")
    chunk_size, threads = _resolve_parallel(cfg, chunk_size, threads)
    return dynamic_mc_estimate(
        dyn, P, n_samples or cfg.samples, seed, None, chunk_size, threads, cfg.weight_guard
    )


def expected_cost_reduced(
    team: DynamicTeam | StaticTeam,
    policy: PolicyLike,
    n_samples: int | None = None,
    seed: int = 0,
    *,
    mode: str = "mc",
    reduction: ReductionData | None = None,
    budget: int | None = None,
    chunk_size: int | None = None,
    threads: int | None = None,
    config: AppConfig | None = None,
) -> CostEstimate:
    """관측을 τ에서 뽑고 비용에 Π_{i,t} ψ_t^i 를 곱하는 변환된 추정량."""
    cfg = config or AppConfig()
    dyn = _as_dynamic(team)
    data = reduction or dyn.reduction
    if data is None:
        raise ModelError("team has no reduction data; pass reduction= or attach one")
    if data.tau.size != dyn.obs.size:
        raise ModelError("reference measure does not match the observation space")
    P = _as_mixture(policy)
    _check_fits(dyn, P)
    if mode == "exact":
        return _dynamic_exact(
            dyn, P, data, budget if budget is not None else cfg.enumeration_budget, cfg.weight_guard
        )
    if mode != "mc":
        raise ModelError(f"mode must be 'exact' or 'mc', got '{mode}'")
    chunk_size, threads = _resolve_parallel(cfg, chunk_size, threads)
    return dynamic_mc_estimate(
        dyn, P, n_samples or cfg.samples, seed, data, chunk_size, threads, cfg.weight_guard
    )


# ── 경험적 측도 / TV ──


def empirical_action_measure(
    actions: Sequence[Any], space: FiniteSpace | None = None
) -> EmpiricalMeasure:
    """F_n = (1/n) Σ δ_{u_i}. space가 있으면 임베딩 평균도 계산."""
    if len(actions) == 0:
        raise ModelError("empirical measure of an empty sample")
    n = len(actions)
    counts: dict[str, int] = {}
    for a in actions:
        label = space.labels[space.resolve(a)] if space is not None else str(a)
        counts[label] = counts.get(label, 0) + 1
    if space is not None:
        support = tuple(lab for lab in space.labels if lab in counts)
    else:
        support = tuple(counts)
    weights = tuple(counts[lab] / n for lab in support)
    mean = None
    if space is not None and space.values is not None:
        mean = math.fsum(space.value_of(lab) * w for lab, w in zip(support, weights))
    elif all(isinstance(a, (int, float)) for a in actions):
        mean = math.fsum(float(a) for a in actions) / n
    return EmpiricalMeasure(support=support, weights=weights, mean=mean)


def tv_distance(p: Any, q: Any) -> float:
    """½ Σ|p − q|. 배열(같은 라벨 집합) 또는 dict/EmpiricalMeasure."""
    if isinstance(p, EmpiricalMeasure):
        p = p.as_dict()
    if isinstance(q, EmpiricalMeasure):
        q = q.as_dict()
    if isinstance(p, dict) != isinstance(q, dict):
        raise ModelError("tv_distance needs two dicts or two arrays")
    if not isinstance(p, dict) and (np.size(p) == 0 or np.size(q) == 0):
        raise ModelError("tv_distance of an empty law")
    try:
        return total_variation(p, q)
    except ValueError as e:
        raise ModelError(str(e)) from None
