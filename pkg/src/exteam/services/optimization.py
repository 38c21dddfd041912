"""팀 최적화: 결정적 전수 탐색, 대칭 i.i.d. 커널 탐색, 곱 격자, cross-entropy, 교환가능 최적해."""

from __future__ import annotations

import itertools
import logging
import math
from collections.abc import Callable, Iterator, Sequence
from typing import NamedTuple

import numpy as np

from exteam.config import AppConfig
from exteam.exceptions import BudgetExceededError, ConfigError, SolverError
from exteam.infra.budget import check_budget
from exteam.infra.parallel import map_chunks, map_ordered
from exteam.infra.simplex import project_rows, simplex_grid
from exteam.models import OptMethod, OptResult
from exteam.services.evaluation import (
    dynamic_enumeration_terms,
    dynamic_mc_estimate,
    dynamic_profile_cost,
    expected_cost_dynamic,
    expected_cost_static_exact,
    static_enumeration_terms,
    static_profile_cost,
)
from exteam.services.policy_space import (
    Mixture,
    PolicyProfile,
    RelaxedKernel,
    enumerate_deterministic,
    kernel_grid,
    symmetrize,
)
from exteam.services.team_model import (
    MAX_EXCHANGEABILITY_N,
    DynamicTeam,
    StaticTeam,
    validate_exchangeable_cost,
)

logger = logging.getLogger(__name__)

TIE_TOL = 1e-12
GAP_TOL = 1e-9
MAX_GRADIENT_PARAMS = 64
ARMIJO = 1e-4

Team = StaticTeam | DynamicTeam
ProfileObjective = Callable[[Sequence[np.ndarray]], float]


class SymmetricGap(NamedTuple):
    eps: float
    j_sym: float
    j_det: float


def _kernel_shape(team: Team) -> tuple[int, int, int]:
    horizon = team.horizon if isinstance(team, DynamicTeam) else 1
    return (horizon, team.obs.size, team.actions.size)


def _is_symmetric(team: Team) -> bool:
    """교환가능 비용 + 조건부 i.i.d. 관측이면 순열 궤도당 하나의 프로파일로 충분."""
    if isinstance(team, DynamicTeam) or team.is_mean_field:
        return True
    if team.num_dms > MAX_EXCHANGEABILITY_N:
        return False
    return validate_exchangeable_cost(team, team.num_dms)


def _profile_objective(team: Team, cfg: AppConfig, allow_mc: bool = False) -> ProfileObjective:
    """커널 배열 리스트 → 정확한 기대 비용 (동적 팀은 예산 초과 시 CRN MC로 대체)."""
    if isinstance(team, StaticTeam):
        terms = static_enumeration_terms(team)
        check_budget("exact static evaluation", terms, cfg.enumeration_budget)

        def static_fn(kernels: Sequence[np.ndarray]) -> float:
            return _finite(static_profile_cost(team, kernels))

        return static_fn

    terms = dynamic_enumeration_terms(team, 1)
    if terms <= cfg.enumeration_budget:

        def dynamic_fn(kernels: Sequence[np.ndarray]) -> float:
            return _finite(dynamic_profile_cost(team, kernels, None, cfg.weight_guard))

        return dynamic_fn
    if not allow_mc:
        raise BudgetExceededError(
            "exact dynamic evaluation", terms, cfg.enumeration_budget, "--class dynamic"
        )
    logger.info("Dynamic objective uses Monte Carlo (%d samples, seed %d)", cfg.ce_samples,
                cfg.seed)

    def mc_fn(kernels: Sequence[np.ndarray]) -> float:
        P = Mixture.dirac(PolicyProfile(tuple(RelaxedKernel(k) for k in kernels)))
        est = dynamic_mc_estimate(
            team, P, cfg.ce_samples, cfg.seed, None, cfg.chunk_size, 1, cfg.weight_guard
        )
        return _finite(est.value)

    return mc_fn


def _finite(value: float) -> float:
    if not math.isfinite(value):
        raise SolverError(f"objective evaluated to {value}")
    return value


def _argmin_in_order(
    candidates: Sequence, evaluate: Callable[[object], float], chunk_size: int, threads: int
) -> tuple[float, object, int]:
    """사전식 순서에서 TIE_TOL 이상 엄격히 좋아질 때만 갱신. 반환 (값, 후보, 평가 수)."""

    def run(_index: int, chunk: Sequence) -> tuple[float, object]:
        best_value, best = math.inf, None
        for c in chunk:
            v = evaluate(c)
            if v < best_value - TIE_TOL:
                best_value, best = v, c
        return best_value, best

    best_value, best = math.inf, None
    for value, cand in map_chunks(run, candidates, chunk_size, threads):
        if value < best_value - TIE_TOL:
            best_value, best = value, cand
    return best_value, best, len(candidates)


def _profile_indices(n_items: int, n_dms: int, symmetric: bool) -> Iterator[tuple[int, ...]]:
    if symmetric:
        return itertools.combinations_with_replacement(range(n_items), n_dms)
    return itertools.product(range(n_items), repeat=n_dms)


def _profile_count(n_items: int, n_dms: int, symmetric: bool) -> int:
    return math.comb(n_items + n_dms - 1, n_dms) if symmetric else n_items**n_dms


def _search_profiles(
    team: Team,
    kernels: list[RelaxedKernel],
    cfg: AppConfig,
    what: str,
    exploit_symmetry: bool = True,
) -> tuple[float, PolicyProfile, int]:
    symmetric = exploit_symmetry and _is_symmetric(team)
    count = _profile_count(len(kernels), team.num_dms, symmetric)
    check_budget(what, count, cfg.profile_budget, "optimize --class prsym")
    objective = _profile_objective(team, cfg)
    rows = [k.rows for k in kernels]
    batch = cfg.chunk_size * max(cfg.threads, 1) * 4

    best_value, best, evaluations = math.inf, None, 0
    indices = _profile_indices(len(kernels), team.num_dms, symmetric)
    while True:
        block = list(itertools.islice(indices, batch))
        if not block:
            break
        value, cand, n = _argmin_in_order(
            block, lambda idx: objective([rows[i] for i in idx]), cfg.chunk_size, cfg.threads
        )
        evaluations += n
        if value < best_value - TIE_TOL:
            best_value, best = value, cand
    logger.info("%s: %d profiles (%s), best %.12g", what, evaluations,
                "orbits" if symmetric else "full", best_value)
    return best_value, PolicyProfile(tuple(kernels[i] for i in best)), evaluations  # type: ignore[union-attr]


# ── 결정적 전수 탐색 ──


def brute_force_dirac(
    team: Team, *, config: AppConfig | None = None, exploit_symmetry: bool = True
) -> OptResult:
    """모든 결정적 프로파일 중 최소 비용 (동률이면 사전식으로 첫 번째)."""
    cfg = config or AppConfig()
    horizon, n_obs, n_actions = _kernel_shape(team)
    check_budget("deterministic policies", n_actions ** (horizon * n_obs), cfg.profile_budget)
    kernels = [p.to_kernel(n_actions) for p in enumerate_deterministic(horizon, n_obs, n_actions)]
    value, profile, evaluations = _search_profiles(
        team, kernels, cfg, "brute force profiles", exploit_symmetry
    )
    return OptResult(value, Mixture.dirac(profile), OptMethod.BRUTE_FORCE, evaluations)


# ── 대칭 i.i.d. 커널 ──


def _symmetric_objective(team: Team, cfg: AppConfig, allow_mc: bool = False):
    objective = _profile_objective(team, cfg, allow_mc)
    n = team.num_dms

    def f(rows: np.ndarray) -> float:
        return objective([rows] * n)

    return f


def optimize_symmetric_kernel(
    team: Team,
    method: str = "grid",
    restarts: int | None = None,
    seed: int | None = None,
    tol: float | None = None,
    *,
    pitch: float | None = None,
    config: AppConfig | None = None,
) -> OptResult:
    """min_Π J(Π^{⊗N}). grid: 행 격자 전수, projected_gradient: 다중 시작 사영 경사."""
    if method not in ("grid", "projected_gradient"):
        raise ConfigError(f"unknown method '{method}' (grid | projected_gradient)")
    cfg = config or AppConfig()
    shape = _kernel_shape(team)
    f = _symmetric_objective(team, cfg)

    if shape[2] == 1:
        rows = np.ones(shape)
        return OptResult(f(rows), Mixture.iid(RelaxedKernel(rows), team.num_dms),
                         OptMethod(method), 1)

    if method == "grid":
        grid_pitch = pitch if pitch is not None else cfg.kernel_grid_pitch
        row_points = simplex_grid(shape[2], grid_pitch)
        count = len(row_points) ** (shape[0] * shape[1])
        check_budget("symmetric kernel grid", count, cfg.profile_budget, "a coarser --pitch")
        candidates = list(itertools.product(range(len(row_points)), repeat=shape[0] * shape[1]))

        def evaluate(combo) -> float:
            return f(np.array([row_points[i] for i in combo]).reshape(shape))

        value, best, evaluations = _argmin_in_order(
            candidates, evaluate, cfg.chunk_size, cfg.threads
        )
        rows = np.array([row_points[i] for i in best]).reshape(shape)  # type: ignore[union-attr]
        logger.info("Symmetric grid (pitch %g): %d kernels, best %.12g", grid_pitch, count, value)
        return OptResult(value, Mixture.iid(RelaxedKernel(rows), team.num_dms), OptMethod.GRID,
                         evaluations)

    n_params = shape[0] * shape[1] * (shape[2] - 1)
    if n_params > MAX_GRADIENT_PARAMS:
        raise BudgetExceededError("projected gradient parameters", n_params, MAX_GRADIENT_PARAMS,
                                  "--method grid with a coarse pitch")
    restarts = restarts if restarts is not None else cfg.restarts
    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    starts = [np.full(shape, 1.0 / shape[2])]
    starts += [rng.dirichlet(np.ones(shape[2]), size=shape[:2]) for _ in range(restarts - 1)]
    tol = tol if tol is not None else cfg.gradient_tol

    runs = map_ordered(
        lambda x0: _projected_gradient(f, x0, cfg.fd_step, tol, cfg.gradient_max_iter),
        starts,
        cfg.threads,
    )
    best_value, best_rows = math.inf, None
    evaluations = 0
    for value, rows, evals, converged in runs:
        evaluations += evals
        if not converged:
            logger.info("Projected gradient restart stopped before tolerance %.1e", tol)
        if value < best_value - TIE_TOL:
            best_value, best_rows = value, rows
    kernel = RelaxedKernel(project_rows(best_rows))
    logger.info("Projected gradient: %d restarts, best %.12g", len(starts), best_value)
    return OptResult(best_value, Mixture.iid(kernel, team.num_dms), OptMethod.PROJECTED_GRADIENT,
                     evaluations, restarts=len(starts))


def _fd_gradient(f: Callable[[np.ndarray], float], x: np.ndarray, h: float) -> np.ndarray:
    """중앙 차분. 섭동된 점은 simplex 밖일 수 있다 (목적함수는 다항식 확장)."""
    g = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        e = np.zeros_like(x)
        e[idx] = h
        g[idx] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def _projected_gradient(
    f: Callable[[np.ndarray], float], x0: np.ndarray, h: float, tol: float, max_iter: int
) -> tuple[float, np.ndarray, int, bool]:
    """Armijo backtracking 사영 경사. 정지 조건 ||x − P(x − ∇f)|| < tol."""
    x = project_rows(x0)
    fx = f(x)
    evaluations = 1
    for _ in range(max_iter):
        g = _fd_gradient(f, x, h)
        evaluations += 2 * x.size
        if np.linalg.norm(x - project_rows(x - g)) < tol:
            return fx, x, evaluations, True
        alpha = 1.0
        while True:
            x_new = project_rows(x - alpha * g)
            f_new = f(x_new)
            evaluations += 1
            if f_new <= fx - ARMIJO * float(np.sum((x_new - x) ** 2)) / alpha:
                break
            alpha *= 0.5
            if alpha < 1e-12:
                return fx, x, evaluations, False
        x, fx = x_new, f_new
    return fx, x, evaluations, False


# ── 곱 격자 ──


def optimize_product_grid(
    team: Team, pitch: float = 0.25, *, config: AppConfig | None = None
) -> OptResult:
    """모든 DM이 격자 커널을 (서로 다르게) 고르는 곱 정책 탐색. pitch=1이면 결정적 탐색과 같다."""
    cfg = config or AppConfig()
    shape = _kernel_shape(team)
    row_count = len(simplex_grid(shape[2], pitch))
    check_budget("product grid kernels", row_count ** (shape[0] * shape[1]), cfg.profile_budget)
    kernels = kernel_grid(shape, pitch)
    value, profile, evaluations = _search_profiles(team, kernels, cfg, "product grid profiles")
    return OptResult(value, Mixture.dirac(profile), OptMethod.PRODUCT_GRID, evaluations)


def symmetric_gap(
    team: Team,
    n: int | None = None,
    *,
    method: str = "grid",
    config: AppConfig | None = None,
    **kwargs,
) -> SymmetricGap:
    """ε_N = J*_sym(N) − J*_det(N) ≥ 0."""
    if n is not None and n != team.num_dms:
        team = team.with_num_dms(n)
    j_sym = optimize_symmetric_kernel(team, method, config=config, **kwargs).best_value
    j_det = brute_force_dirac(team, config=config).best_value
    return SymmetricGap(clamp_gap(j_sym, j_det, team.num_dms), j_sym, j_det)


def clamp_gap(j_sym: float, j_det: float, n: int) -> float:
    """-1e-9 미만이면 SolverError, 그 위의 작은 음수는 0으로."""
    eps = j_sym - j_det
    if eps < -GAP_TOL:
        raise SolverError(
            f"symmetric optimum {j_sym:.12g} below deterministic optimum {j_det:.12g} at N={n}"
        )
    return max(eps, 0.0)


# ── Cross-entropy (동적 대칭 정책) ──


def _softmax(theta: np.ndarray) -> np.ndarray:
    z = np.exp(theta - theta.max(axis=-1, keepdims=True))
    return z / z.sum(axis=-1, keepdims=True)


def optimize_symmetric_dynamic(
    team: Team,
    population: int | None = None,
    elites: int | None = None,
    iterations: int | None = None,
    seed: int | None = None,
    smoothing: float | None = None,
    *,
    config: AppConfig | None = None,
) -> OptResult:
    """단계별 공유 커널 위 cross-entropy 탐색 (logit 가우시안, elitism).

    Previous elites stay in the candidate pool, so the elite mean never
    increases. The mean kernel (uniform at the start) is always a candidate.
    """
    cfg = config or AppConfig()
    population = population if population is not None else cfg.ce_population
    elites = elites if elites is not None else cfg.ce_elites
    iterations = iterations if iterations is not None else cfg.ce_iterations
    smoothing = smoothing if smoothing is not None else cfg.ce_smoothing
    if elites < 1 or population < 2 * elites:
        raise ConfigError(f"population ({population}) must be at least 2·elites ({elites})")
    if not 0 < smoothing <= 1:
        raise ConfigError(f"smoothing must be in (0, 1], got {smoothing}")

    dyn = DynamicTeam.from_static(team) if isinstance(team, StaticTeam) else team
    shape = _kernel_shape(dyn)
    n_params = shape[1] * (shape[2] - 1)
    if n_params > MAX_GRADIENT_PARAMS:
        raise BudgetExceededError("cross-entropy parameters per stage", n_params,
                                  MAX_GRADIENT_PARAMS)
    f = _symmetric_objective(dyn, cfg, allow_mc=True)
    rng = np.random.default_rng(cfg.seed if seed is None else seed)

    mu = np.zeros(shape)
    sigma = np.full(shape, cfg.ce_init_std)
    pool_theta: list[np.ndarray] = []
    pool_values: list[float] = []
    trace: list[float] = []
    evaluations = 0
    for it in range(iterations):
        fresh = [mu + sigma * rng.standard_normal(shape) for _ in range(population)]
        if it == 0:
            fresh[0] = mu.copy()
        values = map_ordered(lambda th: f(_softmax(th)), fresh, cfg.threads)
        evaluations += len(fresh)
        thetas = pool_theta + fresh
        scores = pool_values + values
        order = np.argsort(np.asarray(scores), kind="stable")[:elites]
        pool_theta = [thetas[i] for i in order]
        pool_values = [scores[i] for i in order]
        trace.append(float(np.mean(pool_values)))
        elite = np.stack(pool_theta)
        mu = smoothing * elite.mean(axis=0) + (1 - smoothing) * mu
        sigma = smoothing * elite.std(axis=0) + (1 - smoothing) * sigma
        logger.debug("CE iteration %d: best %.6g, elite mean %.6g", it, pool_values[0], trace[-1])

    kernel = RelaxedKernel(_softmax(pool_theta[0]))
    logger.info("Cross-entropy: %d iterations, best %.12g", iterations, pool_values[0])
    return OptResult(pool_values[0], Mixture.iid(kernel, dyn.num_dms), OptMethod.CROSS_ENTROPY,
                     evaluations, trace=trace)


# ── 교환가능 최적해 ──


def exchangeable_optimum(team: Team, *, config: AppConfig | None = None) -> OptResult:
    """결정적 최적 프로파일을 대칭화한 같은 비용의 교환가능 정책."""
    cfg = config or AppConfig()
    det = brute_force_dirac(team, config=cfg)
    sym = symmetrize(det.best_policy, cfg.symmetrize_max_n)
    if isinstance(team, StaticTeam):
        value = expected_cost_static_exact(team, sym, config=cfg).value
    else:
        value = expected_cost_dynamic(team, sym, "exact", config=cfg).value
    return OptResult(value, sym, OptMethod.EXCHANGEABLE, det.evaluations + 1)
