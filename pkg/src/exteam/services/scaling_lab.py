"""N-스케일링 실험: ε_N 갭 곡선, limsup 근사, Diaconis–Freedman 감사, restriction 곡선."""

from __future__ import annotations

import logging
import time
from collections.abc import Callable, Sequence

import numpy as np

from exteam.config import AppConfig
from exteam.exceptions import ConfigError, PolicyError
from exteam.infra.parallel import map_ordered
from exteam.infra.simplex import total_variation
from exteam.models import (
    DFAuditReport,
    DFAuditRow,
    GapCurve,
    GapRow,
    LimitEstimate,
    MixtureTag,
    RestrictionCurve,
    RestrictionRow,
)
from exteam.services.evaluation import expected_cost_dynamic, expected_cost_static_exact
from exteam.services.optimization import (
    brute_force_dirac,
    clamp_gap,
    optimize_symmetric_dynamic,
    symmetric_gap,
)
from exteam.services.policy_space import (
    Mixture,
    RelaxedKernel,
    df_extend_marginal,
    random_exchangeable_mixture,
    restrict,
)
from exteam.services.team_model import DynamicTeam, StaticTeam

logger = logging.getLogger(__name__)

Team = StaticTeam | DynamicTeam
TeamFamily = Callable[[int], Team]
Recipe = RelaxedKernel | Mixture

MONOTONE_TOL = 1e-15


def check_n_list(n_list: Sequence[int]) -> list[int]:
    """비어 있지 않고 엄격히 증가하는 양의 정수 목록인지."""
    values = [int(n) for n in n_list]
    if not values:
        raise ConfigError("N list is empty")
    if values[0] < 1 or any(b <= a for a, b in zip(values, values[1:])):
        raise ConfigError(f"N list must be positive and strictly increasing, got {values}")
    return values


def family_of(team: Team) -> TeamFamily:
    """평균장 팀 하나에서 N을 바꿔 가며 쓰는 패밀리."""
    return team.with_num_dms


def _recipe_kernel(recipe: Recipe) -> RelaxedKernel:
    if isinstance(recipe, RelaxedKernel):
        return recipe
    if recipe.tag not in (MixtureTag.PR_SYM, MixtureTag.DIRAC) or len(recipe.law()) != 1:
        raise PolicyError("a recipe must be a single kernel or a one-atom i.i.d. mixture")
    kernels = set(recipe.atoms[0][1].per_dm)
    if len(kernels) != 1:
        raise PolicyError("a recipe must use the same kernel for every DM")
    return next(iter(kernels))


def _exact_cost(team: Team, P: Mixture, cfg: AppConfig) -> float:
    if isinstance(team, StaticTeam):
        return expected_cost_static_exact(team, P, config=cfg).value
    return expected_cost_dynamic(team, P, "exact", config=cfg).value


# ── 갭 곡선 ──


def gap_curve(
    team_family: TeamFamily,
    n_list: Sequence[int],
    *,
    method: str = "grid",
    tail_window: int | None = None,
    config: AppConfig | None = None,
    threads: int | None = None,
) -> GapCurve:
    """N마다 (J_sym, J_det, ε_N). method: grid | projected_gradient | cross_entropy.

    tail_window is stored on the curve so its tail proxy max ε_N can be recomputed.
    """
    cfg = config or AppConfig()
    ns = check_n_list(n_list)
    if tail_window is not None and not 1 <= tail_window <= len(ns):
        raise ConfigError(f"tail_window must be in 1..{len(ns)}, got {tail_window}")
    # per-row solvers run single-threaded; rows share the pool
    row_cfg = cfg.model_copy(update={"threads": 1})

    def row(n: int) -> GapRow:
        start = time.perf_counter()
        team = team_family(n)
        if method == "cross_entropy":
            j_sym = optimize_symmetric_dynamic(team, config=row_cfg).best_value
            j_det = brute_force_dirac(team, config=row_cfg).best_value
            eps = clamp_gap(j_sym, j_det, n)
        else:
            eps, j_sym, j_det = symmetric_gap(team, method=method, config=row_cfg)
        elapsed = time.perf_counter() - start
        logger.info("Gap N=%d: J_sym=%.12g J_det=%.12g eps=%.3e (%.2fs)", n, j_sym, j_det,
                    eps, elapsed)
        return GapRow(n, j_sym, j_det, eps, elapsed)

    rows = map_ordered(row, ns, threads or cfg.threads)
    curve = GapCurve(rows=rows, method=method, tail_window=tail_window)
    if tail_window is not None:
        logger.info("Gap tail proxy over last %d N: %.12g", tail_window, curve.tail_proxy)
    return curve


# ── limsup 근사 ──


def limit_cost_estimate(
    recipe: Recipe,
    team_family: TeamFamily,
    n_list: Sequence[int],
    tail_window: int = 3,
    *,
    config: AppConfig | None = None,
) -> LimitEstimate:
    """J_N(recipe^{⊗N})를 정확 평가, limsup proxy = 마지막 tail_window 값의 최대."""
    cfg = config or AppConfig()
    ns = check_n_list(n_list)
    if tail_window < 1 or len(ns) <= tail_window:
        raise ConfigError(f"N list needs more than tail_window={tail_window} entries")
    kernel = _recipe_kernel(recipe)
    values = [_exact_cost(team_family(n), Mixture.iid(kernel, n), cfg) for n in ns]
    diffs = np.diff(values)
    monotone = bool(np.all(diffs <= MONOTONE_TOL) or np.all(diffs >= -MONOTONE_TOL))
    proxy = max(values[-tail_window:])
    logger.info("Limit proxy over N=%s: %.12g (monotone=%s)", ns[-tail_window:], proxy, monotone)
    return LimitEstimate(proxy, ns, values, tail_window, monotone)


# ── Diaconis–Freedman 감사 ──


def df_bound(n: int, m: int) -> float:
    return m * (m - 1) / (2 * n)


def df_bound_audit(
    instances: Sequence[Mixture],
    m_list: Sequence[int] | None = None,
    *,
    config: AppConfig | None = None,
    threads: int | None = None,
) -> DFAuditReport:
    """각 (instance, m ≤ N)에서 TV(restrict, DF 확장) ≤ m(m−1)/(2N) 확인."""
    cfg = config or AppConfig()

    def audit(item: tuple[int, Mixture]) -> list[DFAuditRow]:
        index, P = item
        n = P.n_dms
        ms = [m for m in (m_list or range(1, n + 1)) if 1 <= m <= n]
        out = []
        for m in ms:
            extended = df_extend_marginal(P, m, cfg.df_budget)
            tv = total_variation(restrict(P, m).law(), extended.law())
            out.append(DFAuditRow(index, n, m, tv, df_bound(n, m)))
        return out

    per_instance = map_ordered(audit, list(enumerate(instances)), threads or cfg.threads)
    report = DFAuditReport([row for rows in per_instance for row in rows])
    if report.violations:
        logger.warning("DF audit found %d violations", report.violations)
    logger.info("DF audit: %d rows, min slack %.3e", len(report.rows), report.min_slack)
    return report


def random_audit_instances(count: int, max_n: int = 6, seed: int = 0) -> list[Mixture]:
    """무작위 Dirac 프로파일 혼합을 대칭화한 교환가능 인스턴스 (N ∈ 2..max_n)."""
    if max_n < 2:
        raise ConfigError(f"max_n must be at least 2, got {max_n}")
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        n = int(rng.integers(2, max_n + 1))
        n_actions = int(rng.integers(2, 4))
        out.append(random_exchangeable_mixture(rng, n, shape=(1, 1, n_actions)))
    return out


# ── Restriction 곡선 ──


def restriction_suboptimality(
    recipe: Recipe,
    team_family: TeamFamily,
    n_list: Sequence[int],
    *,
    config: AppConfig | None = None,
    threads: int | None = None,
) -> RestrictionCurve:
    """무한 팀 레시피의 N-restriction 비용과 N-최적 결정적 비용의 차이."""
    cfg = config or AppConfig()
    ns = check_n_list(n_list)
    kernel = _recipe_kernel(recipe)
    row_cfg = cfg.model_copy(update={"threads": 1})

    def row(n: int) -> RestrictionRow:
        team = team_family(n)
        j_restricted = _exact_cost(team, Mixture.iid(kernel, n), row_cfg)
        j_det = brute_force_dirac(team, config=row_cfg).best_value
        return RestrictionRow(n, j_restricted, j_det)

    return RestrictionCurve(map_ordered(row, ns, threads or cfg.threads))
