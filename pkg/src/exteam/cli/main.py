"""exchangeable-teams CLI (Typer 기반)."""

import logging
from pathlib import Path

import typer
from pydantic import ValidationError

from exteam.config import AppConfig
from exteam.exceptions import ConfigError, ExTeamError
from exteam.logging_config import setup_file_logging, setup_logging
from exteam.models import CostEstimate, OptResult, save_json, write_csv
from exteam.services import documents, optimization, scaling_lab
from exteam.services.evaluation import (
    expected_cost_dynamic,
    expected_cost_reduced,
    expected_cost_static_exact,
    expected_cost_static_mc,
)
from exteam.services.manifest import ManifestRecorder
from exteam.services.team_model import DynamicTeam, ReductionData, StaticTeam, check_assumptions

logger = logging.getLogger(__name__)

app = typer.Typer(help="Exchangeable team decision laboratory")
scaling_app = typer.Typer(help="N-scaling experiments")
app.add_typer(scaling_app, name="scaling")

POLICY_CLASSES = ("dirac", "prsym", "product", "dynamic", "exchangeable")
GAP_METHODS = ("grid", "projected_gradient", "cross_entropy")


@app.callback()
def main(
    ctx: typer.Context,
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Enable DEBUG logging"),
    log_dir: Path = typer.Option(None, "--log-dir", help="Also write DEBUG logs under this dir"),
) -> None:
    """Exchangeable team decision laboratory."""
    level = logging.DEBUG if verbose else logging.INFO
    setup_logging(level)
    if log_dir is not None:
        setup_file_logging(log_dir, ctx.invoked_subcommand)


def _get_config(**overrides) -> AppConfig:
    """CLI 플래그가 주어진 항목만 덮어쓴다. 나머지는 EXTEAM_* / .env."""
    try:
        return AppConfig(**{k: v for k, v in overrides.items() if v is not None})
    except ValidationError as e:
        fields = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or 'config'}: {err['msg']}"
            for err in e.errors()
        )
        _handle_error(ConfigError(f"invalid settings: {fields}"))
        raise


def _handle_error(e: ExTeamError) -> None:
    typer.echo(f"Error: {e}", err=True)
    raise typer.Exit(code=e.exit_code)


def _parse_samples(value: str | None) -> int | None:
    """'1e6', '250000' 같은 표기를 양의 정수로."""
    if value is None:
        return None
    try:
        number = float(value)
    except ValueError:
        raise typer.BadParameter(f"not a number: {value}", param_hint="--samples") from None
    if number < 1 or number != int(number):
        raise typer.BadParameter(f"must be a positive integer, got {value}", param_hint="--samples")
    return int(number)


def _parse_int_list(value: str, flag: str) -> list[int]:
    try:
        items = [int(x) for x in value.split(",") if x.strip()]
    except ValueError:
        raise typer.BadParameter(f"expected comma-separated integers, got '{value}'",
                                 param_hint=flag) from None
    if not items:
        raise typer.BadParameter("list is empty", param_hint=flag)
    return items


def _finish(recorder: ManifestRecorder, outputs: list[Path]) -> None:
    for path in outputs:
        recorder.add_output(path)
    recorder.write()


# ── evaluate ──


def _evaluate(team, policy, mode: str, samples: int | None, seed: int,
              cfg: AppConfig) -> CostEstimate:
    n = samples or cfg.samples
    if mode == "reduced":
        dyn = team if isinstance(team, DynamicTeam) else DynamicTeam.from_static(team)
        data = dyn.reduction or ReductionData.from_team(dyn)
        return expected_cost_reduced(dyn, policy, n, seed, reduction=data, config=cfg)
    if isinstance(team, StaticTeam):
        if mode == "exact":
            return expected_cost_static_exact(team, policy, config=cfg)
        return expected_cost_static_mc(team, policy, n, seed, config=cfg)
    return expected_cost_dynamic(team, policy, mode, n, seed, config=cfg)


@app.command()
def evaluate(
    config_path: Path = typer.Argument(help="Problem document (JSON)"),
    policy_path: Path = typer.Argument(help="Policy document (JSON)"),
    exact: bool = typer.Option(False, "--exact", help="Exact enumeration (default)"),
    mc: bool = typer.Option(False, "--mc", help="Monte Carlo estimate"),
    reduced: bool = typer.Option(False, "--reduced", help="Static-reduction Monte Carlo"),
    samples: str = typer.Option(None, "--samples", help="Monte Carlo samples, e.g. 1e6"),
    seed: int = typer.Option(None, "--seed", help="Random seed (default: config)"),
    chunk_size: int = typer.Option(None, "--chunk-size", help="Samples per chunk"),
    threads: int = typer.Option(None, "--threads", "-t", help="Worker threads"),
    out: Path = typer.Option(None, "--out", "-o", help="Output directory"),
) -> None:
    """Expected cost of a policy on a team problem."""
    if exact + mc + reduced > 1:
        raise typer.BadParameter("choose one of --exact, --mc, --reduced")
    mode = "mc" if mc else "reduced" if reduced else "exact"
    n_samples = _parse_samples(samples)
    cfg = _get_config(seed=seed, chunk_size=chunk_size, threads=threads, output_dir=out)
    recorder = ManifestRecorder("evaluate", cfg, {"mode": mode, "samples": n_samples})
    try:
        team = documents.load_problem(config_path)
        policy = documents.load_mixture(policy_path, team)
        recorder.add_input(config_path)
        recorder.add_input(policy_path)
        with recorder.timed("evaluate"):
            estimate = _evaluate(team, policy, mode, n_samples, cfg.seed, cfg)
        path = write_csv(cfg.estimate_path, list(CostEstimate.CSV_HEADER),
                         [estimate.to_csv_row()])
        _finish(recorder, [path])
    except ExTeamError as e:
        _handle_error(e)
        return

    typer.echo(",".join(CostEstimate.CSV_HEADER))
    typer.echo(",".join(estimate.to_csv_row()))


# ── optimize ──


def _optimize(team, policy_class: str, method: str, restarts, pitch, population, elites,
              iterations, cfg: AppConfig) -> OptResult:
    if policy_class == "dirac":
        return optimization.brute_force_dirac(team, config=cfg)
    if policy_class == "prsym":
        return optimization.optimize_symmetric_kernel(
            team, method, restarts, cfg.seed, pitch=pitch, config=cfg
        )
    if policy_class == "product":
        return optimization.optimize_product_grid(team, pitch or 0.25, config=cfg)
    if policy_class == "dynamic":
        dyn = team if isinstance(team, DynamicTeam) else DynamicTeam.from_static(team)
        return optimization.optimize_symmetric_dynamic(
            dyn, population, elites, iterations, cfg.seed, config=cfg
        )
    return optimization.exchangeable_optimum(team, config=cfg)


@app.command()
def optimize(
    config_path: Path = typer.Argument(help="Problem document (JSON)"),
    policy_class: str = typer.Option(
        "dirac", "--class", "-c", help="dirac, prsym, product, dynamic, or exchangeable"
    ),
    method: str = typer.Option("grid", "--method", "-m", help="prsym: grid or projected_gradient"),
    restarts: int = typer.Option(None, "--restarts", help="Projected-gradient restarts"),
    pitch: float = typer.Option(None, "--pitch", help="Grid pitch"),
    population: int = typer.Option(None, "--population", help="Cross-entropy population"),
    elites: int = typer.Option(None, "--elites", help="Cross-entropy elites"),
    iterations: int = typer.Option(None, "--iterations", help="Cross-entropy iterations"),
    smoothing: float = typer.Option(None, "--smoothing", help="Cross-entropy smoothing in (0, 1]"),
    tol: float = typer.Option(None, "--tol", help="Projected-gradient stopping tolerance"),
    fd_step: float = typer.Option(None, "--fd-step", help="Finite-difference step"),
    chunk_size: int = typer.Option(None, "--chunk-size", help="Candidates per chunk"),
    seed: int = typer.Option(None, "--seed", help="Random seed (default: config)"),
    threads: int = typer.Option(None, "--threads", "-t", help="Worker threads"),
    out: Path = typer.Option(None, "--out", "-o", help="Output directory"),
) -> None:
    """Optimal policy within a policy class."""
    if policy_class not in POLICY_CLASSES:
        raise typer.BadParameter(f"must be one of {', '.join(POLICY_CLASSES)}",
                                 param_hint="--class")
    cfg = _get_config(
        seed=seed, threads=threads, output_dir=out, chunk_size=chunk_size, fd_step=fd_step,
        gradient_tol=tol, ce_smoothing=smoothing,
    )
    recorder = ManifestRecorder("optimize", cfg, {"class": policy_class, "method": method,
                                                  "pitch": pitch})
    try:
        team = documents.load_problem(config_path)
        recorder.add_input(config_path)
        with recorder.timed("optimize"):
            result = _optimize(team, policy_class, method, restarts, pitch, population, elites,
                               iterations, cfg)
        payload = {
            "best_value": result.best_value,
            "method": result.method.value,
            "evaluations": result.evaluations,
            "restarts": result.restarts,
            "trace": result.trace,
            "best_policy": documents.mixture_to_document(result.best_policy, team),
        }
        path = save_json(payload, cfg.opt_result_path)
        _finish(recorder, [path])
    except ExTeamError as e:
        _handle_error(e)
        return

    typer.echo(f"{policy_class}: {result.best_value!r} ({result.evaluations} evaluations)")


# ── scaling ──


def _load_family(config_path: Path, recorder: ManifestRecorder):
    team = documents.load_problem(config_path)
    recorder.add_input(config_path)
    return team, scaling_lab.family_of(team)


def _load_recipe(policy_path: Path | None, team, recorder: ManifestRecorder):
    if policy_path is None:
        raise ConfigError("--policy is required: pass an i.i.d. kernel recipe document")
    recipe = documents.load_mixture(policy_path, team)
    recorder.add_input(policy_path)
    return recipe


@scaling_app.command("gap")
def scaling_gap(
    config_path: Path = typer.Argument(help="Problem document (mean-field family)"),
    n_list: str = typer.Option(..., "--n-list", help="Comma-separated N values, e.g. 2,4,6"),
    method: str = typer.Option("grid", "--method", "-m",
                               help="grid, projected_gradient, or cross_entropy"),
    timings: bool = typer.Option(False, "--timings", help="Add a runtime_s column"),
    tail_window: int = typer.Option(None, "--tail-window",
                                    help="Trailing N values for the eps tail proxy"),
    seed: int = typer.Option(None, "--seed", help="Random seed (default: config)"),
    threads: int = typer.Option(None, "--threads", "-t", help="Worker threads"),
    out: Path = typer.Option(None, "--out", "-o", help="Output directory"),
) -> None:
    """Symmetric-vs-deterministic gap eps_N for each N."""
    if method not in GAP_METHODS:
        raise typer.BadParameter(f"must be one of {', '.join(GAP_METHODS)}", param_hint="--method")
    ns = _parse_int_list(n_list, "--n-list")
    cfg = _get_config(seed=seed, threads=threads, output_dir=out)
    recorder = ManifestRecorder(
        "scaling gap", cfg, {"n_list": ns, "method": method, "tail_window": tail_window}
    )
    try:
        _, family = _load_family(config_path, recorder)
        curve = scaling_lab.gap_curve(family, ns, method=method, tail_window=tail_window,
                                      config=cfg)
        for row in curve.rows:
            recorder.manifest.timings[f"N={row.n}"] = row.runtime_s
        path = curve.to_csv(cfg.gap_curve_path, timings=timings)
        _finish(recorder, [path, save_json(curve, cfg.gap_curve_json_path)])
    except ExTeamError as e:
        _handle_error(e)
        return

    for row in curve.rows:
        typer.echo(f"N={row.n:<4} J_sym={row.j_sym!r} J_det={row.j_det!r} eps={row.eps!r}")
    if curve.tail_proxy is not None:
        typer.echo(f"eps tail proxy: {curve.tail_proxy!r} (last {curve.tail_window})")


@scaling_app.command("limit")
def scaling_limit(
    config_path: Path = typer.Argument(help="Problem document (mean-field family)"),
    n_list: str = typer.Option(..., "--n-list", help="Comma-separated N values"),
    policy_path: Path = typer.Option(None, "--policy", "-p", help="i.i.d. recipe document"),
    tail_window: int = typer.Option(3, "--tail-window", help="Trailing N values for the proxy"),
    out: Path = typer.Option(None, "--out", "-o", help="Output directory"),
) -> None:
    """Large-N cost proxy for an i.i.d. recipe."""
    ns = _parse_int_list(n_list, "--n-list")
    cfg = _get_config(output_dir=out)
    recorder = ManifestRecorder("scaling limit", cfg, {"n_list": ns, "tail_window": tail_window})
    try:
        team, family = _load_family(config_path, recorder)
        recipe = _load_recipe(policy_path, team, recorder)
        with recorder.timed("limit"):
            estimate = scaling_lab.limit_cost_estimate(recipe, family, ns, tail_window, config=cfg)
        path = estimate.to_csv(cfg.limit_path)
        _finish(recorder, [path])
    except ExTeamError as e:
        _handle_error(e)
        return

    typer.echo(f"limit proxy: {estimate.value!r} (monotone={estimate.monotone})")


@scaling_app.command("restriction")
def scaling_restriction(
    config_path: Path = typer.Argument(help="Problem document (mean-field family)"),
    n_list: str = typer.Option(..., "--n-list", help="Comma-separated N values"),
    policy_path: Path = typer.Option(None, "--policy", "-p", help="i.i.d. recipe document"),
    threads: int = typer.Option(None, "--threads", "-t", help="Worker threads"),
    out: Path = typer.Option(None, "--out", "-o", help="Output directory"),
) -> None:
    """Excess cost of restricting an i.i.d. recipe to N DMs."""
    ns = _parse_int_list(n_list, "--n-list")
    cfg = _get_config(threads=threads, output_dir=out)
    recorder = ManifestRecorder("scaling restriction", cfg, {"n_list": ns})
    try:
        team, family = _load_family(config_path, recorder)
        recipe = _load_recipe(policy_path, team, recorder)
        with recorder.timed("restriction"):
            curve = scaling_lab.restriction_suboptimality(recipe, family, ns, config=cfg)
        path = curve.to_csv(cfg.restriction_path)
        _finish(recorder, [path])
    except ExTeamError as e:
        _handle_error(e)
        return

    for row in curve.rows:
        typer.echo(f"N={row.n:<4} excess={row.excess!r}")


@scaling_app.command("df-audit")
def scaling_df_audit(
    instances: int = typer.Option(100, "--instances", help="Random instances per seed"),
    seeds: str = typer.Option("0", "--seeds", help="Comma-separated seeds"),
    max_n: int = typer.Option(6, "--max-n", help="Largest team size"),
    threads: int = typer.Option(None, "--threads", "-t", help="Worker threads"),
    out: Path = typer.Option(None, "--out", "-o", help="Output directory"),
) -> None:
    """Diaconis-Freedman bound audit over random exchangeable mixtures."""
    seed_list = _parse_int_list(seeds, "--seeds")
    cfg = _get_config(threads=threads, output_dir=out)
    recorder = ManifestRecorder(
        "scaling df-audit", cfg, {"instances": instances, "seeds": seed_list, "max_n": max_n}
    )
    try:
        mixtures = [
            m for s in seed_list for m in scaling_lab.random_audit_instances(instances, max_n, s)
        ]
        with recorder.timed("df-audit"):
            report = scaling_lab.df_bound_audit(mixtures, config=cfg)
        path = report.to_csv(cfg.df_audit_path)
        _finish(recorder, [path])
    except ExTeamError as e:
        _handle_error(e)
        return

    summary = report.summary()
    typer.echo(" ".join(f"{k}={v!r}" for k, v in summary.items()))


# ── check ──


@app.command()
def check(
    config_path: Path = typer.Argument(help="Problem document (JSON)"),
    out: Path = typer.Option(None, "--out", "-o", help="Output directory"),
) -> None:
    """Report which structural assumptions a problem satisfies."""
    cfg = _get_config(output_dir=out)
    recorder = ManifestRecorder("check", cfg)
    try:
        team = documents.load_problem(config_path)
        recorder.add_input(config_path)
        report = check_assumptions(team)
        _finish(recorder, [])
    except ExTeamError as e:
        _handle_error(e)
        return

    for c in report.checks:
        status = "ok  " if c.passed else "FAIL"
        typer.echo(f"{status} {c.name}" + (f"  ({c.detail})" if c.detail else ""))
    typer.echo("All assumptions hold." if report.passed else "Some assumptions fail.")
