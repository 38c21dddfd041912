import pytest

from exteam.exceptions import ConfigError, PolicyError
from exteam.services.policy_space import KernelLaw, Mixture, PolicyProfile, symmetrize
from exteam.services.scaling_lab import (
    check_n_list,
    df_bound,
    df_bound_audit,
    family_of,
    gap_curve,
    limit_cost_estimate,
    random_audit_instances,
    restriction_suboptimality,
)
from exteam.services.team_model import example_one_team


@pytest.fixture
def family():
    return family_of(example_one_team(2))


def _odd_gap(n: int) -> float:
    return 1 / (4 * n) - (1 / (4 * n * n) if n % 2 else 0.0)


class TestCheckNList:
    def test_valid(self):
        assert check_n_list((1, 2, 5)) == [1, 2, 5]

    def test_empty(self):
        with pytest.raises(ConfigError, match="empty"):
            check_n_list([])

    @pytest.mark.parametrize("ns", [[2, 2], [3, 1], [0, 1]])
    def test_not_increasing_or_nonpositive(self, ns):
        with pytest.raises(ConfigError, match="strictly increasing"):
            check_n_list(ns)


class TestGapCurve:
    def test_example_one(self, family, test_config):
        curve = gap_curve(family, [2, 3, 4, 5], config=test_config)
        assert [r.n for r in curve.rows] == [2, 3, 4, 5]
        for row in curve.rows:
            assert row.j_sym == pytest.approx(1 / (4 * row.n))
            assert row.eps == pytest.approx(_odd_gap(row.n), abs=1e-12)
            assert row.runtime_s >= 0

    def test_even_gap_is_quarter_over_n(self, family, test_config):
        curve = gap_curve(family, [2, 4, 8], config=test_config)
        assert curve.eps == pytest.approx([1 / 8, 1 / 16, 1 / 32])

    def test_single_dm_has_no_gap(self, family, test_config):
        curve = gap_curve(family, [1], config=test_config)
        assert curve.rows[0].eps == pytest.approx(0.0, abs=1e-12)

    def test_rows_do_not_depend_on_threads(self, family, test_config):
        one = gap_curve(family, [2, 3, 4], config=test_config, threads=1)
        many = gap_curve(family, [2, 3, 4], config=test_config, threads=3)
        assert [(r.j_sym, r.j_det, r.eps) for r in one.rows] == [
            (r.j_sym, r.j_det, r.eps) for r in many.rows
        ]

    def test_csv_columns(self, family, test_config, tmp_path):
        curve = gap_curve(family, [2], config=test_config)
        plain = curve.to_csv(tmp_path / "gap.csv").read_text(encoding="utf-8").splitlines()
        timed = curve.to_csv(tmp_path / "gap_t.csv", timings=True).read_text(
            encoding="utf-8"
        ).splitlines()
        assert plain[0] == "N,J_sym,J_det,eps"
        assert plain[1] == "2,0.125,0.0,0.125"
        assert timed[0] == "N,J_sym,J_det,eps,runtime_s"

    def test_empty_n_list(self, family, test_config):
        with pytest.raises(ConfigError):
            gap_curve(family, [], config=test_config)

    def test_tail_window_recorded(self, family, test_config):
        curve = gap_curve(family, [2, 3, 4, 5], tail_window=2, config=test_config)
        assert curve.tail_window == 2
        assert curve.tail_proxy == max(curve.eps[-2:])
        assert curve.tail_proxy == pytest.approx(1 / 16, abs=1e-12)

    @pytest.mark.parametrize("window", [0, 5])
    def test_tail_window_out_of_range(self, family, test_config, window):
        with pytest.raises(ConfigError, match="tail_window"):
            gap_curve(family, [2, 3, 4, 5], tail_window=window, config=test_config)


class TestLimitCostEstimate:
    def test_iid_half(self, family, bernoulli_half, test_config):
        est = limit_cost_estimate(bernoulli_half, family, [1, 2, 4, 8, 16], 3, config=test_config)
        assert est.values == pytest.approx([0.25, 0.125, 0.0625, 0.03125, 0.015625])
        assert est.value == pytest.approx(0.0625)
        assert est.monotone

    def test_recipe_as_iid_mixture(self, family, bernoulli_half, test_config):
        est = limit_cost_estimate(Mixture.iid(bernoulli_half, 2), family, [2, 3], 1,
                                  config=test_config)
        assert est.value == pytest.approx(1 / 12)

    def test_deterministic_recipe_is_constant(self, family, const1, test_config):
        est = limit_cost_estimate(const1, family, [1, 2, 3], 2, config=test_config)
        assert est.values == pytest.approx([0.25] * 3)
        assert est.monotone

    def test_window_too_large(self, family, bernoulli_half, test_config):
        with pytest.raises(ConfigError, match="tail_window"):
            limit_cost_estimate(bernoulli_half, family, [1, 2, 3], 3, config=test_config)

    def test_non_iid_recipe(self, family, const0, const1, test_config):
        with pytest.raises(PolicyError, match="recipe"):
            limit_cost_estimate(Mixture.dirac(PolicyProfile.of(const0, const1)), family, [1, 2], 1,
                                config=test_config)

    def test_csv_marks_tail(self, family, bernoulli_half, test_config, tmp_path):
        est = limit_cost_estimate(bernoulli_half, family, [1, 2, 4], 1, config=test_config)
        lines = est.to_csv(tmp_path / "limit.csv").read_text(encoding="utf-8").splitlines()
        assert lines[0] == "N,J,tail"
        assert lines[1] == "1,0.25,false"
        assert lines[3] == "4,0.0625,true"
        assert lines[4] == "limit,0.0625,true"


class TestDFAudit:
    def test_bound(self):
        assert df_bound(2, 2) == 0.5
        assert df_bound(10, 1) == 0.0

    def test_dirac_pair_attains_bound(self, const0, const1, test_config):
        pair = symmetrize(Mixture.dirac(PolicyProfile.of(const0, const1)))
        report = df_bound_audit([pair], config=test_config)
        assert [(r.m, r.tv) for r in report.rows] == [(1, pytest.approx(0.0)), (2, pytest.approx(0.5))]
        assert report.violations == 0
        assert report.min_slack == pytest.approx(0.0, abs=1e-12)

    def test_iid_pair(self, const0, const1, test_config):
        P = Mixture.iid(KernelLaw(((0.5, const0), (0.5, const1))), 2)
        report = df_bound_audit([P], [2], config=test_config)
        assert report.rows[0].tv == pytest.approx(0.25)
        assert report.rows[0].slack == pytest.approx(0.25)

    def test_random_instances_never_violate(self, test_config):
        instances = random_audit_instances(12, max_n=5, seed=3)
        report = df_bound_audit(instances, config=test_config, threads=2)
        summary = report.summary()
        assert summary["violations"] == 0
        assert summary["instances"] == 12
        assert summary["rows"] == sum(P.n_dms for P in instances)
        assert summary["min_slack"] >= -1e-12

    def test_m_list_is_clipped_to_n(self, const0, const1, test_config):
        pair = symmetrize(Mixture.dirac(PolicyProfile.of(const0, const1)))
        report = df_bound_audit([pair], [1, 5], config=test_config)
        assert [r.m for r in report.rows] == [1]

    def test_instances_reproducible(self):
        a = random_audit_instances(4, seed=9)
        b = random_audit_instances(4, seed=9)
        assert all(x.same_law(y) for x, y in zip(a, b))

    def test_instances_need_two_dms(self):
        with pytest.raises(ConfigError, match="max_n"):
            random_audit_instances(3, max_n=1)


class TestRestriction:
    def test_iid_half(self, family, bernoulli_half, test_config):
        curve = restriction_suboptimality(bernoulli_half, family, [2, 3], config=test_config)
        assert [r.n for r in curve.rows] == [2, 3]
        assert curve.rows[0].j_restricted == pytest.approx(0.125)
        assert curve.rows[0].j_det == pytest.approx(0.0)
        assert curve.rows[1].excess == pytest.approx(1 / 12 - 1 / 36)

    def test_csv(self, family, bernoulli_half, test_config, tmp_path):
        curve = restriction_suboptimality(bernoulli_half, family, [2], config=test_config)
        lines = curve.to_csv(tmp_path / "r.csv").read_text(encoding="utf-8").splitlines()
        assert lines == ["N,J_restricted,J_det,excess", "2,0.125,0.0,0.125"]
