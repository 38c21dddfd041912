import pytest

from exteam.exceptions import (
    BudgetExceededError,
    ConfigError,
    ExTeamError,
    ModelError,
    PolicyError,
    SolverError,
)


class TestExceptionHierarchy:
    def test_all_inherit_from_base(self):
        """모든 커스텀 예외가 ExTeamError의 서브클래스."""
        for cls in (ModelError, ConfigError, PolicyError, BudgetExceededError, SolverError):
            assert issubclass(cls, ExTeamError)

    def test_exit_codes(self):
        """스크립트가 분기할 수 있도록 종류별 종료 코드."""
        assert ModelError.exit_code == 2
        assert ConfigError.exit_code == 2
        assert PolicyError.exit_code == 2
        assert BudgetExceededError.exit_code == 3
        assert SolverError.exit_code == 4

    def test_budget_error_fields(self):
        err = BudgetExceededError("exact static evaluation", 2_000, 1_000, "--mc")
        assert err.terms == 2_000
        assert err.budget == 1_000
        assert err.suggestion == "--mc"

    def test_budget_error_message_format(self):
        err = BudgetExceededError("exact static evaluation", 2_000, 1_000, "--mc")
        assert str(err) == "exact static evaluation: 2,000 terms exceeds budget 1,000 (try --mc)"

    def test_budget_error_without_suggestion(self):
        err = BudgetExceededError("grid", 5, 4)
        assert str(err) == "grid: 5 terms exceeds budget 4"

    def test_catchable_by_base_class(self):
        with pytest.raises(ExTeamError):
            raise SolverError("non-finite")
