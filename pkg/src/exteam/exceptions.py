"""exteam 예외 계층.

계층 구조:
    ExTeamError
    ├── ModelError           (team_model: 공간/커널/확률벡터 오류)
    ├── ConfigError          (documents: JSON 파싱/검증 실패)
    ├── PolicyError          (policy_space: 순열/혼합/커널 오류)
    ├── BudgetExceededError  (열거 예산 초과)
    └── SolverError          (optimization: 비유한 비용, 음의 gap)

exit_code는 CLI 종료 코드로 그대로 쓰인다.
"""


class ExTeamError(Exception):
    """exteam의 모든 예외의 기반 클래스."""

    exit_code = 1


class ModelError(ExTeamError):
    """팀 모델 구성 요소가 유효하지 않음."""

    exit_code = 2


class ConfigError(ExTeamError):
    """문제/정책 문서 파싱 또는 검증 실패."""

    exit_code = 2


class PolicyError(ExTeamError):
    """정책, 순열, 혼합(mixture) 구성 오류."""

    exit_code = 2


class BudgetExceededError(ExTeamError):
    """열거(enumeration) 항 수가 예산을 넘음. suggestion에 대안 플래그를 담는다."""

    exit_code = 3

    def __init__(self, what: str, terms: int, budget: int, suggestion: str = ""):
        self.what = what
        self.terms = terms
        self.budget = budget
        self.suggestion = suggestion
        msg = f"{what}: {terms:,} terms exceeds budget {budget:,}"
        if suggestion:
            msg += f" (try {suggestion})"
        super().__init__(msg)


class SolverError(ExTeamError):
    """최적화 중 비유한 비용 등 수치적 실패."""

    exit_code = 4
