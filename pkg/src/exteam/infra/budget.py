"""Enumeration budget guard."""

import logging

from exteam.exceptions import BudgetExceededError

logger = logging.getLogger(__name__)


def check_budget(what: str, terms: int, budget: int, suggestion: str = "") -> int:
    """Raise BudgetExceededError when terms > budget. Returns terms for chaining."""
    if terms > budget:
        logger.info("Budget exceeded for %s: %d > %d", what, terms, budget)
        raise BudgetExceededError(what, terms, budget, suggestion)
    logger.debug("Budget ok for %s: %d <= %d", what, terms, budget)
    return terms
