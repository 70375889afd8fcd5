"""Result records returned by the significance tests."""

from __future__ import annotations

from dataclasses import dataclass

METHODS = ("pdcor", "pearson-partial", "spearman-partial", "cmi")


@dataclass(frozen=True)
class TestResult:
    """Outcome of one conditional-dependence test.

    ``statistic`` is the test statistic (pdcor value, partial-correlation
    t statistic, or CMI in nats).  ``estimate`` carries the underlying
    effect size where it differs from the statistic (the partial correlation
    ``r`` for the analytic tests).  ``n_permutations`` is 0 for analytic tests.
    """

    __test__ = False  # keep pytest from collecting this as a test class

    statistic: float
    p_value: float
    method: str
    n_permutations: int = 0
    seed: int | None = None
    estimate: float | None = None
    exact_fit: bool = False
    n_degenerate: int = 0

    def significant(self, alpha: float) -> bool:
        return self.p_value < alpha
