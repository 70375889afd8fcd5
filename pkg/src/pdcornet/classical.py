"""Partial Pearson and partial Spearman correlations with t tests."""

from __future__ import annotations

import math
import sys

import numpy as np
from scipy import special

from .dependence import as_conditioning_set, as_sample
from .errors import DegenerateInputError, InvalidInputError, SampleTooSmallError
from .records import TestResult

KINDS = ("pearson", "spearman")

#: Smallest positive double; reported as the p-value of an exact fit.
MIN_P_VALUE = math.ulp(0.0)
#: |r| within this distance of 1 is treated as an exact fit (rounding residue).
EXACT_FIT_TOL = 1e-12


def rank_transform(x) -> np.ndarray:
    """Ranks ``1..n`` with ties given the average of their ranks."""
    x = as_sample(x)
    order = np.argsort(x, kind="stable")
    sorted_x = x[order]
    ranks = np.empty(x.size)
    # boundaries of runs of equal values in sorted order
    starts = np.flatnonzero(np.r_[True, sorted_x[1:] != sorted_x[:-1]])
    ends = np.r_[starts[1:], x.size]
    avg = (starts + ends + 1) / 2.0
    ranks[order] = np.repeat(avg, ends - starts)
    return ranks


def pearson(x, y) -> float:
    """Sample Pearson correlation."""
    x = as_sample(x, "x")
    y = as_sample(y, "y")
    if x.size != y.size:
        raise InvalidInputError(f"samples have different lengths ({x.size} != {y.size})")
    if x.size < 2:
        raise SampleTooSmallError("pearson needs at least 2 observations")
    xc = x - x.mean()
    yc = y - y.mean()
    sxx = float(xc @ xc)
    syy = float(yc @ yc)
    if sxx == 0.0 or syy == 0.0:
        raise DegenerateInputError("pearson correlation is undefined for a constant sample")
    r = float(xc @ yc) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


def _prepare(x, y, z, kind):
    if kind not in KINDS:
        raise InvalidInputError(f"kind must be one of {KINDS}, got {kind!r}")
    x = as_sample(x, "x")
    y = as_sample(y, "y")
    if x.size != y.size:
        raise InvalidInputError(f"samples have different lengths ({x.size} != {y.size})")
    zs = as_conditioning_set(z, x.size)
    if x.size < len(zs) + 3:
        raise SampleTooSmallError(
            f"partial correlation with {len(zs)} conditioning variables needs "
            f"at least {len(zs) + 3} observations, got {x.size}"
        )
    if kind == "spearman":
        x, y = rank_transform(x), rank_transform(y)
        zs = [rank_transform(v) for v in zs]
    return x, y, zs


def ols_residuals(target: np.ndarray, predictors: list[np.ndarray]) -> np.ndarray:
    """Residuals of ``target`` regressed on an intercept and ``predictors``."""
    n = target.size
    design = np.column_stack([np.ones(n), *predictors]) if predictors else np.ones((n, 1))
    if np.linalg.matrix_rank(design) < design.shape[1]:
        raise DegenerateInputError("design matrix is rank deficient (collinear predictors)")
    coef, *_ = np.linalg.lstsq(design, target, rcond=None)
    return target - design @ coef


def partial_correlation(x, y, z=None, kind: str = "pearson") -> float:
    """Correlation of ``x`` and ``y`` after linearly removing ``z``.

    Computed as the Pearson correlation of least-squares residuals on
    ``{1, z_1, ..., z_k}``.  ``kind="spearman"`` rank-transforms every input
    first.
    """
    x, y, zs = _prepare(x, y, z, kind)
    if not zs:
        return pearson(x, y)
    return pearson(ols_residuals(x, zs), ols_residuals(y, zs))


def partial_correlation_recursive(x, y, z=None, kind: str = "pearson") -> float:
    """Same quantity as :func:`partial_correlation` via the recursive formula
    on the full correlation matrix.  Kept as an independent cross-check."""
    x, y, zs = _prepare(x, y, z, kind)
    cols = [x, y, *zs]
    m = len(cols)
    r = np.eye(m)
    for i in range(m):
        for j in range(i + 1, m):
            r[i, j] = r[j, i] = pearson(cols[i], cols[j])

    def rec(i: int, j: int, cond: tuple[int, ...]) -> float:
        if not cond:
            return r[i, j]
        s, rest = cond[-1], cond[:-1]
        rij, ris, rjs = rec(i, j, rest), rec(i, s, rest), rec(j, s, rest)
        den = math.sqrt((1.0 - ris * ris) * (1.0 - rjs * rjs))
        if den <= 0.0:
            raise DegenerateInputError("conditioning variables are collinear")
        return (rij - ris * rjs) / den

    return rec(0, 1, tuple(range(2, m)))


def t_two_sided_p(t: float, df: float) -> float:
    """Two-sided p-value of a t statistic via the regularized incomplete beta."""
    if math.isinf(t):
        return 0.0
    return float(special.betainc(df / 2.0, 0.5, df / (df + t * t)))


def partial_correlation_test(x, y, z=None, kind: str = "pearson") -> TestResult:
    """t test of a zero partial correlation with ``n - 2 - k`` degrees of freedom."""
    x_, y_, zs = _prepare(x, y, z, kind)
    n, k = x_.size, len(zs)
    # ranks are already applied by _prepare, so compute on the pearson route
    r = partial_correlation(x_, y_, zs, "pearson")
    df = n - 2 - k
    method = f"{kind}-partial"
    if 1.0 - abs(r) <= EXACT_FIT_TOL:
        return TestResult(
            statistic=math.copysign(sys.float_info.max, r),
            p_value=MIN_P_VALUE,
            method=method,
            estimate=r,
            exact_fit=True,
        )
    t = r * math.sqrt(df / (1.0 - r * r))
    p = max(t_two_sided_p(t, df), MIN_P_VALUE)
    return TestResult(statistic=t, p_value=min(p, 1.0), method=method, estimate=r)
