"""Preprocessing and the two-stage edge decision (linear test, then a
partial distance correlation test on linearly residualized data)."""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .classical import ols_residuals, partial_correlation_test
from .dependence import DEFAULT_PERMUTATIONS, as_sample, pdcor_permutation_test
from .errors import DegenerateInputError, InvalidInputError, SampleTooSmallError
from .infotheory import cmi_permutation_test
from .records import TestResult

UNCENTERED = "uncentered"
CENTERED = "centered"
RESIDUALIZED = "residualized"
MODES = (UNCENTERED, CENTERED, RESIDUALIZED)

LINEAR_METHODS = ("pearson-partial", "spearman-partial")
NONLINEAR_METHODS = ("pdcor", "cmi")

Dataset = Mapping[str, np.ndarray]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EdgeDecision:
    var1: str
    var2: str
    linear_significant: bool
    nonlinear_significant: bool
    linear_result: TestResult
    nonlinear_result: TestResult
    alpha: float


def _check_dataset(data: Dataset) -> dict[str, np.ndarray]:
    cols = {str(k): as_sample(v, str(k)) for k, v in data.items()}
    lengths = {v.size for v in cols.values()}
    if len(lengths) > 1:
        raise InvalidInputError(f"columns have different lengths: {sorted(lengths)}")
    return cols


def center(data: Dataset) -> dict[str, np.ndarray]:
    """Subtract each column's sample mean."""
    return {k: v - v.mean() for k, v in _check_dataset(data).items()}


def residualize(target, predictors: Sequence) -> np.ndarray:
    """OLS residuals of ``target`` on an intercept and ``predictors``."""
    target = as_sample(target, "target")
    preds = [as_sample(p, f"predictors[{i}]") for i, p in enumerate(predictors)]
    for i, p in enumerate(preds):
        if p.size != target.size:
            raise InvalidInputError(f"predictors[{i}] has length {p.size}, expected {target.size}")
    if target.size < len(preds) + 2:
        raise SampleTooSmallError(
            f"residualizing on {len(preds)} predictors needs at least {len(preds) + 2} observations"
        )
    return ols_residuals(target, preds)


def preprocess_network(data: Dataset, mode: str) -> dict[str, np.ndarray]:
    """Apply one of the simulation preprocessing modes.

    ``residualized`` replaces ``C`` by its residuals on ``A``, ``B`` (and
    ``D`` when present) and ``D`` by its residuals on ``A`` and ``B``.
    """
    cols = _check_dataset(data)
    if mode == UNCENTERED:
        return cols
    if mode == CENTERED:
        return center(cols)
    if mode != RESIDUALIZED:
        raise InvalidInputError(f"unknown preprocessing mode {mode!r}; expected one of {MODES}")
    missing = {"A", "B", "C"} - cols.keys()
    if missing:
        raise InvalidInputError(f"residualized mode needs columns A, B, C; missing {sorted(missing)}")
    out = dict(cols)
    if "D" in cols:
        out["C"] = residualize(cols["C"], [cols["A"], cols["B"], cols["D"]])
        out["D"] = residualize(cols["D"], [cols["A"], cols["B"]])
    else:
        out["C"] = residualize(cols["C"], [cols["A"], cols["B"]])
    return out


def run_test(method: str, x, y, z, n_perm: int = DEFAULT_PERMUTATIONS,
             seed: int | None = None, bins: int | None = None) -> TestResult:
    """Dispatch one conditional test by method tag."""
    if method == "pdcor":
        return pdcor_permutation_test(x, y, z, n_perm=n_perm, seed=seed)
    if method == "cmi":
        return cmi_permutation_test(x, y, z, b=bins, n_perm=n_perm, seed=seed)
    if method in LINEAR_METHODS:
        return partial_correlation_test(x, y, z, kind=method.split("-")[0])
    raise InvalidInputError(f"unknown method {method!r}")


def edge_seed(seed: int, index: int) -> int:
    """Seed of the ``index``-th edge test, derived from the run seed."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(index),))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def edge_pairs(names: Sequence[str]) -> list[tuple[str, str]]:
    """Unordered column pairs in lexicographic order."""
    return list(itertools.combinations(sorted(names), 2))


def _undefined(method: str) -> TestResult:
    # NaN p-value: never significant, written as "nan"
    return TestResult(statistic=math.nan, p_value=math.nan, method=method)


def detect_edges(
    data: Dataset,
    alpha: float = 0.05,
    n_perm: int = DEFAULT_PERMUTATIONS,
    seed: int = 0,
    linear_method: str = "pearson-partial",
    nonlinear_method: str = "pdcor",
    pairs: Sequence[tuple[str, str]] | None = None,
) -> list[EdgeDecision]:
    """Linear and nonlinear edge decisions for every pair of columns.

    For a pair ``(u, v)`` with the remaining columns ``W``:

    1. the linear test is the partial correlation of ``u`` and ``v`` given ``W``;
    2. ``u`` is residualized on ``W`` and ``v`` on ``{u} + W``, which removes
       every linear association with ``u``; the nonlinear test is then run on
       the two residual vectors, conditioning on ``W``.

    ``pairs`` restricts the work to a subset of pairs; each pair keeps the
    seed it would have in a full run.  A test whose design is degenerate
    (e.g. a column duplicated in the conditioning set) gets a NaN result
    instead of aborting the whole table.
    """
    if not 0.0 < alpha < 1.0:
        raise InvalidInputError(f"alpha must lie in (0, 1), got {alpha}")
    if linear_method not in LINEAR_METHODS:
        raise InvalidInputError(f"linear method must be one of {LINEAR_METHODS}")
    if nonlinear_method not in NONLINEAR_METHODS:
        raise InvalidInputError(f"nonlinear method must be one of {NONLINEAR_METHODS}")
    cols = _check_dataset(data)
    if len(cols) < 3:
        raise InvalidInputError(f"need at least 3 columns, got {len(cols)}")
    n = next(iter(cols.values())).size
    if n < 4:
        raise SampleTooSmallError(f"need at least 4 observations, got {n}")

    all_pairs = edge_pairs(list(cols))
    wanted = None if pairs is None else {tuple(sorted(p)) for p in pairs}
    decisions = []
    for index, (u, v) in enumerate(all_pairs):
        if wanted is not None and (u, v) not in wanted:
            continue
        rest = [cols[k] for k in sorted(cols) if k not in (u, v)]
        try:
            linear = run_test(linear_method, cols[u], cols[v], rest)
        except DegenerateInputError as exc:
            logger.warning("%s-%s linear test undefined: %s", u, v, exc)
            linear = _undefined(linear_method)
        try:
            u_res = residualize(cols[u], rest)
            v_res = residualize(cols[v], [cols[u], *rest])
            nonlinear = run_test(nonlinear_method, u_res, v_res, rest,
                                 n_perm=n_perm, seed=edge_seed(seed, index))
        except DegenerateInputError as exc:
            logger.warning("%s-%s nonlinear test undefined: %s", u, v, exc)
            nonlinear = _undefined(nonlinear_method)
        decisions.append(EdgeDecision(
            var1=u, var2=v,
            linear_significant=linear.significant(alpha),
            nonlinear_significant=nonlinear.significant(alpha),
            linear_result=linear, nonlinear_result=nonlinear, alpha=alpha,
        ))
    return decisions
