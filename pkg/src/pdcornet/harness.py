"""Monte Carlo harness: run every (cell, replication, mode, method, edge)
test, then aggregate sensitivity and specificity."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import os
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .datagen import CONDITION_FIELDS, DGPSpec, generate
from .dependence import DEFAULT_PERMUTATIONS
from .errors import (
    ContractError,
    DegenerateInputError,
    InvalidInputError,
    PdcornetError,
    SampleTooSmallError,
)
from .pipeline import MODES, preprocess_network, run_test
from .records import METHODS

logger = logging.getLogger(__name__)

EDGES = ("AC", "BC", "AD")
OK = "ok"

SENSITIVITY = "sensitivity"
SPECIFICITY = "specificity"
# BC in cells with a true linear B->C path; reported apart from the main stratum
SPECIFICITY_LINEAR_BC = "specificity-linear-bc"

_REASONS = (
    (DegenerateInputError, "degenerate-input"),
    (SampleTooSmallError, "sample-too-small"),
    (InvalidInputError, "invalid-input"),
    (PdcornetError, "error"),
)


@dataclass(frozen=True)
class CellResult:
    spec: DGPSpec
    mode: str
    method: str
    edge: str
    replication: int
    p_value: float
    statistic: float
    seed: int
    status: str = OK

    @property
    def missing(self) -> bool:
        return self.status != OK


@dataclass(frozen=True)
class SummaryRow:
    condition: dict
    mode: str
    method: str
    edge: str
    metric: str
    value: float
    n_replications: int
    n_missing: int = 0


def monitored_edges(network_size: int) -> tuple[str, ...]:
    return EDGES if network_size == 4 else EDGES[:2]


def cell_key(spec: DGPSpec) -> int:
    """Stable 63-bit identifier of a condition, independent of grid order."""
    payload = json.dumps(spec.condition(), sort_keys=True).encode()
    return int.from_bytes(hashlib.sha256(payload).digest()[:8], "big") >> 1


def derive_seed(master_seed: int, *keys: int) -> int:
    """Deterministic child seed of ``master_seed`` for a tuple of integer keys."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def _reason(exc: Exception) -> str:
    for cls, code in _REASONS:
        if isinstance(exc, cls):
            return code
    return "error"


def run_replication(
    spec: DGPSpec, modes: Sequence[str], methods: Sequence[str], replication: int,
    n_perm: int, master_seed: int, bins: int | None = None,
) -> list[CellResult]:
    """Generate one dataset and run every mode x method x edge test on it.

    The data seed depends only on (master seed, condition, replication), so
    every mode and method sees the same draw.
    """
    key = cell_key(spec)
    spec = spec.with_seed(derive_seed(master_seed, key, replication))
    data = generate(spec)
    out = []
    for mode in modes:
        prepared = preprocess_network(data, mode)
        names = list(spec.nodes)
        for edge in monitored_edges(spec.network_size):
            u, v = edge[0], edge[1]
            rest = [prepared[k] for k in sorted(names) if k not in (u, v)]
            for method in methods:
                seed = derive_seed(master_seed, key, replication, EDGES.index(edge),
                                   METHODS.index(method))
                try:
                    res = run_test(method, prepared[u], prepared[v], rest,
                                   n_perm=n_perm, seed=seed, bins=bins)
                except PdcornetError as exc:
                    out.append(CellResult(spec, mode, method, edge, replication,
                                          math.nan, math.nan, seed, _reason(exc)))
                    continue
                out.append(CellResult(spec, mode, method, edge, replication,
                                      res.p_value, res.statistic, seed))
    return out


def _check_run_args(modes, methods, n_replications, n_perm):
    for m in modes:
        if m not in MODES:
            raise InvalidInputError(f"unknown preprocessing mode {m!r}")
    for m in methods:
        if m not in METHODS:
            raise InvalidInputError(f"unknown method {m!r}; expected one of {METHODS}")
    if n_replications < 1:
        raise InvalidInputError("n_replications must be >= 1")
    if n_perm < 1:
        raise InvalidInputError("n_perm must be >= 1")


def run_cell(
    spec: DGPSpec, mode: str | Sequence[str], methods: Sequence[str], n_replications: int = 100,
    n_perm: int = DEFAULT_PERMUTATIONS, master_seed: int = 0, bins: int | None = None,
) -> list[CellResult]:
    """All replications of one condition, sorted deterministically."""
    modes = [mode] if isinstance(mode, str) else list(mode)
    _check_run_args(modes, methods, n_replications, n_perm)
    results = []
    for rep in range(n_replications):
        results.extend(run_replication(spec, modes, methods, rep, n_perm, master_seed, bins))
    return sort_results(results, [spec])


def _run_task(args):
    return run_replication(*args)


def run_grid(
    specs: Sequence[DGPSpec], modes: Sequence[str], methods: Sequence[str],
    n_replications: int = 100, n_perm: int = DEFAULT_PERMUTATIONS, master_seed: int = 0,
    bins: int | None = None, threads: int = 1,
    progress: Callable[[int, int, DGPSpec], None] | None = None,
) -> list[CellResult]:
    """Run a list of cells, optionally across worker processes.

    Output order does not depend on ``threads``: results are sorted by cell
    position, mode, method, edge and replication before returning.
    """
    _check_run_args(modes, methods, n_replications, n_perm)
    tasks = [(spec, tuple(modes), tuple(methods), rep, n_perm, master_seed, bins)
             for spec in specs for rep in range(n_replications)]
    results: list[CellResult] = []
    if threads <= 1:
        for i, spec in enumerate(specs):
            for rep in range(n_replications):
                results.extend(run_replication(spec, modes, methods, rep, n_perm, master_seed, bins))
            if progress:
                progress(i + 1, len(specs), spec)
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            for j, chunk in enumerate(pool.map(_run_task, tasks, chunksize=1)):
                results.extend(chunk)
                if progress and (j + 1) % n_replications == 0:
                    i = (j + 1) // n_replications
                    progress(i, len(specs), specs[i - 1])
    return sort_results(results, specs, modes, methods)


def sort_results(results: Iterable[CellResult], specs: Sequence[DGPSpec],
                 modes: Sequence[str] = MODES, methods: Sequence[str] = METHODS) -> list[CellResult]:
    position = {}
    for i, s in enumerate(specs):
        position.setdefault(cell_key(s), i)

    def key(r: CellResult):
        return (position.get(cell_key(r.spec), len(specs)), _index(modes, r.mode),
                _index(methods, r.method), EDGES.index(r.edge), r.replication)

    return sorted(results, key=key)


def _index(seq: Sequence[str], item: str) -> int:
    return seq.index(item) if item in seq else len(seq)


def edge_metric(spec: DGPSpec, edge: str) -> str | None:
    """Which rate an edge contributes to in a given condition, if any.

    AC and AD carry a nonlinear term, so they score sensitivity.  BC has no
    direct nonlinear path: with ``beta_con == 0`` it is a true non-edge
    (specificity); with ``beta_con != 0`` the linear-only stratum is
    reported separately.
    """
    if edge == "AC":
        return SENSITIVITY if spec.beta_non != 0 else None
    if edge == "AD":
        if spec.network_size != 4:
            return None
        return SENSITIVITY if spec.beta_non2 != 0 else None
    if edge == "BC":
        return SPECIFICITY if spec.beta_con == 0 else SPECIFICITY_LINEAR_BC
    raise InvalidInputError(f"unknown edge {edge!r}")


def summarize_group(results: Sequence[CellResult], alpha: float) -> SummaryRow | None:
    """Rate for a single (condition, mode, method, edge) group.

    Missing results are excluded from the denominator and counted in
    ``n_missing``.
    """
    if not results:
        raise ContractError("cannot summarize an empty group")
    first = results[0]
    cond = first.spec.condition()
    for r in results[1:]:
        if (r.mode, r.method, r.edge) != (first.mode, first.method, first.edge) \
                or r.spec.condition() != cond:
            raise ContractError("summary group mixes different cells, modes, methods or edges")
    metric = edge_metric(first.spec, first.edge)
    if metric is None:
        return None
    valid = [r for r in results if not r.missing]
    n_missing = len(results) - len(valid)
    rejected = sum(1 for r in valid if r.p_value < alpha)
    qualifying = rejected if metric == SENSITIVITY else len(valid) - rejected
    value = qualifying / len(valid) if valid else math.nan
    return SummaryRow(cond, first.mode, first.method, first.edge, metric, value,
                      len(results), n_missing)


def summarize(results: Sequence[CellResult], alpha: float = 0.05) -> list[SummaryRow]:
    """Sensitivity/specificity rows, in first-appearance order of each group."""
    groups: dict[tuple, list[CellResult]] = defaultdict(list)
    for r in results:
        cond = tuple(sorted(r.spec.condition().items()))
        groups[(cond, r.mode, r.method, r.edge)].append(r)
    rows = []
    for members in groups.values():
        row = summarize_group(members, alpha)
        if row is not None:
            rows.append(row)
    return rows


# ---------------------------------------------------------------- CSV I/O

RESULT_COLUMNS = (*CONDITION_FIELDS, "mode", "method", "edge", "replication",
                  "data_seed", "test_seed", "status", "statistic", "p_value")
SUMMARY_COLUMNS = (*CONDITION_FIELDS, "mode", "method", "edge", "metric", "value",
                   "n_replications", "n_missing")

_INT_FIELDS = {"network_size", "n"}
_STR_FIELDS = {"ac_form", "ad_form"}


def fmt_float(x: float) -> str:
    """17 significant digits: round-trips any double exactly."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if math.isnan(x):
        return "nan"
    return format(float(x), ".17g")


def _condition_cells(cond: dict) -> list[str]:
    out = []
    for k in CONDITION_FIELDS:
        v = cond[k]
        out.append(v if k in _STR_FIELDS else fmt_float(v))
    return out


def _parse_condition(row: dict) -> dict:
    cond = {}
    for k in CONDITION_FIELDS:
        raw = row[k]
        if k in _STR_FIELDS:
            cond[k] = raw
        elif k in _INT_FIELDS:
            cond[k] = int(raw)
        else:
            cond[k] = float(raw)
    return cond


def write_results(path: str | os.PathLike, results: Iterable[CellResult]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_COLUMNS)
        for r in results:
            w.writerow([*_condition_cells(r.spec.condition()), r.mode, r.method, r.edge,
                        r.replication, r.spec.seed, r.seed, r.status,
                        fmt_float(r.statistic), fmt_float(r.p_value)])


def read_results(path: str | os.PathLike) -> list[CellResult]:
    """Parse a results CSV; raises ``InvalidInputError`` on schema mismatch."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != RESULT_COLUMNS:
            raise InvalidInputError(f"{path}: unexpected header {reader.fieldnames}")
        out = []
        for lineno, row in enumerate(reader, start=2):
            try:
                if row["mode"] not in MODES or row["method"] not in METHODS \
                        or row["edge"] not in EDGES:
                    raise ValueError(f"unknown mode, method or edge in {row}")
                spec = DGPSpec(**_parse_condition(row), seed=int(row["data_seed"]))
                out.append(CellResult(
                    spec, row["mode"], row["method"], row["edge"], int(row["replication"]),
                    float(row["p_value"]), float(row["statistic"]), int(row["test_seed"]),
                    row["status"],
                ))
            except (ValueError, TypeError, KeyError, PdcornetError) as exc:
                raise InvalidInputError(f"{path}:{lineno}: {exc}") from exc
    return out


def write_summary(path: str | os.PathLike, rows: Iterable[SummaryRow]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for r in rows:
            w.writerow([*_condition_cells(r.condition), r.mode, r.method, r.edge, r.metric,
                        fmt_float(r.value), r.n_replications, r.n_missing])


def read_summary(path: str | os.PathLike) -> list[SummaryRow]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != SUMMARY_COLUMNS:
            raise InvalidInputError(f"{path}: unexpected header {reader.fieldnames}")
        return [
            SummaryRow(_parse_condition(row), row["mode"], row["method"], row["edge"],
                       row["metric"], float(row["value"]), int(row["n_replications"]),
                       int(row["n_missing"]))
            for row in reader
        ]
