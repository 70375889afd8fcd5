"""Command-line interface: ``pdcornet simulate | analyze | report``.

Exit codes: 0 success, 2 invalid input or configuration, 3 I/O failure.
Every flag can also be set through an environment variable named
``PDCORNET_<FLAG>`` (e.g. ``PDCORNET_PERMUTATIONS=199``); command-line flags
win over environment variables, which win over the config file.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .datagen import FORMS, GridLevels
from .dependence import DEFAULT_PERMUTATIONS
from .errors import PdcornetError
from .harness import fmt_float, read_results, run_grid, summarize, write_results, write_summary
from .pipeline import CENTERED, LINEAR_METHODS, MODES, NONLINEAR_METHODS, UNCENTERED, center, detect_edges
from .records import METHODS
from .report import write_report

logger = logging.getLogger("pdcornet")

ENV_PREFIX = "PDCORNET_"
EXIT_OK, EXIT_INPUT, EXIT_IO = 0, 2, 3

METHOD_ALIASES = {"pearson": "pearson-partial", "spearman": "spearman-partial"}

LEVEL_KEYS = ("ac_forms", "ad_forms", "n", "mu", "beta_non", "beta_lin", "beta_con",
              "beta_ab", "beta_ad", "beta_non2", "beta_con2", "sigma")
CONFIG_KEYS = {"network_size", "mu_sets", "replications", "alpha", "permutations",
               "preprocess", "methods", "seed", "output_dir", "threads", "bins", *LEVEL_KEYS}


class UsageError(Exception):
    """Bad user input; maps to exit code 2."""


def _env(name: str) -> str | None:
    return os.environ.get(ENV_PREFIX + name.upper().replace("-", "_"))


def _pick(flag, env_name: str, config: dict, key: str, default, convert=lambda v: v):
    if flag is not None:
        return convert(flag)
    env = _env(env_name)
    if env is not None:
        return convert(env)
    if key in config:
        return convert(config[key])
    return default


def _as_list(value) -> list:
    if isinstance(value, str):
        return [v.strip() for v in value.split(",") if v.strip()]
    if isinstance(value, (list, tuple)):
        return list(value)
    return [value]


def parse_methods(value) -> list[str]:
    out = []
    for m in _as_list(value):
        m = METHOD_ALIASES.get(str(m), str(m))
        if m not in METHODS:
            raise UsageError(f"unknown method {m!r}; expected a subset of {', '.join(METHODS)}")
        out.append(m)
    if not out:
        raise UsageError("no methods selected")
    return out


def parse_modes(value) -> list[str]:
    out = [str(m) for m in _as_list(value)]
    for m in out:
        if m not in MODES:
            raise UsageError(f"unknown preprocessing mode {m!r}; expected one of {', '.join(MODES)}")
    if not out:
        raise UsageError("no preprocessing mode selected")
    return out


def _int(value, name: str) -> int:
    if isinstance(value, int) and not isinstance(value, bool):
        return value
    try:
        return int(str(value).strip())
    except ValueError:
        pass
    try:
        f = float(value)
    except (TypeError, ValueError):
        raise UsageError(f"{name} must be an integer, got {value!r}") from None
    if not f.is_integer():
        raise UsageError(f"{name} must be an integer, got {value!r}")
    return int(f)


def _alpha(value) -> float:
    try:
        a = float(value)
    except (TypeError, ValueError):
        raise UsageError(f"alpha must be a number, got {value!r}") from None
    if not 0.0 < a < 1.0:
        raise UsageError(f"alpha must lie in (0, 1), got {a}")
    return a


def _positive(name):
    def conv(value):
        v = _int(value, name)
        if v < 1:
            raise UsageError(f"{name} must be >= 1, got {v}")
        return v
    return conv


def _seed(value) -> int:
    v = _int(value, "seed")
    if v < 0:
        raise UsageError(f"seed must be >= 0, got {v}")
    return v


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise UsageError(f"config {path} is not valid YAML: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise UsageError(f"config {path} must be a key-value mapping")
    unknown = sorted(set(data) - CONFIG_KEYS)
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(unknown)}")
    return data


def grid_from_config(config: dict) -> GridLevels:
    size = _int(config.get("network_size", 3), "network_size")
    if size not in (3, 4):
        raise UsageError(f"network_size must be 3 or 4, got {size}")
    levels = GridLevels.study(size)
    for key in LEVEL_KEYS:
        if key not in config:
            continue
        values = _as_list(config[key])
        if not values:
            raise UsageError(f"{key} needs at least one level")
        if key in ("ac_forms", "ad_forms"):
            for v in values:
                if v not in FORMS:
                    raise UsageError(f"{key}: unknown form {v!r}; expected one of {', '.join(FORMS)}")
        elif key == "n":
            values = [_positive("n")(v) for v in values]
        else:
            try:
                values = [float(v) for v in values]
            except (TypeError, ValueError):
                raise UsageError(f"{key} levels must be numbers, got {config[key]!r}") from None
            if key == "sigma" and any(not v > 0 for v in values):
                raise UsageError("sigma levels must be positive")
        setattr(levels, key, tuple(values))
    if "mu_sets" in config:
        sets = config["mu_sets"]
        if not isinstance(sets, list) or not all(isinstance(s, list) and len(s) == size for s in sets):
            raise UsageError(f"mu_sets must be a list of {size}-element lists")
        try:
            levels.mu_sets = tuple(tuple(float(v) for v in s) for s in sets)
        except (TypeError, ValueError):
            raise UsageError("mu_sets entries must be numbers") from None
    return levels


def cmd_simulate(args) -> int:
    config = load_config(args.config or _env("config"))
    levels = grid_from_config(config)
    try:
        specs = list(levels.cells())
    except PdcornetError as exc:
        raise UsageError(str(exc)) from exc
    n_rep = _pick(args.replications, "replications", config, "replications", 100, _positive("replications"))
    n_perm = _pick(args.permutations, "permutations", config, "permutations",
                   DEFAULT_PERMUTATIONS, _positive("permutations"))
    alpha = _pick(args.alpha, "alpha", config, "alpha", 0.05, _alpha)
    seed = _pick(args.seed, "seed", config, "seed", 0, _seed)
    modes = _pick(args.preprocess, "preprocess", config, "preprocess", list(MODES), parse_modes)
    methods = _pick(args.methods, "methods", config, "methods", list(METHODS), parse_methods)
    threads = _pick(args.threads, "threads", config, "threads", os.cpu_count() or 1,
                    _positive("threads"))
    bins = _pick(None, "bins", config, "bins", None, _positive("bins"))
    out_dir = Path(_pick(args.output_dir, "output_dir", config, "output_dir", "."))

    def progress(i, total, spec):
        print(f"[simulate] cell {i}/{total} done: {spec.network_size}-node {spec.ac_form}"
              f" n={spec.n}", file=sys.stderr)

    results = run_grid(specs, modes, methods, n_replications=n_rep, n_perm=n_perm,
                       master_seed=seed, bins=bins, threads=threads, progress=progress)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        write_results(out_dir / "results.csv", results)
        write_summary(out_dir / "summary.csv", summarize(results, alpha))
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"[simulate] wrote {len(results)} results to {out_dir}", file=sys.stderr)
    return EXIT_OK


def read_dataset(path: str | os.PathLike) -> dict[str, np.ndarray]:
    """Read a numeric CSV with a header row into named columns."""
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise UsageError(f"{path} is empty") from None
        if len(set(header)) != len(header) or any(not h for h in header):
            raise UsageError(f"{path}: column names must be non-empty and unique")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise UsageError(f"{path}: row {lineno} has {len(row)} fields, expected {len(header)}")
            values = []
            for name, cell in zip(header, row):
                try:
                    v = float(cell)
                except ValueError:
                    raise UsageError(
                        f"{path}: non-numeric value {cell!r} at row {lineno}, column {name!r}"
                    ) from None
                if not math.isfinite(v):
                    raise UsageError(f"{path}: non-finite value at row {lineno}, column {name!r}")
                values.append(v)
            rows.append(values)
    if len(header) < 3:
        raise UsageError(f"{path}: need at least 3 numeric columns, got {len(header)}")
    if len(rows) < 4:
        raise UsageError(f"{path}: need at least 4 rows of data, got {len(rows)}")
    arr = np.asarray(rows, dtype=np.float64)
    return {name: arr[:, j] for j, name in enumerate(header)}


EDGE_COLUMNS = ("var1", "var2", "linear_p", "linear_significant", "nonlinear_p",
                "nonlinear_significant")


def format_edge_table(decisions) -> str:
    head = ("Variable 1", "Variable 2", "Linear", "linear p", "Nonlinear", "nonlinear p")
    body = [(d.var1, d.var2, "X" if d.linear_significant else "",
             f"{d.linear_result.p_value:.3g}", "X" if d.nonlinear_significant else "",
             f"{d.nonlinear_result.p_value:.3g}") for d in decisions]
    widths = [max(len(r[i]) for r in (head, *body)) for i in range(len(head))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(head, widths)).rstrip(),
             "  ".join("-" * w for w in widths)]
    lines += ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in body]
    return "\n".join(lines) + "\n"


def cmd_analyze(args) -> int:
    try:
        data = read_dataset(args.data)
    except OSError as exc:
        print(f"error: cannot read {args.data}: {exc}", file=sys.stderr)
        return EXIT_IO
    alpha = _pick(args.alpha, "alpha", {}, "", 0.05, _alpha)
    n_perm = _pick(args.permutations, "permutations", {}, "", DEFAULT_PERMUTATIONS,
                   _positive("permutations"))
    seed = _pick(args.seed, "seed", {}, "", 0, _seed)
    methods = _pick(args.methods, "methods", {}, "", ["pearson-partial", "pdcor"], parse_methods)
    mode = _pick(args.preprocess, "preprocess", {}, "", CENTERED, lambda v: parse_modes(v)[0])
    out_dir = Path(_pick(args.output_dir, "output_dir", {}, "", "."))
    linear = [m for m in methods if m in LINEAR_METHODS]
    nonlinear = [m for m in methods if m in NONLINEAR_METHODS]
    if len(linear) != 1 or len(nonlinear) != 1:
        raise UsageError("analyze needs exactly one linear method (pearson-partial or "
                         "spearman-partial) and one nonlinear method (pdcor or cmi)")
    if mode == CENTERED:
        data = center(data)
    elif mode != UNCENTERED:
        raise UsageError("analyze residualizes per edge; use --preprocess centered or uncentered")

    decisions = detect_edges(data, alpha=alpha, n_perm=n_perm, seed=seed,
                             linear_method=linear[0], nonlinear_method=nonlinear[0])
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / "edges.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(EDGE_COLUMNS)
            for d in decisions:
                w.writerow([d.var1, d.var2, fmt_float(d.linear_result.p_value),
                            str(d.linear_significant).lower(),
                            fmt_float(d.nonlinear_result.p_value),
                            str(d.nonlinear_significant).lower()])
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO
    sys.stdout.write(format_edge_table(decisions))
    return EXIT_OK


def cmd_report(args) -> int:
    alpha = _pick(args.alpha, "alpha", {}, "", 0.05, _alpha)
    try:
        results = read_results(args.results)
    except OSError as exc:
        print(f"error: cannot read {args.results}: {exc}", file=sys.stderr)
        return EXIT_IO
    out_dir = Path(_pick(args.output_dir, "output_dir", {}, "",
                         str(Path(args.results).parent / "report")))
    rows = summarize(results, alpha)
    try:
        write_report(rows, out_dir)
    except OSError as exc:
        print(f"error: cannot write report: {exc}", file=sys.stderr)
        return EXIT_IO
    sys.stdout.write((out_dir / "report.txt").read_text(encoding="utf-8"))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pdcornet",
        description="Partial distance correlation tests for nonlinear network edges.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output-dir", help="directory for output files")
    common.add_argument("--alpha", help="significance level (default 0.05)")

    sim = sub.add_parser("simulate", parents=[common], help="run the simulation study")
    sim.add_argument("--config", help="YAML config with condition levels and run settings")
    sim.add_argument("--seed", help="master seed (default 0)")
    sim.add_argument("--permutations", help=f"permutations per test (default {DEFAULT_PERMUTATIONS})")
    sim.add_argument("--replications", help="replications per cell (default 100)")
    sim.add_argument("--preprocess", help="comma list of uncentered, centered, residualized")
    sim.add_argument("--methods", help=f"comma list of {', '.join(METHODS)}")
    sim.add_argument("--threads", help="worker processes (default: all cores)")
    sim.set_defaults(func=cmd_simulate)

    ana = sub.add_parser("analyze", parents=[common], help="linear/nonlinear edge table for a CSV")
    ana.add_argument("data", help="CSV file with a header row and numeric columns")
    ana.add_argument("--seed", help="seed for the permutation tests (default 0)")
    ana.add_argument("--permutations", help=f"permutations per test (default {DEFAULT_PERMUTATIONS})")
    ana.add_argument("--methods", help="linear and nonlinear method, e.g. pearson-partial,pdcor")
    ana.add_argument("--preprocess", help="centered (default) or uncentered")
    ana.set_defaults(func=cmd_analyze)

    rep = sub.add_parser("report", parents=[common], help="panel CSVs from a results file")
    rep.add_argument("results", help="results.csv written by simulate")
    rep.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, PdcornetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
