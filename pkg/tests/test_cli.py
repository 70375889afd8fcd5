import csv
import os

import numpy as np
import pytest

from pdcornet import cli
from pdcornet.harness import RESULT_COLUMNS, SUMMARY_COLUMNS, read_summary
from pdcornet.report import PANELS

MINIMAL = """\
network_size: 3
ac_forms: [quadratic]
n: [200]
mu: [0]
beta_non: [1]
beta_lin: [0]
beta_con: [0]
beta_ab: [0]
replications: 2
methods: pdcor
preprocess: residualized
permutations: 19
seed: 11
threads: 1
"""


@pytest.fixture
def config(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text(MINIMAL)
    return path


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    for name in list(os.environ):
        if name.startswith(cli.ENV_PREFIX):
            monkeypatch.delenv(name)


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_csv(path, columns):
    names = list(columns)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for i in range(len(columns[names[0]])):
            w.writerow([repr(float(columns[k][i])) for k in names])


class TestSimulate:
    def test_minimal_config_row_count(self, config, tmp_path):
        out = tmp_path / "out"
        assert cli.main(["simulate", "--config", str(config), "--output-dir", str(out)]) == 0
        results = rows(out / "results.csv")
        assert len(results) == 2 * 2  # replications x monitored edges
        assert {r["edge"] for r in results} == {"AC", "BC"}
        summary = rows(out / "summary.csv")
        assert [r["metric"] for r in summary] == ["sensitivity", "specificity"]

    def test_byte_identical_reruns(self, config, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert cli.main(["simulate", "--config", str(config), "--output-dir", str(out)]) == 0
        for name in ("results.csv", "summary.csv"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_flag_and_env_precedence(self, config, tmp_path, monkeypatch):
        out = tmp_path / "out"
        monkeypatch.setenv("PDCORNET_REPLICATIONS", "3")
        assert cli.main(["simulate", "--config", str(config), "--output-dir", str(out)]) == 0
        assert len(rows(out / "results.csv")) == 3 * 2
        assert cli.main(["simulate", "--config", str(config), "--output-dir", str(out),
                         "--replications", "1"]) == 0
        assert len(rows(out / "results.csv")) == 1 * 2

    def test_progress_on_stderr(self, config, tmp_path, capsys):
        cli.main(["simulate", "--config", str(config), "--output-dir", str(tmp_path)])
        assert "cell 1/1" in capsys.readouterr().err

    @pytest.mark.parametrize("bad", [
        "network_size: 5\n", "unknown_key: 1\n", "ac_forms: [cubic]\n", "alpha: 2\n",
        "permutations: 0\n", "sigma: [0]\n", "seed: -1\n", "[1, 2]\n", "n: [abc]\n",
        "methods: kendall\n",
    ])
    def test_invalid_config_exit_2(self, tmp_path, bad, capsys):
        path = tmp_path / "bad.yaml"
        path.write_text(bad)
        assert cli.main(["simulate", "--config", str(path), "--output-dir", str(tmp_path)]) == 2
        assert "error" in capsys.readouterr().err

    def test_missing_config_exit_2(self, tmp_path):
        assert cli.main(["simulate", "--config", str(tmp_path / "nope.yaml")]) == 2

    def test_unwritable_output_exit_3(self, config, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        assert cli.main(["simulate", "--config", str(config), "--output-dir",
                         str(blocker / "sub")]) == 3

    def test_default_permutations(self):
        args = cli.build_parser().parse_args(["simulate"])
        assert args.permutations is None
        assert cli.DEFAULT_PERMUTATIONS == 1000


class TestAnalyze:
    def dataset(self, tmp_path, n=200, seed=0):
        rng = np.random.default_rng(seed)
        cols = {name: rng.normal(size=n) for name in ("e", "d", "c", "b", "a")}
        path = tmp_path / "data.csv"
        write_csv(path, cols)
        return path, cols

    def test_five_columns_ten_rows(self, tmp_path, capsys):
        path, _ = self.dataset(tmp_path)
        out = tmp_path / "out"
        assert cli.main(["analyze", str(path), "--permutations", "19",
                         "--output-dir", str(out)]) == 0
        edges = rows(out / "edges.csv")
        assert len(edges) == 10
        assert list(edges[0]) == list(cli.EDGE_COLUMNS)
        assert [(r["var1"], r["var2"]) for r in edges][:2] == [("a", "b"), ("a", "c")]
        assert all(r["linear_significant"] in ("true", "false") for r in edges)
        table = capsys.readouterr().out
        assert "Linear" in table and "Nonlinear" in table
        assert len(table.strip().splitlines()) == 12

    def test_exact_copy_is_linear(self, tmp_path):
        path, cols = self.dataset(tmp_path)
        cols["a"] = cols["b"].copy()
        write_csv(path, cols)
        out = tmp_path / "out"
        assert cli.main(["analyze", str(path), "--permutations", "19",
                         "--output-dir", str(out)]) == 0
        (pair,) = [r for r in rows(out / "edges.csv") if (r["var1"], r["var2"]) == ("a", "b")]
        assert pair["linear_significant"] == "true"

    def test_non_numeric_cell(self, tmp_path, capsys):
        path = tmp_path / "data.csv"
        path.write_text("x,y,z\n1,2,3\n4,oops,6\n7,8,9\n1,1,1\n2,2,2\n")
        assert cli.main(["analyze", str(path), "--output-dir", str(tmp_path)]) == 2
        err = capsys.readouterr().err
        assert "row 3" in err and "'y'" in err

    def test_too_few_rows(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("x,y,z\n1,2,3\n4,5,6\n")
        assert cli.main(["analyze", str(path), "--output-dir", str(tmp_path)]) == 2

    def test_too_few_columns(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("x,y\n1,2\n4,5\n3,1\n0,0\n")
        assert cli.main(["analyze", str(path), "--output-dir", str(tmp_path)]) == 2

    def test_missing_file_is_io_error(self, tmp_path):
        assert cli.main(["analyze", str(tmp_path / "none.csv")]) == 3

    def test_method_selection(self, tmp_path):
        path, _ = self.dataset(tmp_path, n=50)
        out = tmp_path / "o"
        assert cli.main(["analyze", str(path), "--methods", "spearman,cmi", "--permutations",
                         "9", "--output-dir", str(out)]) == 0
        assert cli.main(["analyze", str(path), "--methods", "pdcor", "--output-dir", str(out)]) == 2


class TestReport:
    def test_empty_results(self, tmp_path):
        path = tmp_path / "results.csv"
        path.write_text(",".join(RESULT_COLUMNS) + "\n")
        out = tmp_path / "rep"
        assert cli.main(["report", str(path), "--output-dir", str(out)]) == 0
        assert read_summary(out / "summary.csv") == []
        assert (out / "panel_fig1A.csv").read_text().strip() == ",".join(SUMMARY_COLUMNS)

    def test_schema_mismatch(self, tmp_path):
        path = tmp_path / "results.csv"
        path.write_text("a,b\n")
        assert cli.main(["report", str(path)]) == 2

    def test_summary_matches_simulate(self, config, tmp_path):
        out = tmp_path / "sim"
        cli.main(["simulate", "--config", str(config), "--output-dir", str(out)])
        assert cli.main(["report", str(out / "results.csv")]) == 0
        assert (out / "report" / "summary.csv").read_bytes() == (out / "summary.csv").read_bytes()

    def test_fig1_panel_selection(self, tmp_path):
        cfg = tmp_path / "fig1.yaml"
        cfg.write_text("network_size: 3\nn: [200, 500]\nmu: [0, 5]\nbeta_non: [1, -1]\n"
                       "beta_lin: [0]\nbeta_con: [0]\nbeta_ab: [0]\nreplications: 1\n"
                       "permutations: 9\nmethods: pdcor\npreprocess: residualized\nthreads: 1\n")
        out = tmp_path / "sim"
        assert cli.main(["simulate", "--config", str(cfg), "--output-dir", str(out)]) == 0
        assert cli.main(["report", str(out / "results.csv")]) == 0
        for letter, form in zip("ABC", ("quadratic", "interaction", "logarithmic")):
            panel = read_summary(out / "report" / f"panel_fig1{letter}.csv")
            assert len(panel) == 1
            c = panel[0].condition
            assert (c["ac_form"], c["n"], c["beta_non"], c["mu_a"], panel[0].edge) == \
                (form, 200, 1.0, 0.0, "AC")
        assert {p.name for p in PANELS} >= {"fig1A", "fig2A", "fig3A", "suppfig2"}


def test_no_command_is_usage_error():
    assert cli.main([]) == 2


def test_version(capsys):
    assert cli.main(["--version"]) == 0
