"""Panel extraction and text summaries over simulation summaries.

Each panel is a filter over summary rows.  The panel-to-condition mapping is
listed in ``PANELS`` and in the README's reproduction guide.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .harness import SummaryRow, write_summary


@dataclass(frozen=True)
class Panel:
    name: str
    description: str
    network_size: int
    edge: str
    where: dict = field(default_factory=dict)

    def matches(self, row: SummaryRow) -> bool:
        c = row.condition
        if c["network_size"] != self.network_size or row.edge != self.edge:
            return False
        return all(c[k] == v for k, v in self.where.items())


def _means(network_size: int, a: float, b: float, c: float, d: float = 0.0) -> dict:
    out = {"mu_a": a, "mu_b": b, "mu_c": c}
    if network_size == 4:
        out["mu_d"] = d
    return out


PANELS: tuple[Panel, ...] = (
    *(
        Panel(f"fig1{letter}", f"3-node {form} AC sensitivity, n=200, beta_non=1, means 0",
              3, "AC", {"ac_form": form, "n": 200, "beta_non": 1.0, **_means(3, 0, 0, 0)})
        for letter, form in zip("ABC", ("quadratic", "interaction", "logarithmic"))
    ),
    *(
        Panel(f"fig2{letter}", f"4-node {form} AC sensitivity, n=200, means 0, beta_ab=1",
              4, "AC", {"ac_form": form, "n": 200, "beta_ab": 1.0, **_means(4, 0, 0, 0, 0)})
        for letter, form in zip("ABC", ("quadratic", "interaction", "logarithmic"))
    ),
    Panel("fig3A", "3-node BC specificity, quadratic AC, n=200, means 0",
          3, "BC", {"ac_form": "quadratic", "n": 200, **_means(3, 0, 0, 0)}),
    Panel("fig3B", "3-node BC specificity, quadratic AC, n=200, all means 10",
          3, "BC", {"ac_form": "quadratic", "n": 200, **_means(3, 10, 10, 10)}),
    Panel("fig3C", "3-node BC specificity, quadratic AC, n=200, mu_A=10, mu_B=0, mu_C=10",
          3, "BC", {"ac_form": "quadratic", "n": 200, **_means(3, 10, 0, 10)}),
    Panel("suppfig2", "4-node AD sensitivity, n=200, means 0, beta_ab=1",
          4, "AD", {"n": 200, "beta_ab": 1.0, **_means(4, 0, 0, 0, 0)}),
)


def panel_rows(rows: Sequence[SummaryRow], panel: Panel) -> list[SummaryRow]:
    return [r for r in rows if panel.matches(r)]


def _describe(row: SummaryRow) -> str:
    c = row.condition
    parts = [f"{c['network_size']}-node", c["ac_form"]]
    if c["network_size"] == 4:
        parts.append(f"AD={c['ad_form']}")
    parts += [f"n={c['n']}", f"mode={row.mode}", f"edge={row.edge}"]
    for k in ("beta_non", "beta_lin", "beta_con", "beta_ab", "beta_ad"):
        if c["network_size"] == 3 and k == "beta_ad":
            continue
        parts.append(f"{k}={c[k]:g}")
    means = "/".join(f"{c[k]:g}" for k in ("mu_a", "mu_b", "mu_c", "mu_d")[:c["network_size"]])
    parts.append(f"mu={means}")
    return " ".join(parts)


def text_summary(rows: Sequence[SummaryRow]) -> str:
    """Best and worst cell per (method, metric)."""
    by_key: dict[tuple[str, str], list[SummaryRow]] = {}
    for r in rows:
        if r.value == r.value:  # skip NaN (all replications missing)
            by_key.setdefault((r.method, r.metric), []).append(r)
    if not by_key:
        return "no summary rows\n"
    lines = []
    for (method, metric) in sorted(by_key):
        group = by_key[(method, metric)]
        best = max(group, key=lambda r: r.value)
        worst = min(group, key=lambda r: r.value)
        mean = sum(r.value for r in group) / len(group)
        lines.append(f"{method} {metric}: mean {mean:.3f} over {len(group)} cells")
        lines.append(f"  best  {best.value:.3f}  {_describe(best)}")
        lines.append(f"  worst {worst.value:.3f}  {_describe(worst)}")
    return "\n".join(lines) + "\n"


def write_report(rows: Sequence[SummaryRow], out_dir: str | os.PathLike) -> list[Path]:
    """Write the recomputed summary, one CSV per panel and ``report.txt``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = [out / "summary.csv"]
    write_summary(written[0], rows)
    for panel in PANELS:
        path = out / f"panel_{panel.name}.csv"
        write_summary(path, panel_rows(rows, panel))
        written.append(path)
    text = out / "report.txt"
    text.write_text(text_summary(rows), encoding="utf-8")
    written.append(text)
    return written
