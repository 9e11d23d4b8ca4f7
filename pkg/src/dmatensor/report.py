"""Aggregation of sweep CSVs into summary tables and accuracy-vs-overhead figures."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .errors import ConfigError
from .sweep import CSV_COLUMNS


@dataclass
class ParsedRow:
    est_type: str
    n_f: int
    k: int
    seed: int
    nmse_db: float | None
    zeta_db: float | None
    status: str


def _parse_float(text: str) -> float | None:
    if text == "":
        return None
    return float(text)


def read_sweep_csv(path) -> list[ParsedRow]:
    """Read a sweep CSV, enforcing the exact expected column set."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ConfigError(str(path), "empty CSV") from None
        if tuple(header) != CSV_COLUMNS:
            raise ConfigError(
                str(path),
                f"unexpected CSV header {header!r}, expected {list(CSV_COLUMNS)!r}",
            )
        rows = []
        for line_no, record in enumerate(reader, start=2):
            if len(record) != len(CSV_COLUMNS):
                raise ConfigError(str(path), f"line {line_no} has {len(record)} fields")
            d = dict(zip(CSV_COLUMNS, record))
            try:
                rows.append(ParsedRow(
                    est_type=d["type"],
                    n_f=int(d["n_f"]),
                    k=int(d["k"]),
                    seed=int(d["seed"]),
                    nmse_db=_parse_float(d["nmse_db"]),
                    zeta_db=_parse_float(d["zeta_db"]),
                    status=d["status"],
                ))
            except ValueError as err:
                raise ConfigError(str(path), f"line {line_no}: {err}") from err
    return rows


def aggregate(rows: list[ParsedRow], threshold_db: float | None = None) -> dict:
    """Best accuracy and minimum threshold-reaching overhead per (type, n_f)."""
    groups: dict[tuple[str, int], list[ParsedRow]] = {}
    for row in rows:
        groups.setdefault((row.est_type, row.n_f), []).append(row)
    table = {}
    for (est_type, n_f), group in sorted(groups.items()):
        ok = [r for r in group if r.status == "ok"]
        zetas = [r.zeta_db for r in ok if r.zeta_db is not None and math.isfinite(r.zeta_db)]
        nmses = [r.nmse_db for r in ok if r.nmse_db is not None]
        k_min = None
        if threshold_db is not None:
            for r in sorted(ok, key=lambda r: r.k):
                if r.zeta_db is not None and r.zeta_db >= threshold_db:
                    k_min = r.k
                    break
        table[(est_type, n_f)] = {
            "cells": len(group),
            "failures": len(group) - len(ok),
            "best_zeta_db": max(zetas) if zetas else None,
            "best_nmse_db": min(nmses) if nmses else None,
            "k_min_at_threshold": k_min,
        }
    return table


def format_tables(table: dict, threshold_db: float | None = None) -> str:
    """Render the aggregate as aligned plain text."""
    header = f"{'type':<10}{'n_f':>5}{'cells':>7}{'fail':>6}{'best zeta[dB]':>15}{'best nmse[dB]':>15}"
    if threshold_db is not None:
        header += f"{'k_min@%.1fdB' % threshold_db:>15}"
    lines = [header, "-" * len(header)]
    for (est_type, n_f), stats in sorted(table.items()):

        def show(value, spec=".2f"):
            return "-" if value is None else format(value, spec)

        line = (
            f"{est_type:<10}{n_f:>5}{stats['cells']:>7}{stats['failures']:>6}"
            f"{show(stats['best_zeta_db']):>15}{show(stats['best_nmse_db']):>15}"
        )
        if threshold_db is not None:
            line += f"{show(stats['k_min_at_threshold'], 'd'):>15}"
        lines.append(line)
    return "\n".join(lines) + "\n"


def render_figures(rows: list[ParsedRow], out_dir, stem: str = "sweep") -> list[Path]:
    """Plot zeta and NMSE against the training overhead, one panel per feed count."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    n_f_values = sorted({r.n_f for r in rows})
    types = sorted({r.est_type for r in rows})
    written = []
    for metric, label, filename in (
        ("zeta_db", "zeta [dB]", f"{stem}_zeta_vs_k.png"),
        ("nmse_db", "NMSE [dB]", f"{stem}_nmse_vs_k.png"),
    ):
        fig, axes = plt.subplots(
            1, len(n_f_values), figsize=(4.2 * len(n_f_values), 3.4),
            sharey=True, squeeze=False,
        )
        for ax, n_f in zip(axes[0], n_f_values):
            for est_type in types:
                pts = sorted(
                    (
                        (r.k, getattr(r, metric))
                        for r in rows
                        if r.n_f == n_f and r.est_type == est_type
                        and r.status == "ok" and getattr(r, metric) is not None
                        and math.isfinite(getattr(r, metric))
                    ),
                    key=lambda p: p[0],
                )
                if pts:
                    ks, vals = zip(*pts)
                    ax.plot(ks, vals, marker="o", markersize=3.5, label=est_type)
            ax.set_title(f"N_F = {n_f}")
            ax.set_xlabel("training configurations K")
            ax.grid(True, alpha=0.3)
        axes[0][0].set_ylabel(label)
        axes[0][-1].legend(fontsize=8, loc="best")
        fig.tight_layout()
        path = out_dir / filename
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)
    return written
