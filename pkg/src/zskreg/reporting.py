"""Plain-text report emission: scores.csv, stats.json, report.md, timing CSVs.

Everything written here is diff-friendly and deterministic for a given
report object; no timestamps, fixed float formatting, fixed ordering.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .evaluation import BenchmarkReport, NemenyiResult, TimingCell

__all__ = [
    "write_scores_csv",
    "read_scores_csv",
    "write_stats_json",
    "write_report_md",
    "write_timing_csv",
    "write_timing_curves",
    "write_benchmark_outputs",
]

_G = "%.12g"


def _fmt(x: float) -> str:
    return _G % x


def write_scores_csv(report: BenchmarkReport, path) -> Path:
    """Long-format scores: dataset, method, rel_mse, rank (blank if unranked)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["dataset", "method", "rel_mse", "rank"])
        for name in report.dataset_names:
            for m in report.methods:
                c = report.cell(name, m)
                rank = report.ranks.get(name, {}).get(m)
                w.writerow(
                    [
                        name,
                        m,
                        _fmt(c.score) if c.ok else "",
                        _fmt(rank) if rank is not None else "",
                    ]
                )
    return path


def read_scores_csv(path) -> tuple[list[str], list[str], np.ndarray]:
    """Read a scores.csv back into (dataset names, methods, score matrix)."""
    path = Path(path)
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        need = {"dataset", "method", "rel_mse"}
        if reader.fieldnames is None or not need.issubset(set(reader.fieldnames)):
            raise ValueError(f"{path}: expected columns dataset, method, rel_mse")
        for row in reader:
            rows.append((row["dataset"], row["method"], row["rel_mse"]))
    datasets = list(dict.fromkeys(r[0] for r in rows))
    methods = list(dict.fromkeys(r[1] for r in rows))
    matrix = np.full((len(datasets), len(methods)), np.nan)
    for ds, m, v in rows:
        if v.strip():
            matrix[datasets.index(ds), methods.index(m)] = float(v)
    return datasets, methods, matrix


def _nemenyi_dict(r: NemenyiResult) -> dict:
    return {
        "k": r.k,
        "n_datasets": r.n_datasets,
        "alpha": r.alpha,
        "critical_difference": r.critical_difference,
        "pairwise": [
            {"a": a, "b": b, "rank_difference": d, "significant": sig}
            for a, b, d, sig in r.pairwise
        ],
    }


def write_stats_json(report: BenchmarkReport, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "score_definition": report.score_definition,
        "methods": report.methods,
        "n_datasets": len(report.dataset_names),
        "n_datasets_ranked": len(report.ranked_datasets),
        "average_ranks": report.average_ranks,
        "friedman": {"chi_squared": report.friedman_chi2, "p_value": report.friedman_p},
        "nemenyi": [_nemenyi_dict(r) for r in report.nemenyi],
        "failed_cells": [
            {"dataset": c.dataset, "method": c.method, "error": c.error}
            for c in report.cells
            if not c.ok
        ],
    }
    if report.stats_note:
        payload["note"] = report.stats_note
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _family(name: str) -> str:
    return name.split("-")[0] if "-" in name else name


def _score_cell_text(report: BenchmarkReport, dataset: str, method: str) -> str:
    c = report.cell(dataset, method)
    if not c.ok:
        return "failed"
    rank = report.ranks.get(dataset, {}).get(method)
    body = "%.4g" % c.score
    return f"{body} ({rank:g})" if rank is not None else body


def write_report_md(report: BenchmarkReport, path) -> Path:
    """Human-readable tables: one block per dataset family, then statistics."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["# Zero-shot regression benchmark", ""]
    lines.append(f"Score: {report.score_definition}.")
    lines.append("")
    lines.append(f"{report.folds}-fold zero-shot cross-validation, seed {report.seed}.")
    lines.append("")

    families = list(dict.fromkeys(_family(n) for n in report.dataset_names))
    header = "| Dataset | " + " | ".join(report.methods) + " |"
    rule = "|" + "---|" * (len(report.methods) + 1)
    for fam in families:
        members = [n for n in report.dataset_names if _family(n) == fam]
        lines.append(f"## Family {fam}")
        lines.append("")
        lines.append(header)
        lines.append(rule)
        for name in members:
            cells = [_score_cell_text(report, name, m) for m in report.methods]
            lines.append("| " + name + " | " + " | ".join(cells) + " |")
        ranked = [n for n in members if n in report.ranks]
        if ranked:
            fam_avg = [
                np.mean([report.ranks[n][m] for n in ranked]) for m in report.methods
            ]
            lines.append(
                "| Avg. rank | " + " | ".join(f"({v:.2f})" for v in fam_avg) + " |"
            )
        lines.append("")
    if len(families) > 1 and report.average_ranks:
        lines.append(
            "Mean rank over all ranked datasets: "
            + ", ".join(f"{m} ({report.average_ranks[m]:.2f})" for m in report.methods)
        )
        lines.append("")

    lines.append("## Statistics")
    lines.append("")
    if report.stats_note:
        lines.append(f"Note: {report.stats_note}.")
    if report.friedman_chi2 is not None:
        lines.append(
            f"Friedman chi-squared = {report.friedman_chi2:.4g} "
            f"(p = {report.friedman_p:.4g}) over {len(report.ranked_datasets)} datasets."
        )
    for r in report.nemenyi:
        lines.append(
            f"\nNemenyi critical difference at alpha={r.alpha:g} "
            f"(k={r.k}, N={r.n_datasets}): {r.critical_difference:.2f}"
        )
        for a, b, d, sig in r.pairwise:
            verdict = "significant" if sig else "not significant"
            lines.append(f"- {a} vs {b}: |rank diff| = {d:.2f} -> {verdict}")
    failed = [c for c in report.cells if not c.ok]
    if failed:
        lines.append("")
        lines.append("## Failed cells")
        lines.append("")
        for c in failed:
            lines.append(f"- {c.dataset} / {c.method}: {c.error}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def write_timing_csv(cells: list[TimingCell], path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["method", "ax_plus_as", "no_times_mo", "seconds_median"])
        for c in cells:
            w.writerow([c.method, c.ax_plus_as, c.no_times_mo, _fmt(c.seconds_median)])
    return path


def write_timing_curves(cells: list[TimingCell], directory) -> list[Path]:
    """Plot-ready curves: time vs instances at fixed features, and vice versa."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    out = []
    features = sorted({c.ax_plus_as for c in cells})
    instances = sorted({c.no_times_mo for c in cells})
    for f in features:
        p = directory / f"time_vs_instances_f{f}.csv"
        with open(p, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["method", "no_times_mo", "seconds_median"])
            for c in sorted(
                (c for c in cells if c.ax_plus_as == f),
                key=lambda c: (c.method, c.no_times_mo),
            ):
                w.writerow([c.method, c.no_times_mo, _fmt(c.seconds_median)])
        out.append(p)
    for n in instances:
        p = directory / f"time_vs_features_n{n}.csv"
        with open(p, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["method", "ax_plus_as", "seconds_median"])
            for c in sorted(
                (c for c in cells if c.no_times_mo == n),
                key=lambda c: (c.method, c.ax_plus_as),
            ):
                w.writerow([c.method, c.ax_plus_as, _fmt(c.seconds_median)])
        out.append(p)
    return out


def write_benchmark_outputs(report: BenchmarkReport, directory) -> dict[str, Path]:
    directory = Path(directory)
    return {
        "scores": write_scores_csv(report, directory / "scores.csv"),
        "stats": write_stats_json(report, directory / "stats.json"),
        "report": write_report_md(report, directory / "report.md"),
    }
