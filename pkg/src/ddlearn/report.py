"""Consolidated accuracy tables from finished run directories.

Each row is one (run directory, variant, fraction); columns are the held-out
tasks plus the average. Cells read ``mean ± std`` in percent over seeds and
are recomputed from the per-run JSON records, not from ``summary.json``.
"""
import csv
import glob
import json
import os

from .errors import ReportError
from .experiment import FORMAT_VERSION, RUN_FORMAT, summarize

REQUIRED = ("fraction", "task", "seed", "target_accuracy", "variant")


def read_runs(run_dir):
    """All per-run JSON records under ``run_dir`` (or its ``runs/`` subfolder)."""
    base = os.path.join(run_dir, "runs") if os.path.isdir(os.path.join(run_dir, "runs")) else run_dir
    files = sorted(glob.glob(os.path.join(base, "*.json")))
    records = []
    for path in files:
        try:
            with open(path) as fh:
                rec = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ReportError(f"{path}: unreadable run record ({exc})") from None
        if not isinstance(rec, dict) or rec.get("format") != RUN_FORMAT:
            continue
        records.append((path, rec))
    if not records:
        raise ReportError(f"{run_dir}: no completed runs found")
    return records


def _check_schema(groups):
    bad = []
    for run_dir, records in groups.items():
        for path, rec in records:
            if rec.get("version") != FORMAT_VERSION or any(k not in rec for k in REQUIRED):
                bad.append(path)
    if bad:
        raise ReportError("incompatible run records: " + ", ".join(bad))
    task_sets = {d: tuple(sorted({r["task"] for _, r in recs})) for d, recs in groups.items()}
    reference = next(iter(task_sets.values()))
    odd = [d for d, t in task_sets.items() if t != reference]
    if odd:
        raise ReportError(f"runs disagree on the task layout {list(reference)}: " + ", ".join(
            f"{d} has tasks {list(task_sets[d])}" for d in odd))
    return reference


def build_table(run_dirs):
    """Rows of ``{source, variant, fraction, cells: [(mean, std, n)], average: (mean, std, n)}``."""
    if not run_dirs:
        raise ReportError("no run directories given")
    groups = {d: read_runs(d) for d in run_dirs}
    tasks = _check_schema(groups)
    rows = []
    for run_dir, records in groups.items():
        recs = [r for _, r in records]
        for variant in sorted({r["variant"] for r in recs}):
            summary = summarize([r for r in recs if r["variant"] == variant], variant)
            for block in summary["fractions"]:
                by_task = {t["task"]: t for t in block["tasks"]}
                cells = [(by_task[t]["accuracy_mean"], by_task[t]["accuracy_std"],
                          len(by_task[t]["accuracies"])) if t in by_task else None for t in tasks]
                avg = block["average"]
                rows.append({"source": run_dir, "variant": variant, "fraction": block["fraction"],
                             "cells": cells, "average": (avg["accuracy_mean"], avg["accuracy_std"],
                                                         min(c[2] for c in cells if c))})
    return list(tasks), rows


def fmt_cell(cell):
    if cell is None:
        return "-"
    mean, std, _ = cell
    return f"{100 * mean:.2f} ± {100 * std:.2f}"


def _header(tasks):
    return ["source", "variant", "fraction"] + [f"T{t}" for t in tasks] + ["Avg"]


def _row_values(row):
    return ([row["source"], row["variant"], f"{row['fraction']:.2f}"]
            + [fmt_cell(c) for c in row["cells"]] + [fmt_cell(row["average"])])


def format_text(tasks, rows):
    table = [_header(tasks)] + [_row_values(r) for r in rows]
    widths = [max(len(line[i]) for line in table) for i in range(len(table[0]))]
    lines = ["  ".join(v.ljust(w) for v, w in zip(line, widths)).rstrip() for line in table]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def write_csv(path, tasks, rows):
    """Machine-readable twin of the text table: separate mean/std columns in percent."""
    header = ["source", "variant", "fraction"]
    for name in [f"T{t}" for t in tasks] + ["Avg"]:
        header += [f"{name}_mean", f"{name}_std"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for r in rows:
            values = [r["source"], r["variant"], f"{r['fraction']:.2f}"]
            for cell in r["cells"] + [r["average"]]:
                values += ["", ""] if cell is None else [f"{100 * cell[0]:.4f}", f"{100 * cell[1]:.4f}"]
            writer.writerow(values)
    return path
