"""Task-suite orchestration: every (fraction, held-out group, seed) run, plus summaries.

Per run, ``runs/`` receives an epoch-trace CSV and a JSON record named
``f{fraction}_t{task}_s{seed}``. ``summary.json`` aggregates accuracy per task
(mean and sample std over seeds) and an average row per fraction. Nothing
time-dependent is written, so identical configs give byte-identical files.
"""
import csv
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .data import DatasetSchema, load_dataset, make_tasks, segment_all, synth_generate
from .data.splits import build_task_data
from .errors import ConfigError, DDLearnError, SuiteError
from .metrics import evaluate, mean_std
from .trainer import LOSS_COLUMNS, export_embeddings, infer, train, variant_config

log = logging.getLogger(__name__)

RUN_FORMAT = "ddlearn-run"
SUMMARY_FORMAT = "ddlearn-summary"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class RunKey:
    fraction: float
    task: int
    seed: int

    @property
    def stem(self):
        return f"f{self.fraction:.2f}_t{self.task}_s{self.seed}"


def load_recordings(config):
    if config.dataset == "synthetic":
        return synth_generate(config.synth, config.synth_seed)
    if not config.data_path or not os.path.exists(config.data_path):
        raise ConfigError(f"data path {config.data_path!r} does not exist")
    return load_dataset(config.data_path, DatasetSchema(config.channels))


def load_windows(config):
    ws = segment_all(load_recordings(config), config.window, config.overlap)
    if ws.channels != config.channels:
        raise ConfigError(f"data has {ws.channels} channels, config expects {config.channels}")
    return ws


def run_keys(config, subjects):
    keys = []
    for fraction in config.fractions:
        tasks = make_tasks(subjects, config.groups, fraction)
        keys.extend(RunKey(float(fraction), i, int(seed))
                    for i in range(len(tasks)) for seed in config.seeds)
    return keys


def run_one(config, windows, key, out_dir=None):
    """Train and evaluate a single run; returns its JSON-ready record."""
    subjects = sorted(set(windows.subject.tolist()))
    split = make_tasks(subjects, config.groups, key.fraction)[key.task]
    td = build_task_data(windows, split, key.seed)
    tc = variant_config(replace(config.train, seed=key.seed), config.variant)
    result = train(tc, config.architecture, td.train, td.val)
    report = evaluate(infer(result.model, td.target), td.target.y, config.n_classes)
    record = {
        "format": RUN_FORMAT,
        "version": FORMAT_VERSION,
        "dataset": config.dataset,
        "variant": config.variant,
        "fraction": key.fraction,
        "task": key.task,
        "seed": key.seed,
        "target_subjects": list(split.target_subjects),
        "n_train": len(td.train),
        "n_val": len(td.val),
        "n_target": len(td.target),
        "best_epoch": result.state.best_epoch,
        "val_accuracy": result.state.best_val_accuracy,
        "target_accuracy": report.accuracy,
        "target_metrics": report.to_dict(),
        "history": result.state.history,
    }
    if out_dir is not None:
        write_run(out_dir, key, record)
        if config.save_checkpoints:
            result.model.save(os.path.join(out_dir, key.stem + ".ckpt.json"),
                              {"run": key.stem, "variant": config.variant})
        if config.export_embeddings:
            export_embeddings(result.model, td.target,
                              os.path.join(out_dir, key.stem + ".embeddings.csv"))
    return record


def _run_job(args):
    config, windows, key, out_dir = args
    return run_one(config, windows, key, out_dir)


def write_run(out_dir, key, record):
    with open(os.path.join(out_dir, key.stem + ".csv"), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        columns = ["epoch", *LOSS_COLUMNS, "val_accuracy"]
        writer.writerow(columns)
        for row in record["history"]:
            writer.writerow([row["epoch"]] + [repr(float(row[c])) for c in columns[1:]])
    body = {k: v for k, v in record.items() if k != "history"}
    _dump_json(os.path.join(out_dir, key.stem + ".json"), body)


def _dump_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def summarize(records, variant=None, dataset=None):
    """Per-task mean/std over seeds and an average row, for every fraction.

    The average row's mean is the mean of per-task means; its std is the
    sample std over seeds of the across-task average accuracy.
    """
    by_fraction = {}
    for r in records:
        by_fraction.setdefault(float(r["fraction"]), []).append(r)
    out = []
    for fraction in sorted(by_fraction):
        rs = by_fraction[fraction]
        tasks = []
        for task in sorted({r["task"] for r in rs}):
            trs = sorted((r for r in rs if r["task"] == task), key=lambda r: r["seed"])
            accs = [r["target_accuracy"] for r in trs]
            m, s = mean_std(accs)
            tasks.append({"task": task, "target_subjects": trs[0]["target_subjects"],
                          "seeds": [r["seed"] for r in trs], "accuracies": accs,
                          "accuracy_mean": m, "accuracy_std": s})
        seeds = sorted({r["seed"] for r in rs})
        per_seed = []
        for seed in seeds:
            accs = [r["target_accuracy"] for r in rs if r["seed"] == seed]
            if len(accs) == len(tasks):
                per_seed.append(float(np.mean(accs)))
        avg_std = mean_std(per_seed)[1] if per_seed else 0.0
        out.append({"fraction": fraction, "tasks": tasks,
                    "average": {"accuracy_mean": float(np.mean([t["accuracy_mean"] for t in tasks])),
                                "accuracy_std": avg_std}})
    return {"format": SUMMARY_FORMAT, "version": FORMAT_VERSION, "variant": variant,
            "dataset": dataset, "fractions": out}


def run_task_suite(config, out_dir=None, windows=None, workers=None):
    """Run every (fraction, task, seed) and write per-run files plus ``summary.json``.

    A failing run stops the suite with :class:`SuiteError`; the records of
    completed runs and a partial summary are still written.
    """
    if windows is None:
        windows = load_windows(config)
    subjects = sorted(set(windows.subject.tolist()))
    keys = run_keys(config, subjects)
    runs_dir = None
    if out_dir is not None:
        runs_dir = os.path.join(out_dir, "runs")
        os.makedirs(runs_dir, exist_ok=True)
        config.write(os.path.join(out_dir, "config.ini"))
    workers = config.workers if workers is None else workers

    records, failure = [], None
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_job, (config, windows, k, runs_dir)) for k in keys]
            for key, fut in zip(keys, futures):
                try:
                    records.append(fut.result())
                except DDLearnError as exc:
                    failure = failure or (key, exc)
    else:
        for key in keys:
            try:
                records.append(run_one(config, windows, key, runs_dir))
            except DDLearnError as exc:
                failure = (key, exc)
                break
            log.info("run %s target accuracy %.4f", key.stem, records[-1]["target_accuracy"])

    summary = summarize(records, config.variant, config.dataset)
    summary["status"] = "complete" if failure is None else "failed"
    summary["runs"] = [RunKey(r["fraction"], r["task"], r["seed"]).stem for r in records]
    if out_dir is not None:
        _dump_json(os.path.join(out_dir, "summary.json"), summary)
    if failure is not None:
        key, exc = failure
        raise SuiteError(f"run {key.stem} (task {key.task}, seed {key.seed}, fraction "
                         f"{key.fraction}) failed: {exc}", completed=summary["runs"]) from exc
    return summary
