"""CSV ingestion in the ``subject,activity,ch_0,...,ch_{c-1}`` schema."""
import csv
import os
from dataclasses import dataclass

import numpy as np

from ..errors import ParseError, SchemaError
from .windows import RawRecording


@dataclass(frozen=True)
class DatasetSchema:
    channels: int
    labels: tuple = None  # allowed activity labels; None accepts any non-negative int


def expected_header(channels):
    return ["subject", "activity"] + [f"ch_{i}" for i in range(channels)]


def _csv_files(path):
    if os.path.isdir(path):
        files = sorted(os.path.join(path, f) for f in os.listdir(path) if f.endswith(".csv"))
        if not files:
            raise SchemaError(f"{path}: no .csv files found")
        return files
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    return [path]


def load_dataset(path, schema):
    """Read one CSV file (or every ``*.csv`` in a directory, sorted by name).

    A new recording starts whenever the (subject, activity) pair changes from
    one row to the next.
    """
    recordings = []
    for fname in _csv_files(path):
        recordings.extend(_load_file(fname, schema))
    return recordings


def _load_file(fname, schema):
    header = expected_header(schema.channels)
    allowed = None if schema.labels is None else set(schema.labels)
    recs = []
    key, rows = None, []

    def flush():
        if rows:
            recs.append(RawRecording(key[0], key[1], np.asarray(rows).T))

    with open(fname, newline="") as fh:
        reader = csv.reader(fh)
        first = next(reader, None)
        if first is None:
            raise SchemaError(f"{fname}: empty file")
        if [h.strip() for h in first] != header:
            raise SchemaError(f"{fname}: header has {len(first) - 2} channel columns, "
                              f"schema expects {schema.channels} ({','.join(header[:3])},...)")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(f"{fname}: expected {len(header)} fields, got {len(row)}", lineno)
            try:
                subject, activity = int(row[0]), int(row[1])
                values = [float(v) for v in row[2:]]
            except ValueError as exc:
                raise ParseError(f"{fname}: {exc}", lineno) from None
            if not np.all(np.isfinite(values)):
                raise ParseError(f"{fname}: non-finite sensor value", lineno)
            if activity < 0 or (allowed is not None and activity not in allowed):
                raise SchemaError(f"{fname}: line {lineno}: unknown activity label {activity}")
            if (subject, activity) != key:
                flush()
                key, rows = (subject, activity), []
            rows.append(values)
        flush()
    return recs


def write_dataset_csv(path, recordings):
    """Write recordings in load order; the inverse of ``load_dataset``."""
    if not recordings:
        raise SchemaError("no recordings to write")
    channels = recordings[0].channels
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(expected_header(channels))
        for rec in recordings:
            if rec.channels != channels:
                raise SchemaError("all recordings must share a channel count")
            for t in range(rec.length):
                writer.writerow([rec.subject_id, rec.activity_label]
                                + [repr(float(v)) for v in rec.samples[:, t]])
