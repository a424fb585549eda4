"""JSON checkpoint container.

Layout::

    {"format": "ddlearn-checkpoint", "version": 1, "header": {...},
     "params": [{"name": ..., "shape": [...], "values": [...row-major...]}, ...]}

Floats are written with ``repr`` precision, so a save/load round trip is exact.
"""
import json

import numpy as np

from ..errors import SchemaError

FORMAT = "ddlearn-checkpoint"
VERSION = 1


def save_checkpoint(path, params, header=None):
    """Write ``params`` (mapping name -> Parameter or array) to ``path``."""
    entries = []
    for name, value in params.items():
        if not isinstance(value, np.ndarray):
            value = value.data
        arr = np.asarray(value, dtype=np.float64)
        entries.append({"name": name, "shape": list(arr.shape),
                        "values": arr.reshape(-1).tolist()})
    doc = {"format": FORMAT, "version": VERSION, "header": header or {}, "params": entries}
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_checkpoint(path):
    """Return ``(header, {name: ndarray})``."""
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(doc, dict) or doc.get("format") != FORMAT:
        raise SchemaError(f"{path}: not a {FORMAT} file")
    if doc.get("version") != VERSION:
        raise SchemaError(f"{path}: unsupported checkpoint version {doc.get('version')!r}")
    params = {}
    for entry in doc["params"]:
        shape = tuple(entry["shape"])
        values = np.asarray(entry["values"], dtype=np.float64)
        if values.size != int(np.prod(shape, dtype=np.int64)):
            raise SchemaError(f"{path}: parameter {entry['name']} has {values.size} values "
                              f"for shape {shape}")
        params[entry["name"]] = values.reshape(shape)
    return doc["header"], params
