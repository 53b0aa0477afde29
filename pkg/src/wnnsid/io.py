"""CSV datasets, JSON model files and report documents.

Dataset layout: a header ``t,u1,...,u<m>,y1,...,y<p>`` followed by one
sample per line, ``t`` counting up from 0. Model files are JSON with the
dimensions, row-major ``A, B, C, D, K`` and a free-form ``metadata`` block.
"""

from __future__ import annotations

import csv
import json
import math
import re
from pathlib import Path

import numpy as np

from .errors import DataFormatError
from .hankel_ops import TimeSeries
from .subspace import StateSpaceModel

_COLUMN = re.compile(r"^([uy])(\d+)$")


def _parse_header(fields, path):
    if not fields or fields[0].strip() != "t":
        raise DataFormatError(f"{path}:1: header must start with 't'")
    names = [f.strip() for f in fields[1:]]
    kinds = []
    for name in names:
        m = _COLUMN.match(name)
        if not m:
            raise DataFormatError(f"{path}:1: bad column name {name!r}")
        kinds.append((m.group(1), int(m.group(2))))
    n_m = sum(1 for k, _ in kinds if k == "u")
    n_p = len(kinds) - n_m
    expected = [("u", i + 1) for i in range(n_m)] + [("y", i + 1) for i in range(n_p)]
    if kinds != expected:
        raise DataFormatError(f"{path}:1: columns must be u1..u{n_m} followed by y1..y{n_p}")
    if n_m < 1 or n_p < 1:
        raise DataFormatError(f"{path}:1: need at least one input and one output column")
    return n_m, n_p


def read_dataset(path) -> tuple[TimeSeries, TimeSeries]:
    """Read a dataset CSV into ``(u, y)``."""
    path = Path(path)
    try:
        fh = path.open(newline="")
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path}: empty file") from None
        n_m, n_p = _parse_header(header, path)
        width = 1 + n_m + n_p
        rows = []
        for lineno, fields in enumerate(reader, start=2):
            if not fields:
                continue
            if len(fields) != width:
                raise DataFormatError(f"{path}:{lineno}: expected {width} fields, got {len(fields)}")
            try:
                t = int(fields[0])
                vals = [float(f) for f in fields[1:]]
            except ValueError as exc:
                raise DataFormatError(f"{path}:{lineno}: {exc}") from None
            if t != len(rows):
                raise DataFormatError(f"{path}:{lineno}: sample index {t}, expected {len(rows)}")
            if not all(math.isfinite(v) for v in vals):
                raise DataFormatError(f"{path}:{lineno}: non-finite value")
            rows.append(vals)
    if not rows:
        raise DataFormatError(f"{path}: no samples")
    data = np.array(rows)
    return TimeSeries(data[:, :n_m]), TimeSeries(data[:, n_m:])


def write_dataset(path, u: TimeSeries, y: TimeSeries):
    if u.length != y.length:
        raise ValueError("input and output records differ in length")
    header = ["t"] + [f"u{i + 1}" for i in range(u.channels)] + [f"y{i + 1}" for i in range(y.channels)]
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for k, (uk, yk) in enumerate(zip(u.data, y.data)):
            w.writerow([k] + [repr(float(v)) for v in uk] + [repr(float(v)) for v in yk])


def model_to_dict(model: StateSpaceModel, metadata: dict | None = None) -> dict:
    return {
        "n_x": model.order,
        "n_m": model.n_inputs,
        "n_p": model.n_outputs,
        "A": model.A.reshape(-1).tolist(),
        "B": model.B.reshape(-1).tolist(),
        "C": model.C.reshape(-1).tolist(),
        "D": model.D.reshape(-1).tolist(),
        "K": model.K.reshape(-1).tolist(),
        "stabilized": model.stabilized,
        "metadata": metadata or {},
    }


def model_from_dict(doc: dict) -> tuple[StateSpaceModel, dict]:
    try:
        n, m, p = int(doc["n_x"]), int(doc["n_m"]), int(doc["n_p"])
        shapes = {"A": (n, n), "B": (n, m), "C": (p, n), "D": (p, m), "K": (n, p)}
        mats = {}
        for name, shape in shapes.items():
            flat = np.array(doc[name], dtype=float)
            if flat.size != shape[0] * shape[1]:
                raise DataFormatError(f"{name} has {flat.size} entries, expected {shape[0] * shape[1]}")
            mats[name] = flat.reshape(shape)
    except (KeyError, TypeError, ValueError) as exc:
        raise DataFormatError(f"invalid model document: {exc}") from exc
    model = StateSpaceModel(**mats, stabilized=bool(doc.get("stabilized", False)))
    return model, doc.get("metadata", {})


def write_json(path, doc):
    """Deterministic JSON (fixed key order, repr floats, trailing newline)."""
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, ValueError) as exc:
        raise DataFormatError(f"cannot read {path}: {exc}") from exc


def write_model(path, model: StateSpaceModel, metadata: dict | None = None):
    write_json(path, model_to_dict(model, metadata))


def read_model(path) -> tuple[StateSpaceModel, dict]:
    return model_from_dict(read_json(path))
