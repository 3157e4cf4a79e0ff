"""CSV point files and the versioned JSON artifact formats.

Point CSV: one point per row, ``d`` numeric columns. An optional header row is
allowed. With ``weights_column`` set, that column (by header name or 0-based
index) is read as the per-point weight and excluded from the coordinates.

Shape JSON::

    {"variant": "kpoints", "centers": [[...], ...]}
    {"variant": "klines",  "anchors": [[...], ...], "directions": [[...], ...]}
    {"variant": "jflat",   "anchor": [...], "basis": [[...], ...]}
    {"variant": "kjflats", "flats": [{"anchor": [...], "basis": [[...], ...]}, ...]}
"""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path
from typing import Any

import numpy as np

from .errors import InputError
from .geometry import JFlat, KJFlatSet, KLineSet, KPointSet, PointSet, Shape

SCHEMA_VERSION = 1


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def read_points_csv(path, weights_column: str | int | None = None) -> PointSet:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise InputError(f"{path}: no points")
    header = None
    if not all(_is_number(c) for c in rows[0]):
        header, rows = [c.strip() for c in rows[0]], rows[1:]
    if not rows:
        raise InputError(f"{path}: no points")
    try:
        data = np.array([[float(c) for c in r] for r in rows], dtype=float)
    except ValueError as exc:
        raise InputError(f"{path}: non-numeric entry ({exc})") from None
    if data.ndim != 2:
        raise InputError(f"{path}: rows have differing lengths")
    weights = None
    if weights_column is not None:
        col = _resolve_column(weights_column, header, data.shape[1], path)
        weights = data[:, col]
        data = np.delete(data, col, axis=1)
    return PointSet(data, weights)


def _resolve_column(column, header, ncols, path) -> int:
    if isinstance(column, str) and not column.lstrip("-").isdigit():
        if header is None or column not in header:
            raise InputError(f"{path}: no column named {column!r}")
        return header.index(column)
    col = int(column)
    if col < 0:
        col += ncols
    if not 0 <= col < ncols:
        raise InputError(f"{path}: weight column {column} out of range")
    return col


def write_points_csv(path, coords: np.ndarray, weights: np.ndarray | None = None) -> None:
    coords = np.atleast_2d(coords)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        d = coords.shape[1]
        w.writerow([f"x{i}" for i in range(d)] + (["weight"] if weights is not None else []))
        for i, row in enumerate(coords):
            vals = [repr(float(v)) for v in row]
            if weights is not None:
                vals.append(repr(float(weights[i])))
            w.writerow(vals)


def shape_to_json(shape: Shape) -> dict[str, Any]:
    if isinstance(shape, KPointSet):
        return {"variant": "kpoints", "centers": shape.centers.tolist()}
    if isinstance(shape, KLineSet):
        return {"variant": "klines", "anchors": shape.points.tolist(), "directions": shape.directions.tolist()}
    if isinstance(shape, JFlat):
        return {"variant": "jflat", "anchor": shape.anchor.tolist(), "basis": shape.basis.tolist()}
    if isinstance(shape, KJFlatSet):
        return {"variant": "kjflats", "flats": [shape_to_json(f) for f in shape.flats]}
    raise InputError(f"not a shape: {type(shape).__name__}")


def shape_from_json(obj: dict[str, Any]) -> Shape:
    try:
        variant = obj["variant"]
        if variant == "kpoints":
            return KPointSet(np.asarray(obj["centers"], dtype=float))
        if variant == "klines":
            return KLineSet(np.asarray(obj["anchors"], float), np.asarray(obj["directions"], float))
        if variant == "jflat":
            return _flat_from_json(obj)
        if variant == "kjflats":
            return KJFlatSet(tuple(_flat_from_json(f) for f in obj["flats"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed shape JSON: {exc}") from None
    raise InputError(f"unknown shape variant {obj.get('variant')!r}")


def _flat_from_json(obj) -> JFlat:
    anchor = np.asarray(obj["anchor"], dtype=float)
    basis = np.asarray(obj.get("basis", []), dtype=float).reshape(-1, anchor.shape[0])
    return JFlat(anchor, basis)


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


def canonical_json(obj: Any) -> str:
    """Deterministic JSON text: sorted keys, no whitespace variation."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=_default, allow_nan=False)


def config_hash(obj: Any) -> str:
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()[:16]


def dump_artifact(obj: dict[str, Any], path=None) -> str:
    """Pretty JSON with ``"schema": 1``; written to ``path`` when given."""
    body = {"schema": SCHEMA_VERSION, **obj}
    text = json.dumps(body, sort_keys=True, indent=2, default=_default, allow_nan=False) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def load_artifact(path) -> dict[str, Any]:
    try:
        obj = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    if obj.get("schema") != SCHEMA_VERSION:
        raise InputError(f"{path}: unsupported schema {obj.get('schema')!r}")
    return obj
