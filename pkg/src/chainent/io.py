"""Plain-text readers and writers for schedules, covariances and result tables.

Every table carries '#'-prefixed ``key=value`` metadata lines ahead of a
column header. Floats are written in shortest round-trip form so identical
inputs produce byte-identical files.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from . import __version__
from .chain import CouplingSchedule, CovarianceMatrix


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x) + 0.0)  # shortest round-trip form; folds -0.0
    return str(x)


def _meta_lines(meta: Mapping | None) -> list[str]:
    items = {"code_version": __version__}
    items.update(meta or {})
    return [f"# {k}={fmt(v)}" for k, v in items.items()]


def write_table(path, columns: Iterable[str], rows: Iterable, meta: Mapping | None = None) -> Path:
    path = Path(path)
    lines = _meta_lines(meta)
    lines.append(",".join(columns))
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n")
    return path


def read_table(path) -> tuple[dict, list[str], np.ndarray]:
    """Returns ``(meta, columns, data)`` for a file written by :func:`write_table`."""
    meta, columns, rows = {}, None, []
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        if line.startswith("#"):
            key, sep, value = line[1:].strip().partition("=")
            if sep:
                meta[key.strip()] = value.strip()
        elif columns is None:
            columns = line.split(",")
        else:
            rows.append([float(v) for v in line.split(",")])
    data = np.array(rows, dtype=float).reshape(-1, len(columns or []))
    return meta, columns or [], data


def read_schedule(path) -> CouplingSchedule:
    """Two whitespace- or comma-separated columns (t, c); '#' starts a comment."""
    rows = []
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        if len(parts) != 2:
            raise ValueError(f"{path}: expected two columns, got {raw!r}")
        try:
            rows.append((float(parts[0]), float(parts[1])))
        except ValueError:
            # a header row such as "t c"
            if rows:
                raise ValueError(f"{path}: non-numeric row {raw!r}") from None
    if not rows:
        raise ValueError(f"{path}: no schedule samples")
    t, c = np.array(rows).T
    return CouplingSchedule(t, c)


def write_schedule(path, schedule: CouplingSchedule, meta: Mapping | None = None) -> Path:
    path = Path(path)
    lines = _meta_lines(meta) + ["# t c"]
    lines.extend(f"{fmt(t)} {fmt(c)}" for t, c in zip(schedule.times, schedule.values))
    path.write_text("\n".join(lines) + "\n")
    return path


def write_covariance(path, cov: CovarianceMatrix) -> Path:
    path = Path(path)
    lines = [f"# N={cov.n_osc} omega0={fmt(cov.omega0)} t={fmt(cov.t)}"]
    lines.extend(",".join(fmt(v) for v in row) for row in cov.matrix)
    path.write_text("\n".join(lines) + "\n")
    return path


def read_covariance(path) -> CovarianceMatrix:
    text = Path(path).read_text().splitlines()
    head = dict(tok.split("=") for tok in text[0].lstrip("#").split())
    mat = np.array([[float(v) for v in line.split(",")] for line in text[1:] if line.strip()])
    if mat.shape != (2 * int(head["N"]),) * 2:
        raise ValueError(f"{path}: matrix shape {mat.shape} does not match N={head['N']}")
    return CovarianceMatrix(mat, float(head["omega0"]), float(head["t"]))


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_plain(obj), indent=2, sort_keys=True) + "\n")
    return path


def _plain(obj):
    if isinstance(obj, Mapping):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj
