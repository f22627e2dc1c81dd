"""Flat-file formats: count CSV, projector-set JSON, density-matrix JSON, tables.

CSV outputs may start with ``# key: value`` metadata lines; readers skip
them. Floats are written with ``repr`` so files round-trip exactly and are
byte-identical for identical inputs.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import RejectedInputError
from .tomography.counts import CountRecord
from .tomography.settings import MeasurementSetting, pauli_projector

COUNT_HEADER = ("setting_id", "outcome_index", "counts", "shots")


def config_hash(config: Mapping) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def metadata(config: Mapping, seed: int | None, version: str) -> dict:
    return {"config_hash": config_hash(config), "seed": seed, "version": version}


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _write_text(path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _metadata_lines(meta: Mapping | None) -> str:
    if not meta:
        return ""
    return "".join(f"# {k}: {_fmt(v)}\n" for k, v in meta.items())


def format_table(columns: Sequence[str], rows: Iterable[Sequence], meta: Mapping | None = None) -> str:
    buf = io.StringIO()
    buf.write(_metadata_lines(meta))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        if len(row) != len(columns):
            raise RejectedInputError("row length does not match header")
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def write_table(path, columns: Sequence[str], rows: Iterable[Sequence], meta: Mapping | None = None) -> None:
    _write_text(path, format_table(columns, rows, meta))


def _data_lines(text: str) -> list[str]:
    return [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]


def read_metadata(path) -> dict:
    out = {}
    for ln in Path(path).read_text(encoding="utf-8").splitlines():
        if not ln.startswith("#"):
            break
        key, _, value = ln[1:].partition(":")
        out[key.strip()] = value.strip()
    return out


# ---------------------------------------------------------------------------
# counts


def write_counts_csv(path, records: Sequence[CountRecord], meta: Mapping | None = None) -> None:
    rows = [(r.setting_id, r.outcome_index, r.counts, r.shots) for r in records]
    write_table(path, COUNT_HEADER, rows, meta)


def read_counts_csv(path) -> list[CountRecord]:
    lines = _data_lines(Path(path).read_text(encoding="utf-8"))
    if not lines:
        raise RejectedInputError(f"{path}: empty count file")
    reader = csv.reader(lines)
    header = tuple(h.strip() for h in next(reader))
    if header != COUNT_HEADER:
        raise RejectedInputError(f"{path}: header must be {','.join(COUNT_HEADER)}, got {','.join(header)}")
    records = []
    for n, row in enumerate(reader, start=2):
        if len(row) != 4:
            raise RejectedInputError(f"{path}: data row {n} has {len(row)} fields, expected 4")
        try:
            records.append(CountRecord(row[0], int(row[1]), int(row[2]), int(row[3])))
        except ValueError as exc:
            raise RejectedInputError(f"{path}: data row {n}: {exc}") from None
    return records


# ---------------------------------------------------------------------------
# complex matrices


def matrix_to_json(m: np.ndarray) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def matrix_from_json(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 3 or arr.shape[2] != 2 or arr.shape[0] != arr.shape[1]:
        raise RejectedInputError("matrix must be a square array of [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def write_density_matrix(path, rho: np.ndarray, meta: Mapping | None = None, extra: Mapping | None = None) -> None:
    doc = {"metadata": dict(meta or {}), "dim": int(rho.shape[0]), "rho": matrix_to_json(rho)}
    if extra:
        doc.update(extra)
    _write_text(path, json.dumps(doc, indent=1) + "\n")


def read_density_matrix(path) -> np.ndarray:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return matrix_from_json(doc["rho"])


# ---------------------------------------------------------------------------
# projector sets


def _outcome_from_json(item):
    if isinstance(item, str):
        return pauli_projector(item)
    return matrix_from_json(item)


def settings_from_json(doc) -> list[MeasurementSetting]:
    entries = doc.get("settings") if isinstance(doc, dict) else doc
    if not isinstance(entries, list) or not entries:
        raise RejectedInputError("projector set must contain a non-empty 'settings' list")
    settings = []
    for n, entry in enumerate(entries):
        try:
            outcomes = entry["outcomes"]
            sid = str(entry.get("id") or entry.get("label") or f"s{n}")
        except (KeyError, TypeError, AttributeError):
            raise RejectedInputError(f"setting #{n} needs an 'outcomes' list") from None
        labels = tuple(o for o in outcomes if isinstance(o, str))
        settings.append(
            MeasurementSetting(
                id=sid,
                outcomes=np.array([_outcome_from_json(o) for o in outcomes]),
                label=entry.get("label"),
                outcome_labels=labels if len(labels) == len(outcomes) else (),
            )
        )
    return settings


def settings_to_json(settings: Sequence[MeasurementSetting]) -> dict:
    out = []
    for s in settings:
        if s.outcome_labels and len(s.outcome_labels) == len(s):
            outcomes = list(s.outcome_labels)
        else:
            outcomes = [matrix_to_json(p) for p in s.outcomes]
        out.append({"id": s.id, "label": s.label, "outcomes": outcomes})
    return {"settings": out}


def read_projector_set(path) -> list[MeasurementSetting]:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise RejectedInputError(f"{path}:{exc.lineno}: {exc.msg}") from None
    return settings_from_json(doc)


def write_projector_set(path, settings: Sequence[MeasurementSetting]) -> None:
    _write_text(path, json.dumps(settings_to_json(settings), indent=1) + "\n")
