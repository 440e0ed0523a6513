"""File formats for signal batches and metric tables.

Signal batches are stored as raw little-endian float32 with a JSON sidecar
(same path plus ".json") carrying the shape and sample rate. Tables are plain
CSV; floats are written with repr so they round-trip exactly.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .exceptions import CsvFormatError, ValidationError

__all__ = ["save_signals", "load_signals", "write_csv", "read_csv", "format_value"]


def save_signals(path: str | Path, values: np.ndarray, fs: float | None = None) -> None:
    values = np.asarray(values)
    if values.ndim != 2:
        raise ValidationError(f"expected (B, N) signals, got {values.shape}")
    path = Path(path)
    path.write_bytes(np.ascontiguousarray(values, dtype="<f4").tobytes())
    sidecar = {"dtype": "float32", "fs": fs, "shape": list(values.shape)}
    Path(str(path) + ".json").write_text(json.dumps(sidecar, sort_keys=True) + "\n")


def load_signals(path: str | Path) -> tuple[np.ndarray, float | None]:
    path = Path(path)
    sidecar_path = Path(str(path) + ".json")
    if not sidecar_path.exists():
        raise ValidationError(f"missing sidecar {sidecar_path}")
    meta = json.loads(sidecar_path.read_text())
    shape = tuple(meta["shape"])
    raw = np.frombuffer(path.read_bytes(), dtype="<f4")
    if raw.size != int(np.prod(shape)):
        raise ValidationError(
            f"{path}: payload holds {raw.size} samples, sidecar says {shape}"
        )
    return raw.reshape(shape).astype(np.float32), meta.get("fs")


def format_value(x) -> str:
    """CSV cell text: floats via repr so parsing them back is lossless."""
    if isinstance(x, (np.floating, float)):
        return repr(float(x))
    if isinstance(x, (np.integer, int)):
        return str(int(x))
    return str(x)


def write_csv(path: str | Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            if len(row) != len(header):
                raise ValidationError(
                    f"row has {len(row)} cells, header has {len(header)}"
                )
            writer.writerow([format_value(x) for x in row])


def read_csv(path: str | Path) -> tuple[list[str], list[list[str]]]:
    """Header and string rows; width mismatches raise with the line number."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvFormatError(1, "file is empty") from None
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise CsvFormatError(lineno, f"expected {len(header)} cells, got {len(row)}")
            rows.append(row)
    return header, rows
