"""Portable dataset container: one directory per job.

Layout:
    datasets/<job_id>/manifest.json   canonical JSON describing the data
    datasets/<job_id>/data.bin        row-major little-endian float64 values

The manifest carries a SHA-256 checksum of the blob, so a load either
reproduces the written values bit-exactly or fails loudly.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping, Sequence


class DatasetIntegrityError(RuntimeError):
    """The on-disk container is incomplete, inconsistent, or corrupted."""


@dataclass(frozen=True)
class DatasetColumn:
    """Name, unit, and element type of one column in the blob."""

    name: str
    unit: str
    dtype: str = "f64"

    def to_jsonable(self) -> dict[str, str]:
        return {"name": self.name, "unit": self.unit, "dtype": self.dtype}


@dataclass(frozen=True)
class DatasetManifest:
    """Self-describing metadata for one persisted dataset."""

    job_id: str
    schema_id: str
    request: Mapping[str, Any]
    instruments: tuple[str, ...]
    columns: tuple[DatasetColumn, ...]
    row_count: int
    created_at: int
    checksum: str

    def to_jsonable(self) -> dict[str, Any]:
        return {
            "job_id": self.job_id,
            "schema_id": self.schema_id,
            "request": dict(self.request),
            "instruments": list(self.instruments),
            "columns": [column.to_jsonable() for column in self.columns],
            "row_count": self.row_count,
            "created_at": self.created_at,
            "checksum": self.checksum,
        }


def _manifest_from_jsonable(document: Any) -> DatasetManifest:
    if not isinstance(document, dict):
        raise DatasetIntegrityError("manifest must be a JSON object")
    try:
        columns = tuple(
            DatasetColumn(
                name=column["name"], unit=column["unit"], dtype=column["dtype"]
            )
            for column in document["columns"]
        )
        return DatasetManifest(
            job_id=document["job_id"],
            schema_id=document["schema_id"],
            request=document["request"],
            instruments=tuple(document["instruments"]),
            columns=columns,
            row_count=document["row_count"],
            created_at=document["created_at"],
            checksum=document["checksum"],
        )
    except (KeyError, TypeError) as exc:
        raise DatasetIntegrityError(f"manifest is missing or misshapes {exc}") from exc


def _pack_rows(columns: int, rows: Sequence[Sequence[float]]) -> bytes:
    flat: list[float] = []
    for row in rows:
        if len(row) != columns:
            raise DatasetIntegrityError(
                f"row has {len(row)} values, expected {columns}"
            )
        flat.extend(float(value) for value in row)
    return struct.pack(f"<{len(flat)}d", *flat)


def write_dataset(
    directory: Path,
    *,
    job_id: str,
    schema_id: str,
    request: Mapping[str, Any],
    instruments: Sequence[str],
    columns: Sequence[DatasetColumn],
    rows: Sequence[Sequence[float]],
    created_at: int,
) -> DatasetManifest:
    """Write manifest.json and data.bin under ``directory`` and return the manifest."""
    blob = _pack_rows(len(columns), rows)
    manifest = DatasetManifest(
        job_id=job_id,
        schema_id=schema_id,
        request=dict(request),
        instruments=tuple(instruments),
        columns=tuple(columns),
        row_count=len(rows),
        created_at=created_at,
        checksum=hashlib.sha256(blob).hexdigest(),
    )
    directory.mkdir(parents=True, exist_ok=True)
    (directory / "data.bin").write_bytes(blob)
    manifest_text = json.dumps(
        manifest.to_jsonable(), sort_keys=True, separators=(",", ":")
    )
    (directory / "manifest.json").write_text(manifest_text + "\n", encoding="utf-8")
    return manifest


def load_dataset(directory: Path) -> tuple[DatasetManifest, list[tuple[float, ...]]]:
    """Load and verify one dataset directory.

    Raises DatasetIntegrityError when files are missing, the checksum does not
    match, or the blob size disagrees with the manifest geometry.
    """
    directory = Path(directory)
    manifest_path = directory / "manifest.json"
    blob_path = directory / "data.bin"
    if not manifest_path.is_file() or not blob_path.is_file():
        raise DatasetIntegrityError(f"{directory} is not a dataset directory")
    try:
        document = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DatasetIntegrityError(f"manifest is not valid JSON: {exc}") from exc
    manifest = _manifest_from_jsonable(document)

    blob = blob_path.read_bytes()
    digest = hashlib.sha256(blob).hexdigest()
    if digest != manifest.checksum:
        raise DatasetIntegrityError(
            f"checksum mismatch: manifest says {manifest.checksum}, blob is {digest}"
        )
    column_count = len(manifest.columns)
    expected = manifest.row_count * column_count * 8
    if len(blob) != expected:
        raise DatasetIntegrityError(
            f"blob holds {len(blob)} bytes, geometry requires {expected}"
        )
    values = struct.unpack(f"<{manifest.row_count * column_count}d", blob)
    rows = [
        values[start : start + column_count]
        for start in range(0, len(values), column_count)
    ]
    return manifest, rows
