"""Append-only persistence for throughput samples.

The native format is a JSON Lines log: one flattened record per line,
fsynced on append so a crash never loses an acknowledged record. Recovery
tolerates exactly one torn trailing line (an append that died mid-write);
corruption anywhere else is refused rather than silently skipped.

Export and import speak the same JSONL layout plus CSV with a fixed column
order, so a store can be dumped, shipped, and reloaded losslessly.
"""

from __future__ import annotations

import csv
import io
import json
import os
import threading
from dataclasses import dataclass
from datetime import datetime

from .errors import BatchImportError, StorageError, ValidationError
from .model import (
    SCHEMA_VERSION,
    ThroughputSample,
    format_rfc3339,
    parse_rfc3339,
)

CSV_COLUMNS = [
    "record_id",
    "timestamp_utc",
    "household_id",
    "device_id",
    "path",
    "throughput_mbps",
    "duration_seconds",
    "bytes_transferred",
    "tool",
    "schema_version",
]

EXPORT_FORMATS = ("jsonl", "csv")


@dataclass(frozen=True)
class SampleRecord:
    """A persisted sample: the measurement plus its assigned identity."""

    record_id: int
    sample: ThroughputSample
    schema_version: int = SCHEMA_VERSION

    def to_json_dict(self) -> dict:
        body = self.sample.to_json_dict()
        body["record_id"] = self.record_id
        body["schema_version"] = self.schema_version
        return body

    @classmethod
    def from_json_dict(cls, body: dict) -> "SampleRecord":
        try:
            record_id = body["record_id"]
            schema_version = body["schema_version"]
        except KeyError as exc:
            raise ValidationError(f"record missing field {exc.args[0]!r}") from exc
        if not isinstance(record_id, int) or isinstance(record_id, bool) or record_id < 1:
            raise ValidationError("record_id must be a positive integer")
        if schema_version != SCHEMA_VERSION:
            raise ValidationError(f"unsupported schema_version {schema_version!r}")
        sample = ThroughputSample.from_json_dict(body)
        return cls(record_id=record_id, sample=sample, schema_version=schema_version)


@dataclass(frozen=True)
class QueryFilter:
    household_id: str | None = None
    path: str | None = None
    from_utc: datetime | None = None
    to_utc: datetime | None = None

    def validate(self) -> None:
        if self.from_utc is not None and self.to_utc is not None:
            if self.from_utc >= self.to_utc:
                raise ValueError("from_utc must be before to_utc")

    def matches(self, record: SampleRecord) -> bool:
        s = record.sample
        if self.household_id is not None and s.household_id != self.household_id:
            return False
        if self.path is not None and s.path != self.path:
            return False
        if self.from_utc is not None and s.timestamp_utc < self.from_utc:
            return False
        if self.to_utc is not None and s.timestamp_utc >= self.to_utc:
            return False
        return True


def _record_sort_key(record: SampleRecord):
    return (record.sample.timestamp_utc, record.record_id)


class SampleStore:
    """Single-writer, many-reader sample log backed by one JSONL file.

    Appends are serialized under a lock and fsynced before returning;
    queries snapshot the in-memory record list, so they always see a
    consistent prefix of the log even while appends are in flight.
    """

    def __init__(self, path: str | os.PathLike):
        self.path = os.fspath(path)
        self._lock = threading.Lock()
        self._records: list[SampleRecord] = []
        self._next_id = 1
        self._fh = None
        self._load()
        self._fh = open(self.path, "ab")

    def _load(self) -> None:
        if not os.path.exists(self.path):
            with open(self.path, "ab"):
                pass
            return
        try:
            with open(self.path, "rb") as fh:
                data = fh.read()
        except OSError as exc:
            raise StorageError(f"cannot read {self.path}: {exc}") from exc

        records: list[SampleRecord] = []
        offset = 0
        line_number = 0
        while offset < len(data):
            end = data.find(b"\n", offset)
            if end == -1:
                # Unterminated tail: a torn in-flight append. Drop it.
                self._truncate(offset)
                break
            line = data[offset:end]
            line_number += 1
            if line.strip():
                try:
                    body = json.loads(line.decode("utf-8"))
                    record = SampleRecord.from_json_dict(body)
                except (ValueError, ValidationError) as exc:
                    raise StorageError(
                        f"{self.path} line {line_number} is corrupt: {exc}"
                    ) from exc
                if records and record.record_id <= records[-1].record_id:
                    raise StorageError(
                        f"{self.path} line {line_number}: record ids not increasing"
                    )
                records.append(record)
            offset = end + 1
        self._records = records
        self._next_id = records[-1].record_id + 1 if records else 1

    def _truncate(self, size: int) -> None:
        with open(self.path, "r+b") as fh:
            fh.truncate(size)

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def __enter__(self) -> "SampleStore":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    def __len__(self) -> int:
        with self._lock:
            return len(self._records)

    def append_sample(self, sample: ThroughputSample) -> int:
        """Validate, persist, and index one sample; returns its record id."""
        return self.append_many([sample])[0]

    def append_many(self, samples: list[ThroughputSample]) -> list[int]:
        """Append a batch atomically: validate everything, then one write+fsync."""
        for sample in samples:
            sample.validate()
        with self._lock:
            if self._fh is None:
                raise StorageError("store is closed")
            records = []
            lines = []
            next_id = self._next_id
            for sample in samples:
                record = SampleRecord(record_id=next_id, sample=sample)
                records.append(record)
                lines.append(_record_line(record))
                next_id += 1
            try:
                self._fh.write(b"".join(lines))
                self._fh.flush()
                os.fsync(self._fh.fileno())
            except OSError as exc:
                raise StorageError(f"append to {self.path} failed: {exc}") from exc
            self._records.extend(records)
            self._next_id = next_id
            return [r.record_id for r in records]

    def query_samples(self, query: QueryFilter | None = None) -> list[SampleRecord]:
        """Matching records ordered by timestamp, then record id."""
        query = query or QueryFilter()
        query.validate()
        with self._lock:
            snapshot = list(self._records)
        matched = [r for r in snapshot if query.matches(r)]
        matched.sort(key=_record_sort_key)
        return matched

    def export_records(self, query: QueryFilter | None = None, format: str = "jsonl") -> bytes:
        return export_records(self.query_samples(query), format)

    def import_records(self, data: bytes, format: str = "jsonl") -> int:
        """Parse and validate the whole batch, then append it atomically.

        Any bad row rejects the entire batch; the error carries the 1-based
        physical line number of the offending input line (for CSV the header
        is line 1).
        """
        samples = parse_export(data, format)
        self.append_many(samples)
        return len(samples)


def _record_line(record: SampleRecord) -> bytes:
    return (json.dumps(record.to_json_dict(), sort_keys=True) + "\n").encode("utf-8")


def _format_number(value: float) -> str:
    # repr of a Python float is the shortest string that round-trips exactly
    return repr(value)


def export_records(records: list[SampleRecord], format: str = "jsonl") -> bytes:
    if format == "jsonl":
        return b"".join(_record_line(r) for r in records)
    if format == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for record in records:
            s = record.sample
            writer.writerow(
                [
                    record.record_id,
                    format_rfc3339(s.timestamp_utc),
                    s.household_id,
                    s.device_id,
                    s.path,
                    _format_number(s.throughput_mbps),
                    _format_number(s.duration_seconds),
                    s.bytes_transferred,
                    s.tool,
                    record.schema_version,
                ]
            )
        return buffer.getvalue().encode("utf-8")
    raise ValueError(f"unknown export format {format!r}")


def parse_export(data: bytes, format: str = "jsonl") -> list[ThroughputSample]:
    """Decode an export stream back into validated samples.

    Raises BatchImportError naming the first offending line; nothing is
    returned unless every row is valid.
    """
    if format == "jsonl":
        return _parse_jsonl(data)
    if format == "csv":
        return _parse_csv(data)
    raise ValueError(f"unknown import format {format!r}")


def _parse_jsonl(data: bytes) -> list[ThroughputSample]:
    samples = []
    for line_number, line in enumerate(data.split(b"\n"), start=1):
        if not line.strip():
            continue
        try:
            body = json.loads(line.decode("utf-8"))
            if not isinstance(body, dict):
                raise ValidationError("row must be a JSON object")
            if "schema_version" in body and body["schema_version"] != SCHEMA_VERSION:
                raise ValidationError(f"unsupported schema_version {body['schema_version']!r}")
            sample = ThroughputSample.from_json_dict(body)
            sample.validate()
        except (ValueError, ValidationError) as exc:
            raise BatchImportError(line_number, str(exc)) from exc
        samples.append(sample)
    return samples


def _parse_csv(data: bytes) -> list[ThroughputSample]:
    text = data.decode("utf-8")
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows:
        return []
    header = rows[0]
    if header != CSV_COLUMNS:
        raise BatchImportError(1, f"unexpected CSV header {header!r}")
    samples = []
    for line_number, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        try:
            if len(row) != len(CSV_COLUMNS):
                raise ValidationError(f"expected {len(CSV_COLUMNS)} columns, got {len(row)}")
            fields = dict(zip(CSV_COLUMNS, row))
            if int(fields["schema_version"]) != SCHEMA_VERSION:
                raise ValidationError(f"unsupported schema_version {fields['schema_version']!r}")
            sample = ThroughputSample(
                timestamp_utc=parse_rfc3339(fields["timestamp_utc"]),
                household_id=fields["household_id"],
                device_id=fields["device_id"],
                path=fields["path"],
                throughput_mbps=float(fields["throughput_mbps"]),
                duration_seconds=float(fields["duration_seconds"]),
                bytes_transferred=int(fields["bytes_transferred"]),
                tool=fields["tool"],
            )
            sample.validate()
        except (ValueError, ValidationError) as exc:
            raise BatchImportError(line_number, str(exc)) from exc
        samples.append(sample)
    return samples
