"""Throughput sample model shared by the probe, store, agent, and analysis layers.

A sample records one completed download test: when it ran, which household
and device it came from, which side of the home network it measured
(``lan_wifi`` = wireless client to router, ``wan_access`` = router to ISP),
and how fast it was. Throughput is decimal megabits per second and must stay
consistent with the byte count and duration; the store enforces that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime, timezone

from .errors import ValidationError

PATH_LAN_WIFI = "lan_wifi"
PATH_WAN_ACCESS = "wan_access"
PATHS = (PATH_LAN_WIFI, PATH_WAN_ACCESS)

SCHEMA_VERSION = 1

# Relative tolerance for the throughput = bytes*8/duration/1e6 consistency check.
MBPS_REL_TOL = 1e-9


def parse_rfc3339(text: str) -> datetime:
    """Parse an RFC 3339 timestamp into a timezone-aware UTC datetime."""
    if not isinstance(text, str):
        raise ValueError(f"timestamp must be a string, got {type(text).__name__}")
    cleaned = text.strip()
    if cleaned.endswith(("Z", "z")):
        cleaned = cleaned[:-1] + "+00:00"
    try:
        ts = datetime.fromisoformat(cleaned)
    except ValueError as exc:
        raise ValueError(f"invalid RFC 3339 timestamp {text!r}") from exc
    if ts.tzinfo is None:
        raise ValueError(f"timestamp {text!r} has no UTC offset")
    return ts.astimezone(timezone.utc)


def format_rfc3339(ts: datetime) -> str:
    """Canonical RFC 3339 rendering: UTC, trailing Z, microseconds only if nonzero."""
    if ts.tzinfo is None:
        raise ValueError("naive datetime cannot be formatted as RFC 3339")
    return ts.astimezone(timezone.utc).isoformat().replace("+00:00", "Z")


def utc_now() -> datetime:
    return datetime.now(timezone.utc)


@dataclass(frozen=True)
class ThroughputSample:
    """One completed throughput test."""

    timestamp_utc: datetime
    household_id: str
    device_id: str
    path: str
    throughput_mbps: float
    duration_seconds: float
    bytes_transferred: int
    tool: str

    def validate(self) -> None:
        """Raise ValidationError unless every sample invariant holds."""
        if self.timestamp_utc.tzinfo is None:
            raise ValidationError("timestamp_utc must be timezone-aware")
        if not self.household_id:
            raise ValidationError("household_id must be nonempty")
        if not self.device_id:
            raise ValidationError("device_id must be nonempty")
        if self.path not in PATHS:
            raise ValidationError(f"path must be one of {PATHS}, got {self.path!r}")
        if not self.tool:
            raise ValidationError("tool must be nonempty")
        if not (self.duration_seconds > 0):
            raise ValidationError("duration_seconds must be positive")
        if not isinstance(self.bytes_transferred, int) or self.bytes_transferred <= 0:
            raise ValidationError("bytes_transferred must be a positive integer")
        if not (self.throughput_mbps > 0):
            raise ValidationError("throughput_mbps must be positive")
        implied = self.bytes_transferred * 8 / self.duration_seconds / 1e6
        if not math.isclose(self.throughput_mbps, implied, rel_tol=MBPS_REL_TOL):
            raise ValidationError(
                f"throughput {self.throughput_mbps} Mbps inconsistent with "
                f"{self.bytes_transferred} bytes over {self.duration_seconds} s "
                f"(implies {implied} Mbps)"
            )

    @classmethod
    def from_measurement(
        cls,
        *,
        timestamp_utc: datetime,
        household_id: str,
        device_id: str,
        path: str,
        bytes_transferred: int,
        duration_seconds: float,
        tool: str,
    ) -> "ThroughputSample":
        """Build a sample whose throughput is derived from bytes and duration."""
        if duration_seconds <= 0:
            raise ValueError("duration_seconds must be positive")
        return cls(
            timestamp_utc=timestamp_utc,
            household_id=household_id,
            device_id=device_id,
            path=path,
            throughput_mbps=bytes_transferred * 8 / duration_seconds / 1e6,
            duration_seconds=duration_seconds,
            bytes_transferred=bytes_transferred,
            tool=tool,
        )

    def to_json_dict(self) -> dict:
        return {
            "timestamp_utc": format_rfc3339(self.timestamp_utc),
            "household_id": self.household_id,
            "device_id": self.device_id,
            "path": self.path,
            "throughput_mbps": self.throughput_mbps,
            "duration_seconds": self.duration_seconds,
            "bytes_transferred": self.bytes_transferred,
            "tool": self.tool,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "ThroughputSample":
        try:
            return cls(
                timestamp_utc=parse_rfc3339(data["timestamp_utc"]),
                household_id=str(data["household_id"]),
                device_id=str(data["device_id"]),
                path=str(data["path"]),
                throughput_mbps=float(data["throughput_mbps"]),
                duration_seconds=float(data["duration_seconds"]),
                bytes_transferred=int(data["bytes_transferred"]),
                tool=str(data["tool"]),
            )
        except KeyError as exc:
            raise ValidationError(f"missing field {exc.args[0]!r}") from exc
        except (TypeError, ValueError) as exc:
            raise ValidationError(str(exc)) from exc
