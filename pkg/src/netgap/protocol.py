"""Streaming download throughput test over a WebSocket-framed connection.

One test is a single connection to ``/ndt/v7/download``: the server pushes
binary frames of random payload, growing them adaptively so slow links are
not flooded while fast links saturate, and interleaves a small JSON text
frame every snapshot interval reporting its own elapsed time and byte count.
The client counts the payload bytes it receives and derives throughput from
its own wall clock, because the receiver is the side that observes the
bottleneck. After the configured duration the server closes the stream.

Throughput is decimal megabits per second throughout (bytes * 8 / s / 1e6),
matching how ISP service tiers are quoted.
"""

from __future__ import annotations

import asyncio
import json
import time
from dataclasses import dataclass, replace

import aiohttp
from aiohttp import WSCloseCode, WSMsgType, web

from .errors import (
    BusyError,
    IncompleteTestError,
    ProtocolError,
    StartupError,
    TransportError,
)
from .model import ThroughputSample, utc_now
from .ratelimit import TokenBucket

DOWNLOAD_PATH = "/ndt/v7/download"
DEFAULT_TOOL = "netgap-ndt7"

# A requested test duration above this is clamped; keeps one client from
# pinning a connection open for hours.
MAX_TEST_DURATION_SECONDS = 3600.0


@dataclass(frozen=True)
class MeasurementSnapshot:
    """Progress report sent as a text frame during a test."""

    elapsed_seconds: float
    bytes_transferred: int


@dataclass(frozen=True)
class TestConfig:
    duration_seconds: float = 10.0
    snapshot_interval_seconds: float = 0.25
    initial_payload_bytes: int = 8192
    max_payload_bytes: int = 16777216

    def validate(self) -> None:
        if self.duration_seconds <= 0:
            raise ValueError("duration_seconds must be positive")
        if self.snapshot_interval_seconds <= 0:
            raise ValueError("snapshot_interval_seconds must be positive")
        if self.duration_seconds <= self.snapshot_interval_seconds:
            raise ValueError("duration_seconds must exceed snapshot_interval_seconds")
        if self.initial_payload_bytes <= 0:
            raise ValueError("initial_payload_bytes must be positive")
        if self.initial_payload_bytes > self.max_payload_bytes:
            raise ValueError("initial_payload_bytes must not exceed max_payload_bytes")


def compute_throughput_mbps(bytes_transferred: int, elapsed_seconds: float) -> float:
    """Decimal megabits per second for a byte count over an elapsed time."""
    if elapsed_seconds <= 0:
        raise ValueError("elapsed_seconds must be positive")
    if bytes_transferred < 0:
        raise ValueError("bytes_transferred must be nonnegative")
    return bytes_transferred * 8 / elapsed_seconds / 1e6


def next_payload_size(current_size: int, total_bytes_sent: int, config: TestConfig) -> int:
    """Grow the payload once it falls below 1/16 of what has been sent, capped."""
    if current_size < total_bytes_sent / 16 and current_size * 2 <= config.max_payload_bytes:
        return current_size * 2
    return current_size


def snapshot_message(elapsed_seconds: float, bytes_transferred: int) -> str:
    return json.dumps(
        {"elapsed_seconds": elapsed_seconds, "bytes_transferred": bytes_transferred},
        separators=(",", ":"),
    )


def parse_snapshot(message_text: str) -> MeasurementSnapshot:
    """Parse a snapshot text frame; reject anything malformed or negative."""
    try:
        body = json.loads(message_text)
    except (json.JSONDecodeError, TypeError) as exc:
        raise ProtocolError(f"malformed snapshot: {exc}") from exc
    if not isinstance(body, dict):
        raise ProtocolError("snapshot body must be a JSON object")
    try:
        elapsed = body["elapsed_seconds"]
        count = body["bytes_transferred"]
    except KeyError as exc:
        raise ProtocolError(f"snapshot missing field {exc.args[0]!r}") from exc
    if isinstance(elapsed, bool) or not isinstance(elapsed, (int, float)):
        raise ProtocolError("elapsed_seconds must be a number")
    if isinstance(count, bool) or not isinstance(count, int):
        raise ProtocolError("bytes_transferred must be an integer")
    if elapsed < 0 or count < 0:
        raise ProtocolError("snapshot values must be nonnegative")
    return MeasurementSnapshot(elapsed_seconds=float(elapsed), bytes_transferred=count)


_BLOB: bytes = b""


def _payload_blob(size: int) -> bytes:
    """Shared random payload; regenerated only when a larger one is needed."""
    global _BLOB
    if len(_BLOB) < size:
        import os

        _BLOB = os.urandom(size)
    return _BLOB


async def _stream_test(ws: web.WebSocketResponse, config: TestConfig, bucket: TokenBucket | None) -> int:
    """Push payload frames and interleaved snapshots until the duration elapses.

    Returns the number of payload bytes sent (may be partial if the peer went
    away). Snapshot elapsed times are forced strictly increasing.
    """
    blob = _payload_blob(config.max_payload_bytes)
    interval = config.snapshot_interval_seconds
    t0 = time.perf_counter()
    total = 0
    size = config.initial_payload_bytes
    next_snapshot_at = interval
    last_elapsed = 0.0

    async def send_snapshot() -> None:
        nonlocal last_elapsed, next_snapshot_at
        elapsed = time.perf_counter() - t0
        last_elapsed = max(elapsed, last_elapsed + 1e-9)
        await ws.send_str(snapshot_message(last_elapsed, total))
        next_snapshot_at += interval

    while True:
        elapsed = time.perf_counter() - t0
        if elapsed >= config.duration_seconds:
            break
        if elapsed >= next_snapshot_at:
            await send_snapshot()
            continue
        nbytes = size
        if bucket is not None:
            nbytes = min(nbytes, max(1, int(bucket.burst)))
            await bucket.acquire(nbytes)
        await ws.send_bytes(blob[:nbytes])
        total += nbytes
        size = next_payload_size(size, total, config)
    # Flush every snapshot slot due at or before the nominal end of the test.
    while next_snapshot_at <= config.duration_seconds + 1e-9:
        await send_snapshot()
    return total


def download_handler(
    config: TestConfig,
    *,
    rate_limit_mbps: float | None = None,
    slot=None,
    slot_kind: str = "lan_test",
    logger=None,
):
    """Build the aiohttp handler for the download test endpoint.

    ``slot`` is an optional exclusive-test permit source (see agent.TestSlot);
    when given, each connection holds a permit for the whole stream so tests
    sharing an uplink never overlap.
    """
    config.validate()

    async def handle(request: web.Request) -> web.WebSocketResponse:
        cfg = config
        requested = request.query.get("duration")
        if requested is not None:
            try:
                duration = float(requested)
            except ValueError:
                raise web.HTTPBadRequest(text="duration must be a number")
            duration = min(duration, MAX_TEST_DURATION_SECONDS)
            if duration <= cfg.snapshot_interval_seconds:
                raise web.HTTPBadRequest(text="duration too short")
            cfg = replace(cfg, duration_seconds=duration)

        ws = web.WebSocketResponse(compress=False)
        await ws.prepare(request)
        bucket = TokenBucket.for_mbps(rate_limit_mbps) if rate_limit_mbps else None

        permit = None
        if slot is not None:
            try:
                permit = await slot.acquire(slot_kind)
            except BusyError:
                await ws.close(code=WSCloseCode.TRY_AGAIN_LATER, message=b"test slot busy")
                return ws
        try:
            sent = await _stream_test(ws, cfg, bucket)
            await ws.close()
            if logger is not None:
                logger.info("event=download_test_served bytes=%d duration=%g", sent, cfg.duration_seconds)
        except (ConnectionResetError, ConnectionError, asyncio.CancelledError, aiohttp.ClientError) as exc:
            # Peer went away mid-test; this connection's failure stays its own.
            if logger is not None:
                logger.warning("event=download_test_aborted error=%r", exc)
            if isinstance(exc, asyncio.CancelledError):
                raise
        finally:
            if permit is not None:
                permit.release()
        return ws

    return handle


class ProbeServer:
    """Long-running download test server bound to one address.

    Connections are independent: each gets its own payload sizing, snapshots,
    and (optional) rate limiter state derives from a shared bucket only when
    the caller passes one in.
    """

    def __init__(
        self,
        host: str = "0.0.0.0",
        port: int = 0,
        config: TestConfig | None = None,
        *,
        rate_limit_mbps: float | None = None,
        ssl_context=None,
    ):
        self.host = host
        self.port = port
        self.config = config or TestConfig()
        self.rate_limit_mbps = rate_limit_mbps
        self.ssl_context = ssl_context
        self._runner: web.AppRunner | None = None

    async def start(self) -> None:
        self.config.validate()
        app = web.Application()
        app.router.add_get(
            DOWNLOAD_PATH,
            download_handler(self.config, rate_limit_mbps=self.rate_limit_mbps),
        )
        self._runner = web.AppRunner(app, access_log=None)
        await self._runner.setup()
        site = web.TCPSite(self._runner, self.host, self.port, ssl_context=self.ssl_context)
        try:
            await site.start()
        except OSError as exc:
            await self._runner.cleanup()
            self._runner = None
            raise StartupError(f"cannot bind {self.host}:{self.port}: {exc}") from exc
        for addr in self._runner.addresses:
            self.port = addr[1]
            break

    async def stop(self) -> None:
        if self._runner is not None:
            await self._runner.cleanup()
            self._runner = None


async def serve_download(
    bind_host: str,
    port: int,
    config: TestConfig | None = None,
    *,
    rate_limit_mbps: float | None = None,
    ssl_context=None,
) -> ProbeServer:
    """Start a download test server; returns the running handle."""
    server = ProbeServer(
        bind_host, port, config, rate_limit_mbps=rate_limit_mbps, ssl_context=ssl_context
    )
    await server.start()
    return server


def _endpoint_url(endpoint: str) -> str:
    """Accept host:port, ws(s)://host:port, or http(s)://host:port."""
    if "://" in endpoint:
        scheme, _, rest = endpoint.partition("://")
        scheme = {"http": "ws", "https": "wss", "ws": "ws", "wss": "wss"}.get(scheme)
        if scheme is None:
            raise ValueError(f"unsupported endpoint scheme in {endpoint!r}")
        rest = rest.rstrip("/")
        if rest.endswith(DOWNLOAD_PATH):
            rest = rest[: -len(DOWNLOAD_PATH)]
        return f"{scheme}://{rest}{DOWNLOAD_PATH}"
    return f"ws://{endpoint}{DOWNLOAD_PATH}"


class DownloadClient:
    """Single-use client for one streaming download test.

    Not safe to share across threads while running; results are immutable
    values. The snapshot transcript is kept on the instance for inspection.
    """

    def __init__(self, endpoint: str, config: TestConfig | None = None):
        self.endpoint = endpoint
        self.config = config or TestConfig()
        self.snapshots: list[MeasurementSnapshot] = []
        self._used = False

    async def run(
        self,
        *,
        household_id: str,
        device_id: str,
        path: str,
        tool: str = DEFAULT_TOOL,
    ) -> ThroughputSample:
        if self._used:
            raise RuntimeError("DownloadClient is single-use; create a new one per test")
        self._used = True
        self.config.validate()
        url = f"{_endpoint_url(self.endpoint)}?duration={self.config.duration_seconds}"
        started_at = utc_now()
        duration = self.config.duration_seconds
        receive_timeout = max(2.0, self.config.snapshot_interval_seconds * 8)
        deadline_margin = duration * 1.5 + 10

        total = 0
        elapsed = 0.0
        last_snapshot: MeasurementSnapshot | None = None
        timeout = aiohttp.ClientTimeout(total=deadline_margin, connect=10)
        try:
            async with aiohttp.ClientSession(timeout=timeout) as session:
                async with session.ws_connect(url, compress=0, max_msg_size=0) as ws:
                    t0 = time.perf_counter()
                    while True:
                        msg = await ws.receive(timeout=receive_timeout)
                        if msg.type == WSMsgType.BINARY:
                            total += len(msg.data)
                        elif msg.type == WSMsgType.TEXT:
                            snap = parse_snapshot(msg.data)
                            if last_snapshot is not None and (
                                snap.elapsed_seconds < last_snapshot.elapsed_seconds
                                or snap.bytes_transferred < last_snapshot.bytes_transferred
                            ):
                                raise ProtocolError("snapshot sequence went backwards")
                            self.snapshots.append(snap)
                            last_snapshot = snap
                        elif msg.type in (WSMsgType.CLOSE, WSMsgType.CLOSING, WSMsgType.CLOSED):
                            break
                        elif msg.type == WSMsgType.ERROR:
                            raise TransportError(f"websocket error: {ws.exception()!r}")
                        else:
                            raise ProtocolError(f"unexpected frame type {msg.type!r}")
                    elapsed = time.perf_counter() - t0
        except ProtocolError:
            raise
        except (aiohttp.ClientError, OSError, asyncio.TimeoutError) as exc:
            raise TransportError(f"download test to {self.endpoint} failed: {exc}") from exc

        if elapsed < 0.1 * duration or total == 0:
            raise IncompleteTestError(
                f"test ended after {elapsed:.3f}s with {total} bytes "
                f"(needed 10% of {duration}s)"
            )
        return ThroughputSample.from_measurement(
            timestamp_utc=started_at,
            household_id=household_id,
            device_id=device_id,
            path=path,
            bytes_transferred=total,
            duration_seconds=elapsed,
            tool=tool,
        )


def run_download_test(
    endpoint: str,
    config: TestConfig | None = None,
    *,
    household_id: str,
    device_id: str,
    path: str,
    tool: str = DEFAULT_TOOL,
) -> ThroughputSample:
    """Blocking wrapper around DownloadClient for CLI and scripting use."""
    client = DownloadClient(endpoint, config)
    return asyncio.run(
        client.run(household_id=household_id, device_id=device_id, path=path, tool=tool)
    )
