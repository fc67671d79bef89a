"""Router-side measurement daemon.

The agent does four jobs: it fires WAN download tests against a remote
endpoint roughly once an hour (uniform jitter avoids synchronized load on
the far server), hosts the LAN test endpoint that wireless clients hit,
serializes all tests through one exclusive slot so LAN and WAN tests never
share the uplink, and persists every completed sample.

Scheduling is sleep-based and jittered rather than cron-aligned; the
analysis side only needs tests to land in the same 6-hour windows, so
strict clock alignment buys nothing.
"""

from __future__ import annotations

import asyncio
import collections
import configparser
import logging
import os
import random
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta

from aiohttp import web

from .errors import BusyError, NetgapError, StorageError
from .model import PATH_WAN_ACCESS, ThroughputSample, utc_now
from .protocol import DownloadClient, TestConfig
from .store import SampleStore

log = logging.getLogger("netgap.agent")

WAN_TEST = "wan_test"
AGENT_DEVICE_ID = "agent"

SLOT_WAIT_TIMEOUT_SECONDS = 120.0

# Samples kept for retry when the store write fails; oldest drop first.
PENDING_BUFFER_LIMIT = 100


@dataclass(frozen=True)
class ScheduleConfig:
    wan_interval_seconds: float = 3600.0
    wan_jitter_seconds: float = 300.0
    lan_background_interval_seconds: float = 10800.0
    min_gap_seconds: float = 60.0
    wan_endpoint: str | None = None
    household_id: str = "unset"

    def validate(self) -> None:
        if self.wan_interval_seconds <= 0:
            raise ValueError("wan_interval_seconds must be positive")
        if self.wan_jitter_seconds < 0:
            raise ValueError("wan_jitter_seconds must be nonnegative")
        if self.wan_jitter_seconds >= self.wan_interval_seconds:
            raise ValueError("wan_jitter_seconds must be below wan_interval_seconds")
        if self.lan_background_interval_seconds <= 0:
            raise ValueError("lan_background_interval_seconds must be positive")
        if self.min_gap_seconds <= 0:
            raise ValueError("min_gap_seconds must be positive")
        if self.min_gap_seconds >= self.wan_interval_seconds:
            raise ValueError("min_gap_seconds must be below wan_interval_seconds")
        if not self.household_id:
            raise ValueError("household_id must be set")


@dataclass(frozen=True)
class ScheduledEvent:
    fire_at_utc: datetime
    kind: str
    offset_seconds: float


def build_schedule(
    config: ScheduleConfig,
    horizon_seconds: float,
    seed: int,
    start_utc: datetime | None = None,
) -> list[ScheduledEvent]:
    """Jittered WAN test schedule over a horizon; deterministic per seed.

    Gaps are interval + uniform(-jitter, +jitter); events past the horizon
    are not emitted.
    """
    config.validate()
    if horizon_seconds < config.wan_interval_seconds:
        raise ValueError("horizon_seconds must be at least one interval")
    start = start_utc if start_utc is not None else utc_now()
    rng = random.Random(seed)
    events = []
    t = 0.0
    while True:
        t += config.wan_interval_seconds + rng.uniform(
            -config.wan_jitter_seconds, config.wan_jitter_seconds
        )
        if t > horizon_seconds:
            break
        events.append(
            ScheduledEvent(
                fire_at_utc=start + timedelta(seconds=t),
                kind=WAN_TEST,
                offset_seconds=t,
            )
        )
    return events


class TestPermit:
    """Held while one test runs; releasing starts the quiet-gap countdown."""

    def __init__(self, slot: "TestSlot", kind: str):
        self._slot = slot
        self.kind = kind
        self._released = False

    def release(self) -> None:
        if self._released:
            return
        self._released = True
        self._slot._schedule_release()

    def __enter__(self) -> "TestPermit":
        return self

    def __exit__(self, *exc_info) -> None:
        self.release()


class TestSlot:
    """FIFO exclusive permit so only one throughput test runs at a time.

    The slot stays occupied for min_gap_seconds after a test releases it,
    leaving the uplink quiet between back-to-back tests. Waiters beyond the
    timeout are refused with BusyError instead of queueing forever.
    """

    def __init__(
        self,
        min_gap_seconds: float = 60.0,
        wait_timeout_seconds: float = SLOT_WAIT_TIMEOUT_SECONDS,
    ):
        if min_gap_seconds < 0:
            raise ValueError("min_gap_seconds must be nonnegative")
        self.min_gap_seconds = min_gap_seconds
        self.wait_timeout_seconds = wait_timeout_seconds
        # asyncio.Lock wakes waiters in arrival order, giving FIFO grants.
        self._lock = asyncio.Lock()
        self._release_tasks: set[asyncio.Task] = set()

    async def acquire(self, kind: str) -> TestPermit:
        try:
            await asyncio.wait_for(self._lock.acquire(), self.wait_timeout_seconds)
        except asyncio.TimeoutError:
            raise BusyError(
                f"{kind}: test slot still busy after {self.wait_timeout_seconds:g}s"
            ) from None
        return TestPermit(self, kind)

    def _schedule_release(self) -> None:
        async def unlock_after_gap():
            try:
                await asyncio.sleep(self.min_gap_seconds)
            finally:
                self._lock.release()

        task = asyncio.get_running_loop().create_task(unlock_after_gap())
        self._release_tasks.add(task)
        task.add_done_callback(self._release_tasks.discard)

    async def drain(self) -> None:
        """Wait out pending quiet-gap countdowns (test teardown helper)."""
        while self._release_tasks:
            await asyncio.gather(*list(self._release_tasks), return_exceptions=True)


class Agent:
    """Long-running agent: LAN server plus jittered WAN test scheduler.

    ``test_runner`` is injectable for tests: an async callable taking
    (endpoint, test_config, household_id, device_id, path) and returning a
    ThroughputSample.
    """

    def __init__(
        self,
        config: ScheduleConfig,
        store: SampleStore,
        *,
        bind_host: str = "0.0.0.0",
        port: int = 8080,
        test_config: TestConfig | None = None,
        lan_rate_limit_mbps: float | None = None,
        api_token: str | None = None,
        static_dir: str | None = None,
        schedule_seed: int | None = None,
        test_runner=None,
    ):
        config.validate()
        self.config = config
        self.store = store
        self.bind_host = bind_host
        self.port = port
        self.test_config = test_config or TestConfig()
        self.lan_rate_limit_mbps = lan_rate_limit_mbps
        self.api_token = api_token
        self.static_dir = static_dir
        self.slot = TestSlot(config.min_gap_seconds)
        self._rng = random.Random(schedule_seed)
        self._test_runner = test_runner or self._run_download
        self._pending: collections.deque[ThroughputSample] = collections.deque(
            maxlen=PENDING_BUFFER_LIMIT
        )
        self._runner: web.AppRunner | None = None
        self._scheduler_task: asyncio.Task | None = None
        self._wan_tests_run = 0

    async def _run_download(self, endpoint, test_config, household_id, device_id, path):
        client = DownloadClient(endpoint, test_config)
        return await client.run(
            household_id=household_id, device_id=device_id, path=path
        )

    async def start(self) -> None:
        from .api import build_app

        app = build_app(
            self.store,
            slot=self.slot,
            test_config=self.test_config,
            lan_rate_limit_mbps=self.lan_rate_limit_mbps,
            api_token=self.api_token,
            static_dir=self.static_dir,
            household_id=self.config.household_id,
        )
        self._runner = web.AppRunner(app, access_log=None)
        await self._runner.setup()
        site = web.TCPSite(self._runner, self.bind_host, self.port)
        try:
            await site.start()
        except OSError as exc:
            await self._runner.cleanup()
            self._runner = None
            from .errors import StartupError

            raise StartupError(f"cannot bind {self.bind_host}:{self.port}: {exc}") from exc
        for addr in self._runner.addresses:
            self.port = addr[1]
            break
        log.info(
            "event=agent_started host=%s port=%d household=%s",
            self.bind_host,
            self.port,
            self.config.household_id,
        )
        if self.config.wan_endpoint:
            self._scheduler_task = asyncio.get_running_loop().create_task(
                self._scheduler_loop()
            )
        else:
            log.warning("event=wan_schedule_disabled reason=no_endpoint")

    async def stop(self) -> None:
        if self._scheduler_task is not None:
            self._scheduler_task.cancel()
            try:
                await self._scheduler_task
            except asyncio.CancelledError:
                pass
            self._scheduler_task = None
        if self._runner is not None:
            await self._runner.cleanup()
            self._runner = None
        log.info("event=agent_stopped wan_tests=%d", self._wan_tests_run)

    async def run_forever(self) -> None:
        await self.start()
        try:
            while True:
                await asyncio.sleep(3600)
        except asyncio.CancelledError:
            pass
        finally:
            await self.stop()

    def _next_gap_seconds(self) -> float:
        jitter = self.config.wan_jitter_seconds
        return self.config.wan_interval_seconds + self._rng.uniform(-jitter, jitter)

    async def _scheduler_loop(self) -> None:
        while True:
            await asyncio.sleep(self._next_gap_seconds())
            try:
                await self.run_wan_test_once()
            except asyncio.CancelledError:
                raise
            except NetgapError as exc:
                # Skip this slot; the next one gets a fresh attempt.
                log.warning("event=wan_test_skipped error=%r", exc)
            except Exception as exc:
                log.error("event=wan_test_unexpected error=%r", exc)

    async def run_wan_test_once(self) -> ThroughputSample:
        permit = await self.slot.acquire(WAN_TEST)
        try:
            sample = await self._test_runner(
                self.config.wan_endpoint,
                self.test_config,
                self.config.household_id,
                AGENT_DEVICE_ID,
                PATH_WAN_ACCESS,
            )
        finally:
            permit.release()
        await self._persist(sample)
        self._wan_tests_run += 1
        log.info(
            "event=wan_test_ok throughput_mbps=%.3f bytes=%d duration=%.3f",
            sample.throughput_mbps,
            sample.bytes_transferred,
            sample.duration_seconds,
        )
        return sample

    async def _persist(self, sample: ThroughputSample) -> None:
        self._pending.append(sample)
        while self._pending:
            head = self._pending[0]
            try:
                await asyncio.to_thread(self.store.append_sample, head)
            except StorageError as exc:
                log.warning(
                    "event=persist_deferred pending=%d error=%r", len(self._pending), exc
                )
                return
            self._pending.popleft()


@dataclass(frozen=True)
class AgentSettings:
    """Everything an agent process needs, from config file plus environment."""

    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    bind_host: str = "0.0.0.0"
    port: int = 8080
    store_path: str = "netgap-samples.jsonl"
    api_token: str | None = None
    static_dir: str | None = None
    lan_rate_limit_mbps: float | None = None


_ENV_PREFIX = "NETGAP_"

_SCHEDULE_KEYS = {
    "household_id": str,
    "wan_endpoint": str,
    "wan_interval_seconds": float,
    "wan_jitter_seconds": float,
    "lan_background_interval_seconds": float,
    "min_gap_seconds": float,
}

_SETTINGS_KEYS = {
    "bind_host": str,
    "port": int,
    "store_path": str,
    "api_token": str,
    "static_dir": str,
    "lan_rate_limit_mbps": float,
}


def load_agent_settings(
    config_path: str | None = None, env: dict | None = None
) -> AgentSettings:
    """Read INI settings from the [agent] section, then apply NETGAP_* overrides.

    Every key can come from either place; the environment wins. Unknown keys
    in the file are rejected so typos fail loudly.
    """
    env = os.environ if env is None else env
    values: dict[str, str] = {}
    if config_path is not None:
        parser = configparser.ConfigParser()
        read = parser.read(config_path)
        if not read:
            raise ValueError(f"cannot read config file {config_path!r}")
        if not parser.has_section("agent"):
            raise ValueError(f"{config_path!r} has no [agent] section")
        for key, value in parser.items("agent"):
            if key not in _SCHEDULE_KEYS and key not in _SETTINGS_KEYS:
                raise ValueError(f"unknown config key {key!r}")
            values[key] = value
    for key in list(_SCHEDULE_KEYS) + list(_SETTINGS_KEYS):
        env_key = _ENV_PREFIX + key.upper()
        if env_key in env:
            values[env_key[len(_ENV_PREFIX) :].lower()] = env[env_key]

    schedule_kwargs = {}
    settings_kwargs = {}
    for key, raw in values.items():
        caster = _SCHEDULE_KEYS.get(key) or _SETTINGS_KEYS[key]
        try:
            value = caster(raw)
        except ValueError as exc:
            raise ValueError(f"config key {key!r}: {exc}") from exc
        if key in _SCHEDULE_KEYS:
            schedule_kwargs[key] = value
        else:
            settings_kwargs[key] = value

    schedule = replace(ScheduleConfig(), **schedule_kwargs)
    settings = AgentSettings(schedule=schedule, **settings_kwargs)
    settings.schedule.validate()
    return settings
