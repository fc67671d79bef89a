"""Agent: schedule arithmetic, exclusive test slot, daemon orchestration."""

import asyncio
import time
from datetime import datetime, timedelta, timezone

import pytest

from netgap.agent import (
    Agent,
    ScheduleConfig,
    TestSlot,
    build_schedule,
    load_agent_settings,
)
from netgap.errors import BusyError, TransportError
from netgap.model import PATH_WAN_ACCESS, ThroughputSample
from netgap.store import SampleStore

START = datetime(2022, 6, 1, tzinfo=timezone.utc)


class TestBuildSchedule:
    def test_default_day_at_seed_seven(self):
        events = build_schedule(ScheduleConfig(), 86400, seed=7, start_utc=START)
        assert 23 <= len(events) <= 25
        offsets = [0.0] + [e.offset_seconds for e in events]
        gaps = [b - a for a, b in zip(offsets, offsets[1:])]
        assert all(3300 <= g <= 3900 for g in gaps)

    def test_zero_jitter_exact_grid(self):
        config = ScheduleConfig(wan_jitter_seconds=0)
        events = build_schedule(config, 7200, seed=1, start_utc=START)
        assert [e.offset_seconds for e in events] == [3600.0, 7200.0]
        assert events[0].fire_at_utc == START + timedelta(seconds=3600)
        assert all(e.kind == "wan_test" for e in events)

    def test_deterministic_per_seed(self):
        a = build_schedule(ScheduleConfig(), 86400, seed=3, start_utc=START)
        b = build_schedule(ScheduleConfig(), 86400, seed=3, start_utc=START)
        assert a == b
        c = build_schedule(ScheduleConfig(), 86400, seed=4, start_utc=START)
        assert a != c

    def test_horizon_below_interval_rejected(self):
        with pytest.raises(ValueError):
            build_schedule(ScheduleConfig(), 1800, seed=1)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            ScheduleConfig(wan_jitter_seconds=3600).validate()
        with pytest.raises(ValueError):
            ScheduleConfig(min_gap_seconds=0).validate()
        with pytest.raises(ValueError):
            ScheduleConfig(min_gap_seconds=7200).validate()


class TestTestSlot:
    def test_uncontended_grant_is_immediate(self):
        async def run():
            slot = TestSlot(min_gap_seconds=0.01)
            t0 = time.monotonic()
            permit = await slot.acquire("wan_test")
            elapsed = time.monotonic() - t0
            permit.release()
            await slot.drain()
            return elapsed

        assert asyncio.run(run()) < 0.1

    def test_second_waits_out_gap(self):
        async def run():
            slot = TestSlot(min_gap_seconds=0.2)
            first = await slot.acquire("wan_test")
            release_time = None

            async def second():
                permit = await slot.acquire("lan_test")
                granted = time.monotonic()
                permit.release()
                return granted

            task = asyncio.create_task(second())
            await asyncio.sleep(0.05)
            first.release()
            release_time = time.monotonic()
            granted = await task
            await slot.drain()
            return granted - release_time

        assert asyncio.run(run()) >= 0.19

    def test_fifo_order(self):
        async def run():
            slot = TestSlot(min_gap_seconds=0.0)
            order = []

            async def worker(name):
                permit = await slot.acquire(name)
                order.append(name)
                await asyncio.sleep(0.01)
                permit.release()

            first = await slot.acquire("seed")
            tasks = []
            for name in ("a", "b", "c"):
                tasks.append(asyncio.create_task(worker(name)))
                await asyncio.sleep(0.01)  # fix arrival order
            first.release()
            await asyncio.gather(*tasks)
            await slot.drain()
            return order

        assert asyncio.run(run()) == ["a", "b", "c"]

    def test_timeout_raises_busy(self):
        async def run():
            slot = TestSlot(min_gap_seconds=0.0, wait_timeout_seconds=0.05)
            permit = await slot.acquire("wan_test")
            with pytest.raises(BusyError):
                await slot.acquire("lan_test")
            permit.release()
            await slot.drain()

        asyncio.run(run())

    def test_double_release_harmless(self):
        async def run():
            slot = TestSlot(min_gap_seconds=0.0)
            permit = await slot.acquire("wan_test")
            permit.release()
            permit.release()
            await slot.drain()
            second = await slot.acquire("wan_test")
            second.release()
            await slot.drain()

        asyncio.run(run())


def make_fake_runner(results):
    """Async test runner yielding queued results or raising queued errors."""
    queue = list(results)

    async def runner(endpoint, config, household_id, device_id, path):
        item = queue.pop(0)
        if isinstance(item, Exception):
            raise item
        return ThroughputSample.from_measurement(
            timestamp_utc=datetime.now(timezone.utc),
            household_id=household_id,
            device_id=device_id,
            path=path,
            bytes_transferred=item,
            duration_seconds=1.0,
            tool="fake",
        )

    return runner


@pytest.fixture
def store(tmp_path):
    with SampleStore(tmp_path / "agent.jsonl") as s:
        yield s


def agent_config():
    return ScheduleConfig(
        wan_interval_seconds=10.0,
        wan_jitter_seconds=0.0,
        min_gap_seconds=0.05,
        wan_endpoint="127.0.0.1:1",
        household_id="hh-agent",
    )


class TestAgent:
    def test_three_slots_three_samples(self, store):
        async def run():
            agent = Agent(
                agent_config(),
                store,
                bind_host="127.0.0.1",
                port=0,
                test_runner=make_fake_runner([1000, 2000, 3000]),
            )
            await agent.start()
            try:
                for _ in range(3):
                    await agent.run_wan_test_once()
            finally:
                await agent.stop()

        asyncio.run(run())
        records = store.query_samples()
        assert len(records) == 3
        assert all(r.sample.path == PATH_WAN_ACCESS for r in records)
        assert all(r.sample.household_id == "hh-agent" for r in records)

    def test_unreachable_slot_skipped_not_fatal(self, store):
        async def run():
            runner = make_fake_runner(
                [1000, TransportError("connection refused"), 3000]
            )
            agent = Agent(
                agent_config(),
                store,
                bind_host="127.0.0.1",
                port=0,
                test_runner=runner,
            )
            await agent.start()
            try:
                await agent.run_wan_test_once()
                with pytest.raises(TransportError):
                    await agent.run_wan_test_once()
                await agent.run_wan_test_once()
            finally:
                await agent.stop()

        asyncio.run(run())
        assert len(store.query_samples()) == 2

    def test_scheduler_fires_on_interval(self, store):
        async def run():
            config = ScheduleConfig(
                wan_interval_seconds=0.2,
                wan_jitter_seconds=0.0,
                min_gap_seconds=0.01,
                wan_endpoint="127.0.0.1:1",
                household_id="hh-agent",
            )
            agent = Agent(
                config,
                store,
                bind_host="127.0.0.1",
                port=0,
                test_runner=make_fake_runner([1000] * 50),
            )
            await agent.start()
            await asyncio.sleep(0.7)
            await agent.stop()

        asyncio.run(run())
        count = len(store.query_samples())
        assert 2 <= count <= 4

    def test_lan_endpoint_served(self, store):
        """The agent's own port serves download tests for wireless clients."""
        from netgap.model import PATH_LAN_WIFI
        from netgap.protocol import DownloadClient, TestConfig

        async def run():
            agent = Agent(
                agent_config(),
                store,
                bind_host="127.0.0.1",
                port=0,
                test_config=TestConfig(duration_seconds=1.0),
                test_runner=make_fake_runner([]),
            )
            await agent.start()
            try:
                client = DownloadClient(
                    f"127.0.0.1:{agent.port}", TestConfig(duration_seconds=1.0)
                )
                sample = await client.run(
                    household_id="hh-agent", device_id="browser", path=PATH_LAN_WIFI
                )
                await agent.slot.drain()
                return sample
            finally:
                await agent.stop()

        sample = asyncio.run(run())
        sample.validate()


class TestSettings:
    def test_ini_file_parsed(self, tmp_path):
        config = tmp_path / "agent.ini"
        config.write_text(
            "[agent]\n"
            "household_id = hh-42\n"
            "wan_endpoint = measure.example:4443\n"
            "wan_interval_seconds = 1800\n"
            "min_gap_seconds = 30\n"
            "port = 9001\n"
            "store_path = /tmp/x.jsonl\n"
        )
        settings = load_agent_settings(str(config), env={})
        assert settings.schedule.household_id == "hh-42"
        assert settings.schedule.wan_endpoint == "measure.example:4443"
        assert settings.schedule.wan_interval_seconds == 1800.0
        assert settings.port == 9001
        assert settings.store_path == "/tmp/x.jsonl"

    def test_env_overrides_file(self, tmp_path):
        config = tmp_path / "agent.ini"
        config.write_text("[agent]\nhousehold_id = from-file\nport = 9001\n")
        settings = load_agent_settings(
            str(config),
            env={"NETGAP_HOUSEHOLD_ID": "from-env", "NETGAP_PORT": "9002"},
        )
        assert settings.schedule.household_id == "from-env"
        assert settings.port == 9002

    def test_env_only(self):
        settings = load_agent_settings(
            None, env={"NETGAP_HOUSEHOLD_ID": "hh-env"}
        )
        assert settings.schedule.household_id == "hh-env"

    def test_unknown_key_rejected(self, tmp_path):
        config = tmp_path / "agent.ini"
        config.write_text("[agent]\nhouseholdid = typo\n")
        with pytest.raises(ValueError):
            load_agent_settings(str(config), env={})

    def test_missing_file_rejected(self):
        with pytest.raises(ValueError):
            load_agent_settings("/nonexistent/agent.ini", env={})

    def test_invalid_numeric_rejected(self, tmp_path):
        config = tmp_path / "agent.ini"
        config.write_text("[agent]\nwan_interval_seconds = fast\n")
        with pytest.raises(ValueError):
            load_agent_settings(str(config), env={})
