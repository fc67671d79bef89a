"""CLI behavior: exit codes, artifacts, round trips through subcommands."""

import asyncio
import json
import threading

import pytest

from netgap.cli import main
from netgap.protocol import ProbeServer, TestConfig
from netgap.store import SampleStore

SMALL_SYNTH = ["--households", "3", "--changed", "0", "--period-days", "8", "--seed", "9"]


def synth(store_path, *extra):
    code = main(["synth", "--out", str(store_path), *SMALL_SYNTH, *extra])
    assert code == 0
    return store_path


class ServerThread:
    """ProbeServer on its own loop so sync CLI code can call asyncio.run."""

    def __init__(self, config):
        self.config = config
        self.port = None
        self._started = threading.Event()
        self._loop = None
        self._stop = None
        self._thread = threading.Thread(target=self._run, daemon=True)

    def _run(self):
        async def go():
            server = ProbeServer("127.0.0.1", 0, config=self.config)
            await server.start()
            self.port = server.port
            self._stop = asyncio.Event()
            self._started.set()
            await self._stop.wait()
            await server.stop()

        self._loop = asyncio.new_event_loop()
        self._loop.run_until_complete(go())
        self._loop.close()

    def __enter__(self):
        self._thread.start()
        assert self._started.wait(10.0)
        return self

    def __exit__(self, *exc):
        self._loop.call_soon_threadsafe(self._stop.set)
        self._thread.join(10.0)


class TestUsageErrors:
    def test_unknown_subcommand_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2

    def test_missing_required_flag_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            main(["analyze"])
        assert exc.value.code == 2

    def test_bad_timestamp_exits_2(self, tmp_path):
        store = synth(tmp_path / "s.jsonl")
        code = main(["export", "--store", str(store), "--from", "not-a-time"])
        assert code == 2


class TestSynth:
    def test_deterministic_output(self, tmp_path):
        a = synth(tmp_path / "a.jsonl")
        b = synth(tmp_path / "b.jsonl")
        assert a.read_bytes() == b.read_bytes()

    def test_refuses_existing_store(self, tmp_path, capsys):
        store = synth(tmp_path / "s.jsonl")
        code = main(["synth", "--out", str(store), *SMALL_SYNTH])
        assert code == 2
        assert "already exists" in capsys.readouterr().err

    def test_seed_changes_output(self, tmp_path):
        a = synth(tmp_path / "a.jsonl")
        b = synth(tmp_path / "b.jsonl", "--seed", "10")
        assert a.read_bytes() != b.read_bytes()


class TestAnalyze:
    def test_missing_store_exits_1(self, tmp_path, capsys):
        code = main(
            ["analyze", "--store", str(tmp_path / "nope.jsonl"), "--out", str(tmp_path)]
        )
        assert code == 1
        assert "not found" in capsys.readouterr().err

    def test_insufficient_data_exits_1(self, tmp_path, capsys):
        store = tmp_path / "s.jsonl"
        with SampleStore(store):
            pass
        out = tmp_path / "out"
        code = main(["analyze", "--store", str(store), "--out", str(out)])
        assert code == 1
        assert "insufficient data" in capsys.readouterr().err
        assert not out.exists()

    def test_writes_artifacts_and_prints_paths(self, tmp_path, capsys):
        store = synth(tmp_path / "s.jsonl")
        out = tmp_path / "out"
        code = main(["analyze", "--store", str(store), "--out", str(out)])
        assert code == 0
        printed = capsys.readouterr().out.strip().split("\n")
        assert str(out / "report.json") in printed
        assert (out / "report.json").exists()
        assert (out / "report.txt").exists()
        assert (out / "vantage_stats.csv").exists()
        assert (out / "cdf_overall.csv").exists()
        assert not list(out.glob("*.png"))

    def test_repeat_runs_byte_identical(self, tmp_path):
        store = synth(tmp_path / "s.jsonl")
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert main(["analyze", "--store", str(store), "--out", str(out_a)]) == 0
        assert main(["analyze", "--store", str(store), "--out", str(out_b)]) == 0
        for name in ["report.json", "cdf_overall.csv", "vantage_stats.csv"]:
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


class TestReport:
    def test_report_renders_figures(self, tmp_path):
        store = synth(tmp_path / "s.jsonl")
        out = tmp_path / "out"
        code = main(["report", "--store", str(store), "--out", str(out)])
        assert code == 0
        pngs = sorted(p.name for p in out.glob("*.png"))
        assert pngs == ["fig_prevalence_cdf.png", "fig_tier_throughput.png"]

    def test_no_figures_flag(self, tmp_path):
        store = synth(tmp_path / "s.jsonl")
        out = tmp_path / "out"
        code = main(
            ["report", "--store", str(store), "--out", str(out), "--no-figures"]
        )
        assert code == 0
        assert not list(out.glob("*.png"))


class TestExportImport:
    @pytest.mark.parametrize("fmt", ["jsonl", "csv"])
    def test_round_trip(self, fmt, tmp_path, capsys):
        store = synth(tmp_path / "s.jsonl")
        dump = tmp_path / f"dump.{fmt}"
        assert (
            main(
                ["export", "--store", str(store), "--format", fmt, "--out", str(dump)]
            )
            == 0
        )
        fresh = tmp_path / "fresh.jsonl"
        code = main(
            ["import", "--store", str(fresh), "--input", str(dump), "--format", fmt]
        )
        assert code == 0
        assert "imported" in capsys.readouterr().out
        redump = tmp_path / f"redump.{fmt}"
        assert (
            main(
                ["export", "--store", str(fresh), "--format", fmt, "--out", str(redump)]
            )
            == 0
        )
        assert dump.read_bytes() == redump.read_bytes()

    def test_export_filter_and_stdout(self, tmp_path, capsys):
        store = synth(tmp_path / "s.jsonl")
        capsys.readouterr()  # drop the synth progress line
        code = main(["export", "--store", str(store), "--path", "wan_access"])
        assert code == 0
        lines = capsys.readouterr().out.strip().split("\n")
        assert lines
        for line in lines:
            assert json.loads(line)["path"] == "wan_access"

    def test_import_bad_file_exits_1(self, tmp_path, capsys):
        bad = tmp_path / "bad.jsonl"
        bad.write_text('{"nope": 1}\n')
        code = main(
            ["import", "--store", str(tmp_path / "s.jsonl"), "--input", str(bad)]
        )
        assert code == 1
        assert "line 1" in capsys.readouterr().err


class TestDownloadSubcommand:
    def test_one_shot_test_prints_sample(self, tmp_path, capsys):
        config = TestConfig(duration_seconds=1.0)
        store = tmp_path / "s.jsonl"
        with ServerThread(config) as server:
            code = main(
                [
                    "test",
                    "--endpoint",
                    f"127.0.0.1:{server.port}",
                    "--path",
                    "lan_wifi",
                    "--duration",
                    "1.0",
                    "--store",
                    str(store),
                ]
            )
        assert code == 0
        sample = json.loads(capsys.readouterr().out)
        assert sample["path"] == "lan_wifi"
        assert sample["throughput_mbps"] > 0
        with SampleStore(store) as s:
            assert len(s) == 1

    def test_unreachable_endpoint_exits_1(self, capsys):
        code = main(
            [
                "test",
                "--endpoint",
                "127.0.0.1:1",
                "--path",
                "lan_wifi",
                "--duration",
                "0.5",
            ]
        )
        assert code == 1
        assert "error" in capsys.readouterr().err
