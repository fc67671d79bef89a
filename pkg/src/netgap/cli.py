"""Command-line entry point.

Subcommands: serve (download test server), test (one-shot client), agent
(router daemon), analyze / report (pipeline over a store; report also
renders figures), synth (deterministic synthetic cohort), export / import
(store portability).

Exit codes: 0 success, 1 runtime failure, 2 usage error. Failures never
leave partial output; report artifacts are rendered in memory before any
file is written.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import logging
import os
import sys

from .agent import Agent, load_agent_settings
from .analysis import AnalysisParams, analyze_cohort
from .errors import InsufficientDataError, NetgapError
from .model import PATHS, parse_rfc3339
from .protocol import TestConfig, run_download_test, serve_download
from .report import write_report_files
from .store import EXPORT_FORMATS, QueryFilter, SampleStore
from .synth import CohortSpec, write_cohort_store

log = logging.getLogger("netgap.cli")


def _setup_logging(verbose: bool) -> None:
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(
        logging.Formatter(
            "ts=%(asctime)s level=%(levelname)s logger=%(name)s %(message)s",
            datefmt="%Y-%m-%dT%H:%M:%S",
        )
    )
    root = logging.getLogger("netgap")
    root.addHandler(handler)
    root.setLevel(logging.DEBUG if verbose else logging.INFO)


def _test_config(args) -> TestConfig:
    return TestConfig(
        duration_seconds=args.duration,
        snapshot_interval_seconds=args.snapshot_interval,
    )


def _add_test_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--duration", type=float, default=10.0, help="test length in seconds")
    parser.add_argument(
        "--snapshot-interval", type=float, default=0.25, help="snapshot cadence in seconds"
    )


def cmd_serve(args) -> int:
    async def run() -> None:
        server = await serve_download(
            args.bind, args.port, _test_config(args), rate_limit_mbps=args.rate_limit_mbps
        )
        print(f"listening on {args.bind}:{server.port}", file=sys.stderr)
        try:
            await asyncio.Event().wait()
        finally:
            await server.stop()

    asyncio.run(run())
    return 0


def cmd_test(args) -> int:
    sample = run_download_test(
        args.endpoint,
        _test_config(args),
        household_id=args.household,
        device_id=args.device,
        path=args.path,
    )
    if args.store:
        with SampleStore(args.store) as store:
            record_id = store.append_sample(sample)
        log.info("event=sample_stored record_id=%d store=%s", record_id, args.store)
    print(json.dumps(sample.to_json_dict(), sort_keys=True))
    return 0


def cmd_agent(args) -> int:
    settings = load_agent_settings(args.config)
    schedule = settings.schedule
    overrides = {}
    if args.household:
        overrides["household_id"] = args.household
    if args.wan_endpoint:
        overrides["wan_endpoint"] = args.wan_endpoint
    if overrides:
        from dataclasses import replace

        schedule = replace(schedule, **overrides)
    bind_host = args.bind if args.bind is not None else settings.bind_host
    port = args.port if args.port is not None else settings.port
    store_path = args.store if args.store is not None else settings.store_path
    static_dir = args.static_dir if args.static_dir is not None else settings.static_dir

    async def run() -> None:
        with SampleStore(store_path) as store:
            agent = Agent(
                schedule,
                store,
                bind_host=bind_host,
                port=port,
                lan_rate_limit_mbps=settings.lan_rate_limit_mbps,
                api_token=settings.api_token,
                static_dir=static_dir,
            )
            await agent.run_forever()

    asyncio.run(run())
    return 0


def _analysis_params(args) -> AnalysisParams:
    return AnalysisParams(
        window_seconds=int(round(args.window_hours * 3600)),
        min_windows=args.min_windows,
        ratio_threshold=args.ratio_threshold,
        sustain_windows=args.sustain_windows,
        rare_max=args.rare_max,
        frequent_min=args.frequent_min,
    )


def _add_analysis_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--store", required=True, help="sample store (JSONL)")
    parser.add_argument("--out", default="report", help="output directory")
    parser.add_argument("--window-hours", type=float, default=6.0)
    parser.add_argument("--min-windows", type=int, default=20)
    parser.add_argument("--ratio-threshold", type=float, default=1.5)
    parser.add_argument("--sustain-windows", type=int, default=28)
    parser.add_argument("--rare-max", type=float, default=0.1)
    parser.add_argument("--frequent-min", type=float, default=0.8)


def _run_analysis(args, figures: bool) -> int:
    if not os.path.exists(args.store):
        print(f"error: store {args.store!r} not found", file=sys.stderr)
        return 1
    params = _analysis_params(args)
    with SampleStore(args.store) as store:
        samples = [r.sample for r in store.query_samples()]
    try:
        result = analyze_cohort(samples, params)
        written = write_report_files(result, args.out, figures=figures)
    except InsufficientDataError as exc:
        print(f"error: insufficient data: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    log.info(
        "event=analysis_done samples=%d vantage_points=%d out=%s",
        result.sample_count,
        len(result.stats),
        args.out,
    )
    return 0


def cmd_analyze(args) -> int:
    return _run_analysis(args, figures=False)


def cmd_report(args) -> int:
    return _run_analysis(args, figures=not args.no_figures)


def cmd_synth(args) -> int:
    if os.path.exists(args.out) and os.path.getsize(args.out) > 0:
        print(f"error: {args.out!r} already exists, refusing to append", file=sys.stderr)
        return 2
    spec = CohortSpec(
        households=args.households,
        households_with_change=args.changed,
        period_days=args.period_days,
        start_utc=parse_rfc3339(args.start),
        seed=args.seed,
        wifi_floor_mbps=args.wifi_floor,
        wifi_cap_mbps=args.wifi_cap,
        noise_fraction=args.noise,
    )
    count = write_cohort_store(spec, args.out)
    print(f"wrote {count} samples to {args.out}")
    return 0


def _query_from_args(args) -> QueryFilter:
    return QueryFilter(
        household_id=args.household,
        path=args.path,
        from_utc=parse_rfc3339(getattr(args, "from")) if getattr(args, "from") else None,
        to_utc=parse_rfc3339(args.to) if args.to else None,
    )


def cmd_export(args) -> int:
    with SampleStore(args.store) as store:
        data = store.export_records(_query_from_args(args), args.format)
    if args.out:
        with open(args.out, "wb") as fh:
            fh.write(data)
    else:
        sys.stdout.buffer.write(data)
    return 0


def cmd_import(args) -> int:
    with open(args.input, "rb") as fh:
        data = fh.read()
    with SampleStore(args.store) as store:
        count = store.import_records(data, args.format)
    print(f"imported {count} records into {args.store}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="netgap",
        description="Home-network throughput measurement and bottleneck analysis.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("serve", help="run a download test server")
    p.add_argument("--bind", default="0.0.0.0")
    p.add_argument("--port", type=int, default=4443)
    p.add_argument("--rate-limit-mbps", type=float, default=None)
    _add_test_config_flags(p)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("test", help="run one download test and print the sample")
    p.add_argument("--endpoint", required=True, help="host:port or ws://host:port")
    p.add_argument("--path", required=True, choices=PATHS)
    p.add_argument("--household", default="cli")
    p.add_argument("--device", default="cli-device")
    p.add_argument("--store", default=None, help="also append the sample here")
    _add_test_config_flags(p)
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("agent", help="run the router-side agent")
    p.add_argument("--config", default=None, help="INI file with an [agent] section")
    p.add_argument("--household", default=None)
    p.add_argument("--wan-endpoint", default=None)
    p.add_argument("--bind", default=None)
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--store", default=None)
    p.add_argument("--static-dir", default=None)
    p.set_defaults(func=cmd_agent)

    p = sub.add_parser("analyze", help="run the pipeline, write data artifacts")
    _add_analysis_flags(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("report", help="analyze plus rendered figures")
    _add_analysis_flags(p)
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("synth", help="generate a synthetic cohort store")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--households", type=int, default=52)
    p.add_argument("--changed", type=int, default=13)
    p.add_argument("--period-days", type=int, default=28)
    p.add_argument("--start", default="2022-01-01T00:00:00Z")
    p.add_argument("--wifi-floor", type=float, default=80.0)
    p.add_argument("--wifi-cap", type=float, default=600.0)
    p.add_argument("--noise", type=float, default=0.03)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("export", help="dump records as JSONL or CSV")
    p.add_argument("--store", required=True)
    p.add_argument("--format", choices=EXPORT_FORMATS, default="jsonl")
    p.add_argument("--out", default=None, help="output file (default: stdout)")
    p.add_argument("--household", default=None)
    p.add_argument("--path", default=None, choices=PATHS)
    p.add_argument("--from", default=None, dest="from")
    p.add_argument("--to", default=None)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("import", help="append an exported file into a store")
    p.add_argument("--store", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=EXPORT_FORMATS, default="jsonl")
    p.set_defaults(func=cmd_import)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _setup_logging(args.verbose)
    try:
        return args.func(args)
    except KeyboardInterrupt:
        return 0
    except NetgapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
