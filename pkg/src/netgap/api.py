"""HTTP JSON API over a sample store, plus the LAN test endpoint.

One aiohttp application serves four things: sample ingest (used by the
browser client), sample queries, read-only analysis results, and the
download-test WebSocket endpoint wired through the agent's exclusive test
slot. When a static directory is configured it is mounted at the root, so
the dashboard and the API share an origin and a port.

If an API token is configured, mutating endpoints require
``Authorization: Bearer <token>``; reads stay open, matching a
LAN-local trust model.
"""

from __future__ import annotations

import json
import logging

from aiohttp import web

from .analysis import (
    AnalysisParams,
    analyze_cohort,
    cohort_report,
    tier_summary,
    vantage_points_json,
)
from .errors import InsufficientDataError, ValidationError
from .model import (
    PATH_LAN_WIFI,
    PATH_WAN_ACCESS,
    ThroughputSample,
    parse_rfc3339,
)
from .protocol import DOWNLOAD_PATH, TestConfig, download_handler
from .store import QueryFilter, SampleStore

log = logging.getLogger("netgap.api")

QUERY_LIMIT_DEFAULT = 10000


def _json_error(status: int, message: str) -> web.Response:
    return web.json_response({"error": message}, status=status)


class _AnalysisCache:
    """Recomputes the cohort analysis only when the store has grown."""

    def __init__(self, store: SampleStore, params: AnalysisParams):
        self.store = store
        self.params = params
        self._seen = -1
        self._result = None

    def current(self):
        count = len(self.store)
        if count != self._seen:
            samples = [r.sample for r in self.store.query_samples()]
            self._result = analyze_cohort(samples, self.params)
            self._seen = count
        return self._result


def build_app(
    store: SampleStore,
    *,
    slot=None,
    test_config: TestConfig | None = None,
    lan_rate_limit_mbps: float | None = None,
    analysis_params: AnalysisParams | None = None,
    api_token: str | None = None,
    static_dir: str | None = None,
    household_id: str | None = None,
) -> web.Application:
    test_config = test_config or TestConfig()
    cache = _AnalysisCache(store, analysis_params or AnalysisParams())

    def authorized(request: web.Request) -> bool:
        if api_token is None:
            return True
        header = request.headers.get("Authorization", "")
        return header == f"Bearer {api_token}"

    async def health(request: web.Request) -> web.Response:
        return web.json_response(
            {
                "status": "ok",
                "record_count": len(store),
                "household_id": household_id,
            }
        )

    async def post_sample(request: web.Request) -> web.Response:
        if not authorized(request):
            return _json_error(401, "missing or bad bearer token")
        try:
            body = await request.json()
        except (json.JSONDecodeError, UnicodeDecodeError):
            return _json_error(400, "body must be JSON")
        if not isinstance(body, dict):
            return _json_error(400, "body must be a JSON object")
        try:
            sample = ThroughputSample.from_json_dict(body)
            record_id = store.append_sample(sample)
        except (ValidationError, ValueError) as exc:
            return _json_error(400, str(exc))
        log.info(
            "event=sample_ingested record_id=%d path=%s household=%s",
            record_id,
            sample.path,
            sample.household_id,
        )
        return web.json_response({"record_id": record_id}, status=201)

    async def get_samples(request: web.Request) -> web.Response:
        q = request.query
        path = q.get("path")
        if path is not None and path not in (PATH_LAN_WIFI, PATH_WAN_ACCESS):
            return _json_error(400, f"unknown path {path!r}")
        try:
            from_utc = parse_rfc3339(q["from"]) if "from" in q else None
            to_utc = parse_rfc3339(q["to"]) if "to" in q else None
            limit = int(q.get("limit", QUERY_LIMIT_DEFAULT))
            query = QueryFilter(
                household_id=q.get("household"),
                path=path,
                from_utc=from_utc,
                to_utc=to_utc,
            )
            query.validate()
        except (ValueError, ValidationError) as exc:
            return _json_error(400, str(exc))
        records = store.query_samples(query)[:limit]
        return web.json_response({"samples": [r.to_json_dict() for r in records]})

    async def get_vantage(request: web.Request) -> web.Response:
        try:
            result = cache.current()
        except InsufficientDataError:
            return web.json_response({"vantage_points": []})
        return web.json_response({"vantage_points": vantage_points_json(result)})

    async def get_tiers(request: web.Request) -> web.Response:
        try:
            result = cache.current()
        except InsufficientDataError:
            return web.json_response({"tiers": []})
        tiers = [
            {
                "tier": t.tier,
                "vantage_count": t.vantage_count,
                "mean_access_mbps": t.mean_access_mbps,
                "mean_effective_mbps": t.mean_effective_mbps,
                "mean_gap_mbps": t.mean_gap_mbps,
            }
            for t in tier_summary(result.stats)
        ]
        return web.json_response({"tiers": tiers})

    async def get_report(request: web.Request) -> web.Response:
        try:
            result = cache.current()
            report = cohort_report(result)
        except InsufficientDataError as exc:
            return _json_error(404, str(exc))
        return web.json_response(report)

    app = web.Application()
    app.router.add_get("/api/v1/health", health)
    app.router.add_post("/api/v1/samples", post_sample)
    app.router.add_get("/api/v1/samples", get_samples)
    app.router.add_get("/api/v1/analysis/vantage", get_vantage)
    app.router.add_get("/api/v1/analysis/tiers", get_tiers)
    app.router.add_get("/api/v1/analysis/report", get_report)
    app.router.add_get(
        DOWNLOAD_PATH,
        download_handler(
            test_config,
            rate_limit_mbps=lan_rate_limit_mbps,
            slot=slot,
            slot_kind="lan_test",
            logger=log,
        ),
    )
    if static_dir is not None:
        async def index(request: web.Request) -> web.FileResponse:
            return web.FileResponse(f"{static_dir}/index.html")

        app.router.add_get("/", index)
        app.router.add_static("/", static_dir)
    return app
