"""Joint wireless-LAN vs access-WAN throughput measurement and analysis.

The package measures download throughput on both sides of a home router
(the wireless hop and the ISP access link), stores the samples, and
answers where the bottleneck sits: per 6-hour window, per household
segment, and across a whole cohort.

Layers, bottom up:

- protocol: streaming download test over WebSocket framing (client + server)
- ratelimit: token-bucket pacing used to emulate link capacities
- model / store: validated samples in an append-only JSONL log with
  CSV/JSONL export-import and an HTTP API
- agent: router-side daemon scheduling WAN tests and hosting LAN tests
- analysis: windowed medians, plan-change splitting, bottleneck prevalence
- synth: deterministic synthetic cohorts for desk-scale validation
- report: JSON/text/CSV artifacts plus rendered figures
"""

from .agent import (
    Agent,
    AgentSettings,
    ScheduleConfig,
    ScheduledEvent,
    TestSlot,
    build_schedule,
    load_agent_settings,
)
from .analysis import (
    AnalysisParams,
    CdfPoint,
    CohortResult,
    CoincidentWindow,
    TierSummary,
    VantagePoint,
    VantageStats,
    analyze_cohort,
    assign_speed_tier,
    bottleneck_prevalence,
    classify_prevalence,
    cohort_report,
    detect_access_change,
    effective_throughput,
    filter_vantage_points,
    prevalence_cdf,
    resample_windows,
    sample_error_of_difference,
    split_household,
    tier_for_speed,
    tier_summary,
)
from .api import build_app
from .errors import (
    BatchImportError,
    BusyError,
    IncompleteTestError,
    InsufficientDataError,
    NetgapError,
    ProtocolError,
    StartupError,
    StorageError,
    TransportError,
    ValidationError,
)
from .model import (
    PATH_LAN_WIFI,
    PATH_WAN_ACCESS,
    SCHEMA_VERSION,
    ThroughputSample,
    format_rfc3339,
    parse_rfc3339,
)
from .protocol import (
    DOWNLOAD_PATH,
    DownloadClient,
    MeasurementSnapshot,
    ProbeServer,
    TestConfig,
    compute_throughput_mbps,
    next_payload_size,
    parse_snapshot,
    run_download_test,
    serve_download,
    snapshot_message,
)
from .ratelimit import TokenBucket
from .report import render_report_files, write_report_files
from .store import QueryFilter, SampleRecord, SampleStore, export_records, parse_export
from .synth import CohortSpec, generate_cohort, write_cohort_store

__version__ = "0.1.0"

__all__ = [
    "Agent",
    "AgentSettings",
    "AnalysisParams",
    "BatchImportError",
    "BusyError",
    "CdfPoint",
    "CohortResult",
    "CohortSpec",
    "CoincidentWindow",
    "DownloadClient",
    "DOWNLOAD_PATH",
    "IncompleteTestError",
    "InsufficientDataError",
    "MeasurementSnapshot",
    "NetgapError",
    "PATH_LAN_WIFI",
    "PATH_WAN_ACCESS",
    "ProbeServer",
    "ProtocolError",
    "QueryFilter",
    "SampleRecord",
    "SampleStore",
    "SCHEMA_VERSION",
    "ScheduleConfig",
    "ScheduledEvent",
    "StartupError",
    "StorageError",
    "TestConfig",
    "TestSlot",
    "ThroughputSample",
    "TierSummary",
    "TokenBucket",
    "TransportError",
    "ValidationError",
    "VantagePoint",
    "VantageStats",
    "analyze_cohort",
    "assign_speed_tier",
    "bottleneck_prevalence",
    "build_app",
    "build_schedule",
    "classify_prevalence",
    "cohort_report",
    "compute_throughput_mbps",
    "detect_access_change",
    "effective_throughput",
    "export_records",
    "filter_vantage_points",
    "format_rfc3339",
    "generate_cohort",
    "load_agent_settings",
    "next_payload_size",
    "parse_export",
    "parse_rfc3339",
    "parse_snapshot",
    "prevalence_cdf",
    "render_report_files",
    "resample_windows",
    "run_download_test",
    "sample_error_of_difference",
    "serve_download",
    "snapshot_message",
    "split_household",
    "tier_for_speed",
    "tier_summary",
    "write_cohort_store",
    "write_report_files",
]
