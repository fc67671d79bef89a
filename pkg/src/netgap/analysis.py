"""Bottleneck analysis over paired wireless and access-link measurements.

The pipeline answers one question per home: when traffic is slow, is the
wireless hop or the ISP access link the limiting factor? It works on
6-hour UTC windows. A window counts only if it saw at least one test on
each path (the coincidence rule); per-path throughput is the median of
that window's samples. A window is a bottleneck window when the wireless
median is strictly below the access median.

Households whose access plan visibly changed mid-study are split at the
change into separate vantage points, since prevalence before and after a
plan upgrade describes two different networks. Vantage points with fewer
than 20 usable windows are dropped as too noisy to summarize.

Everything here is a pure function over immutable inputs; running
per-household analyses concurrently is safe.
"""

from __future__ import annotations

import json
import math
import statistics
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone

from .errors import InsufficientDataError
from .model import PATH_LAN_WIFI, PATH_WAN_ACCESS, ThroughputSample, format_rfc3339

DEFAULT_WINDOW_SECONDS = 21600
DEFAULT_MIN_WINDOWS = 20
DEFAULT_RATIO_THRESHOLD = 1.5
DEFAULT_SUSTAIN_WINDOWS = 28
DEFAULT_RARE_MAX = 0.1
DEFAULT_FREQUENT_MIN = 0.8

# Speed tiers in Mbps: lower bound inclusive, upper bound exclusive.
TIERS: list[tuple[float, float, str]] = [
    (0.0, 50.0, "<50"),
    (50.0, 100.0, "50-100"),
    (100.0, 200.0, "100-200"),
    (200.0, 400.0, "200-400"),
    (400.0, 800.0, "400-800"),
    (800.0, math.inf, ">800"),
]
TIER_LABELS = [label for _, _, label in TIERS]

CLASS_RARE = "rare"
CLASS_MIXED = "mixed"
CLASS_FREQUENT = "frequent"

TIER_SOURCE_METADATA = "metadata"
TIER_SOURCE_INFERRED = "inferred"


@dataclass(frozen=True)
class AnalysisParams:
    window_seconds: int = DEFAULT_WINDOW_SECONDS
    min_windows: int = DEFAULT_MIN_WINDOWS
    ratio_threshold: float = DEFAULT_RATIO_THRESHOLD
    sustain_windows: int = DEFAULT_SUSTAIN_WINDOWS
    rare_max: float = DEFAULT_RARE_MAX
    frequent_min: float = DEFAULT_FREQUENT_MIN

    def validate(self) -> None:
        if self.window_seconds <= 0:
            raise ValueError("window_seconds must be positive")
        if self.min_windows < 1:
            raise ValueError("min_windows must be at least 1")
        if self.ratio_threshold <= 1.0:
            raise ValueError("ratio_threshold must exceed 1")
        if self.sustain_windows < 1:
            raise ValueError("sustain_windows must be at least 1")
        if not (0.0 <= self.rare_max < self.frequent_min <= 1.0):
            raise ValueError("need 0 <= rare_max < frequent_min <= 1")


@dataclass(frozen=True)
class CoincidentWindow:
    """One aligned window that saw both a wireless and an access test."""

    window_start_utc: datetime
    household_id: str
    median_wifi_mbps: float
    median_access_mbps: float
    wifi_sample_count: int
    access_sample_count: int
    is_bottleneck: bool

    def validate(self) -> None:
        if self.wifi_sample_count < 1 or self.access_sample_count < 1:
            raise ValueError("coincident window needs at least one sample per path")
        if self.median_wifi_mbps <= 0 or self.median_access_mbps <= 0:
            raise ValueError("window medians must be positive")
        if self.is_bottleneck != (self.median_wifi_mbps < self.median_access_mbps):
            raise ValueError("is_bottleneck inconsistent with medians")


@dataclass(frozen=True)
class VantagePoint:
    """A household segment observed under one access plan."""

    vantage_id: str
    household_id: str
    segment_index: int
    start_utc: datetime
    end_utc: datetime
    speed_tier: str | None = None
    tier_source: str | None = None


@dataclass(frozen=True)
class VantageStats:
    vantage_id: str
    tier: str
    window_count: int
    prevalence: float
    median_wifi_mbps: float
    median_access_mbps: float
    effective_throughput_mbps: float
    gap_mbps: float
    diff_sample_error_mbps: float
    prevalence_class: str


@dataclass(frozen=True)
class TierSummary:
    tier: str
    vantage_count: int
    mean_access_mbps: float
    mean_effective_mbps: float
    mean_gap_mbps: float


@dataclass(frozen=True)
class CdfPoint:
    value: float
    cumulative_fraction: float


def _window_index(ts: datetime, window_seconds: int) -> int:
    return math.floor(ts.timestamp() / window_seconds)


def _window_start(index: int, window_seconds: int) -> datetime:
    return datetime.fromtimestamp(index * window_seconds, tz=timezone.utc)


def _median(values: list[float]) -> float:
    return float(statistics.median(values))


def resample_windows(
    samples: list[ThroughputSample], window_seconds: int = DEFAULT_WINDOW_SECONDS
) -> list[CoincidentWindow]:
    """Group one household's samples into aligned coincident windows.

    Window boundaries are exact multiples of window_seconds from the UTC
    epoch. A window is emitted only when both paths are present in it;
    per-path medians use the mean-of-middle-two convention for even counts.
    """
    if window_seconds <= 0:
        raise ValueError("window_seconds must be positive")
    if not samples:
        return []
    households = {s.household_id for s in samples}
    if len(households) != 1:
        raise ValueError(f"samples span {len(households)} households, expected one")
    household_id = samples[0].household_id

    by_window: dict[int, dict[str, list[float]]] = {}
    for s in samples:
        idx = _window_index(s.timestamp_utc, window_seconds)
        by_window.setdefault(idx, {PATH_LAN_WIFI: [], PATH_WAN_ACCESS: []})[s.path].append(
            s.throughput_mbps
        )

    windows = []
    for idx in sorted(by_window):
        wifi = by_window[idx][PATH_LAN_WIFI]
        access = by_window[idx][PATH_WAN_ACCESS]
        if not wifi or not access:
            continue
        median_wifi = _median(wifi)
        median_access = _median(access)
        window = CoincidentWindow(
            window_start_utc=_window_start(idx, window_seconds),
            household_id=household_id,
            median_wifi_mbps=median_wifi,
            median_access_mbps=median_access,
            wifi_sample_count=len(wifi),
            access_sample_count=len(access),
            is_bottleneck=median_wifi < median_access,
        )
        window.validate()
        windows.append(window)
    return windows


def sample_error_of_difference(windows: list[CoincidentWindow]) -> float:
    """Standard error of the per-window wifi-minus-access differences.

    Sample standard deviation (n-1 denominator) over sqrt(n).
    """
    if len(windows) < 2:
        raise InsufficientDataError("need at least 2 windows for a sample error")
    diffs = [w.median_wifi_mbps - w.median_access_mbps for w in windows]
    return statistics.stdev(diffs) / math.sqrt(len(diffs))


def filter_vantage_points(
    candidates: list[tuple[VantagePoint, list[CoincidentWindow]]],
    min_windows: int = DEFAULT_MIN_WINDOWS,
) -> list[tuple[VantagePoint, list[CoincidentWindow]]]:
    """Keep only vantage points with enough coincident windows to summarize."""
    return [(vp, windows) for vp, windows in candidates if len(windows) >= min_windows]


def detect_access_change(
    windows: list[CoincidentWindow],
    ratio_threshold: float = DEFAULT_RATIO_THRESHOLD,
    sustain_windows: int = DEFAULT_SUSTAIN_WINDOWS,
) -> list[datetime]:
    """Find instants where the access plan level changed and stayed changed.

    At each candidate boundary the rolling median of the trailing
    sustain_windows access medians is compared against the leading
    sustain_windows. A boundary triggers when the ratio leaves
    [1/ratio_threshold, ratio_threshold]. Consecutive triggering boundaries
    are collapsed to the midpoint of the strongest-ratio plateau, and kept
    splits must be at least sustain_windows apart.
    """
    if ratio_threshold <= 1.0:
        raise ValueError("ratio_threshold must exceed 1")
    if sustain_windows < 1:
        raise ValueError("sustain_windows must be at least 1")
    n = len(windows)
    starts = [w.window_start_utc for w in windows]
    if starts != sorted(starts):
        raise ValueError("windows must be time-ordered")
    access = [w.median_access_mbps for w in windows]

    candidates: list[tuple[int, float]] = []
    for i in range(sustain_windows, n - sustain_windows + 1):
        trailing = _median(access[i - sustain_windows : i])
        leading = _median(access[i : i + sustain_windows])
        ratio = leading / trailing
        if ratio > ratio_threshold or ratio < 1.0 / ratio_threshold:
            candidates.append((i, max(ratio, 1.0 / ratio)))

    # One split per run of consecutive triggering boundaries, placed at the
    # midpoint of the run's maximal-ratio plateau.
    split_indices: list[int] = []
    run: list[tuple[int, float]] = []
    for entry in candidates + [(-1, 0.0)]:
        if run and entry[0] != run[-1][0] + 1:
            best = max(m for _, m in run)
            argmax = next(k for k, (_, m) in enumerate(run) if m == best)
            lo = hi = argmax
            while lo > 0 and run[lo - 1][1] == best:
                lo -= 1
            while hi < len(run) - 1 and run[hi + 1][1] == best:
                hi += 1
            split_indices.append((run[lo][0] + run[hi][0]) // 2)
            run = []
        if entry[0] >= 0:
            run.append(entry)

    kept: list[int] = []
    for idx in split_indices:
        if not kept or idx - kept[-1] >= sustain_windows:
            kept.append(idx)
    return [windows[idx].window_start_utc for idx in kept]


def split_household(
    household_id: str,
    windows: list[CoincidentWindow],
    split_instants: list[datetime],
    window_seconds: int = DEFAULT_WINDOW_SECONDS,
) -> list[tuple[VantagePoint, list[CoincidentWindow]]]:
    """Partition a household's windows into per-plan vantage points.

    k split instants yield k+1 vantage points with contiguous, disjoint
    periods covering the household's whole observed span. An unsplit
    household keeps its id as the vantage id; segments get #0, #1, ...
    """
    if not windows:
        if split_instants:
            raise ValueError("cannot split a household with no windows")
        return []
    starts = [w.window_start_utc for w in windows]
    if starts != sorted(starts):
        raise ValueError("windows must be time-ordered")
    period_start = starts[0]
    period_end = starts[-1] + _td(window_seconds)
    instants = list(split_instants)
    if instants != sorted(instants) or len(set(instants)) != len(instants):
        raise ValueError("split instants must be strictly increasing")
    for t in instants:
        if not (period_start < t < period_end):
            raise ValueError(f"split instant {t.isoformat()} outside household period")

    bounds = [period_start, *instants, period_end]
    segments = []
    for i in range(len(bounds) - 1):
        seg_windows = [w for w in windows if bounds[i] <= w.window_start_utc < bounds[i + 1]]
        vantage_id = household_id if len(bounds) == 2 else f"{household_id}#{i}"
        vp = VantagePoint(
            vantage_id=vantage_id,
            household_id=household_id,
            segment_index=i,
            start_utc=bounds[i],
            end_utc=bounds[i + 1],
        )
        segments.append((vp, seg_windows))
    return segments


def _td(seconds: int):
    from datetime import timedelta

    return timedelta(seconds=seconds)


def bottleneck_prevalence(windows: list[CoincidentWindow]) -> float:
    """Fraction of coincident windows where the wireless hop was the limit."""
    if not windows:
        raise InsufficientDataError("prevalence needs at least one window")
    return sum(1 for w in windows if w.is_bottleneck) / len(windows)


def effective_throughput(median_wifi_mbps: float, median_access_mbps: float) -> float:
    """What the user actually gets: the smaller of the two path medians."""
    if median_wifi_mbps <= 0 or median_access_mbps <= 0:
        raise ValueError("medians must be positive")
    return min(median_wifi_mbps, median_access_mbps)


def tier_for_speed(mbps: float) -> str:
    if not (mbps > 0) or math.isinf(mbps):
        raise ValueError("speed must be positive and finite")
    for lower, upper, label in TIERS:
        if lower <= mbps < upper:
            return label
    raise AssertionError("tier bins must cover (0, inf)")


def _percentile_nearest_rank(values: list[float], fraction: float) -> float:
    ordered = sorted(values)
    rank = math.ceil(fraction * len(ordered))
    return ordered[max(rank, 1) - 1]


def assign_speed_tier(
    vantage: VantagePoint,
    metadata_tier: str | None = None,
    access_windows: list[CoincidentWindow] | None = None,
) -> VantagePoint:
    """Attach a speed tier: trust plan metadata, else infer from measurements.

    Inference bins the 95th percentile (nearest-rank) of the window access
    medians, which tolerates a stray outlier test better than the maximum.
    """
    if metadata_tier is not None:
        if metadata_tier not in TIER_LABELS:
            raise ValueError(f"unknown tier {metadata_tier!r}")
        return replace(vantage, speed_tier=metadata_tier, tier_source=TIER_SOURCE_METADATA)
    if not access_windows:
        raise InsufficientDataError(
            f"vantage {vantage.vantage_id}: no metadata tier and no access windows"
        )
    p95 = _percentile_nearest_rank([w.median_access_mbps for w in access_windows], 0.95)
    return replace(vantage, speed_tier=tier_for_speed(p95), tier_source=TIER_SOURCE_INFERRED)


def classify_prevalence(
    p: float,
    rare_max: float = DEFAULT_RARE_MAX,
    frequent_min: float = DEFAULT_FREQUENT_MIN,
) -> str:
    if not (0.0 <= p <= 1.0):
        raise ValueError("prevalence must lie in [0, 1]")
    if p <= rare_max:
        return CLASS_RARE
    if p >= frequent_min:
        return CLASS_FREQUENT
    return CLASS_MIXED


def prevalence_cdf(values: list[float]) -> list[CdfPoint]:
    """Empirical CDF with ties merged; the last point always reaches 1."""
    if not values:
        raise InsufficientDataError("empirical CDF needs at least one value")
    ordered = sorted(values)
    n = len(ordered)
    points = []
    seen = 0
    for i, v in enumerate(ordered):
        seen += 1
        if i + 1 < n and ordered[i + 1] == v:
            continue
        points.append(CdfPoint(value=v, cumulative_fraction=seen / n))
    return points


def _tier_order(label: str) -> int:
    return TIER_LABELS.index(label)


def tier_summary(stats: list[VantageStats]) -> list[TierSummary]:
    """Per-tier arithmetic means, one row per nonempty tier in bin order."""
    by_tier: dict[str, list[VantageStats]] = {}
    for s in stats:
        by_tier.setdefault(s.tier, []).append(s)
    summaries = []
    for tier in sorted(by_tier, key=_tier_order):
        group = by_tier[tier]
        summaries.append(
            TierSummary(
                tier=tier,
                vantage_count=len(group),
                mean_access_mbps=statistics.fmean(s.median_access_mbps for s in group),
                mean_effective_mbps=statistics.fmean(
                    s.effective_throughput_mbps for s in group
                ),
                mean_gap_mbps=statistics.fmean(s.gap_mbps for s in group),
            )
        )
    return summaries


def compute_vantage_stats(
    vantage: VantagePoint,
    windows: list[CoincidentWindow],
    params: AnalysisParams,
) -> VantageStats:
    if vantage.speed_tier is None:
        raise ValueError("vantage point needs a speed tier before stats")
    prevalence = bottleneck_prevalence(windows)
    median_wifi = _median([w.median_wifi_mbps for w in windows])
    median_access = _median([w.median_access_mbps for w in windows])
    effective = effective_throughput(median_wifi, median_access)
    error = sample_error_of_difference(windows) if len(windows) >= 2 else 0.0
    return VantageStats(
        vantage_id=vantage.vantage_id,
        tier=vantage.speed_tier,
        window_count=len(windows),
        prevalence=prevalence,
        median_wifi_mbps=median_wifi,
        median_access_mbps=median_access,
        effective_throughput_mbps=effective,
        gap_mbps=median_access - effective,
        diff_sample_error_mbps=error,
        prevalence_class=classify_prevalence(
            prevalence, params.rare_max, params.frequent_min
        ),
    )


@dataclass(frozen=True)
class CohortResult:
    params: AnalysisParams
    sample_count: int
    household_count: int
    vantage_points: list[VantagePoint] = field(default_factory=list)
    stats: list[VantageStats] = field(default_factory=list)
    # per-vantage coincident windows, in time order; report files ignore
    # this, the live API serves the latest window's verdict from it
    windows: dict[str, list[CoincidentWindow]] = field(default_factory=dict)


def analyze_cohort(
    samples: list[ThroughputSample],
    params: AnalysisParams | None = None,
    metadata_tiers: dict[str, str] | None = None,
) -> CohortResult:
    """Run the full pipeline: window, split, filter, tier, summarize.

    metadata_tiers maps household_id to a known plan tier; households not
    listed get their tier inferred from measurements.
    """
    params = params or AnalysisParams()
    params.validate()
    metadata_tiers = metadata_tiers or {}

    by_household: dict[str, list[ThroughputSample]] = {}
    for s in samples:
        by_household.setdefault(s.household_id, []).append(s)

    candidates: list[tuple[VantagePoint, list[CoincidentWindow]]] = []
    for household_id in sorted(by_household):
        windows = resample_windows(by_household[household_id], params.window_seconds)
        splits = detect_access_change(
            windows, params.ratio_threshold, params.sustain_windows
        )
        candidates.extend(
            split_household(household_id, windows, splits, params.window_seconds)
        )

    retained = filter_vantage_points(candidates, params.min_windows)
    vantage_points = []
    stats = []
    windows_by_vantage = {}
    for vp, windows in retained:
        vp = assign_speed_tier(vp, metadata_tiers.get(vp.household_id), windows)
        vantage_points.append(vp)
        stats.append(compute_vantage_stats(vp, windows, params))
        windows_by_vantage[vp.vantage_id] = windows
    return CohortResult(
        params=params,
        sample_count=len(samples),
        household_count=len(by_household),
        vantage_points=vantage_points,
        stats=stats,
        windows=windows_by_vantage,
    )


def _cdf_as_lists(points: list[CdfPoint]) -> list[list[float]]:
    return [[p.value, p.cumulative_fraction] for p in points]


def cohort_report(result: CohortResult) -> dict:
    """Deterministic cohort-level aggregation of all vantage statistics."""
    stats = result.stats
    if not stats:
        raise InsufficientDataError("no vantage points retained; nothing to report")

    summaries = tier_summary(stats)
    by_class: dict[str, list[VantageStats]] = {}
    for s in stats:
        by_class.setdefault(s.prevalence_class, []).append(s)

    def class_median_access(name: str) -> float | None:
        group = by_class.get(name)
        if not group:
            return None
        return _median([s.median_access_mbps for s in group])

    cdf_by_tier = {}
    for summary in summaries:
        tier_prevalences = [s.prevalence for s in stats if s.tier == summary.tier]
        cdf_by_tier[summary.tier] = _cdf_as_lists(prevalence_cdf(tier_prevalences))

    tier_median_access = {}
    tier_median_effective = {}
    for summary in summaries:
        group = [s for s in stats if s.tier == summary.tier]
        tier_median_access[summary.tier] = _median([s.median_access_mbps for s in group])
        tier_median_effective[summary.tier] = _median(
            [s.effective_throughput_mbps for s in group]
        )

    return {
        "sample_count": result.sample_count,
        "household_count": result.household_count,
        "vantage_point_count": len(stats),
        "window_count_total": sum(s.window_count for s in stats),
        "at_least_one_bottleneck_fraction": sum(1 for s in stats if s.prevalence > 0)
        / len(stats),
        "class_counts": {
            name: len(by_class.get(name, []))
            for name in (CLASS_RARE, CLASS_MIXED, CLASS_FREQUENT)
        },
        "median_access_frequent_mbps": class_median_access(CLASS_FREQUENT),
        "median_access_rare_mbps": class_median_access(CLASS_RARE),
        "tier_summaries": [
            {
                "tier": t.tier,
                "vantage_count": t.vantage_count,
                "mean_access_mbps": t.mean_access_mbps,
                "mean_effective_mbps": t.mean_effective_mbps,
                "mean_gap_mbps": t.mean_gap_mbps,
                "median_access_mbps": tier_median_access[t.tier],
                "median_effective_mbps": tier_median_effective[t.tier],
            }
            for t in summaries
        ],
        "prevalence_cdf_overall": _cdf_as_lists(
            prevalence_cdf([s.prevalence for s in stats])
        ),
        "prevalence_cdf_by_tier": cdf_by_tier,
        "vantage_stats": [
            {
                "vantage_id": s.vantage_id,
                "tier": s.tier,
                "window_count": s.window_count,
                "prevalence": s.prevalence,
                "median_wifi_mbps": s.median_wifi_mbps,
                "median_access_mbps": s.median_access_mbps,
                "effective_throughput_mbps": s.effective_throughput_mbps,
                "gap_mbps": s.gap_mbps,
                "diff_sample_error_mbps": s.diff_sample_error_mbps,
                "prevalence_class": s.prevalence_class,
            }
            for s in sorted(stats, key=lambda s: s.vantage_id)
        ],
        "params": {
            "window_seconds": result.params.window_seconds,
            "min_windows": result.params.min_windows,
            "ratio_threshold": result.params.ratio_threshold,
            "sustain_windows": result.params.sustain_windows,
            "rare_max": result.params.rare_max,
            "frequent_min": result.params.frequent_min,
        },
    }


def report_json_bytes(report: dict) -> bytes:
    """Canonical JSON encoding; identical input always gives identical bytes."""
    return (json.dumps(report, sort_keys=True, indent=2) + "\n").encode("utf-8")


def vantage_points_json(result: CohortResult) -> list[dict]:
    """Vantage point descriptors for the read-only analysis API."""
    rows = []
    by_id = {vp.vantage_id: vp for vp in result.vantage_points}
    for s in sorted(result.stats, key=lambda s: s.vantage_id):
        vp = by_id[s.vantage_id]
        windows = result.windows.get(s.vantage_id, [])
        latest = windows[-1] if windows else None
        rows.append(
            {
                "vantage_id": s.vantage_id,
                "household_id": vp.household_id,
                "segment_index": vp.segment_index,
                "start_utc": format_rfc3339(vp.start_utc),
                "end_utc": format_rfc3339(vp.end_utc),
                "tier": s.tier,
                "tier_source": vp.tier_source,
                "window_count": s.window_count,
                "prevalence": s.prevalence,
                "median_wifi_mbps": s.median_wifi_mbps,
                "median_access_mbps": s.median_access_mbps,
                "effective_throughput_mbps": s.effective_throughput_mbps,
                "gap_mbps": s.gap_mbps,
                "diff_sample_error_mbps": s.diff_sample_error_mbps,
                "prevalence_class": s.prevalence_class,
                "latest_window": None
                if latest is None
                else {
                    "window_start_utc": format_rfc3339(latest.window_start_utc),
                    "median_wifi_mbps": latest.median_wifi_mbps,
                    "median_access_mbps": latest.median_access_mbps,
                    "is_bottleneck": latest.is_bottleneck,
                },
            }
        )
    return rows
