// Dashboard view-model, built only from what the server reports.
//
// The badge never re-derives medians or bottleneck verdicts; it reads the
// latest coincident window the analysis API returned, keeping the pipeline
// as the single source of truth.

import type { LatestWindow, StoredSample, VantageRow } from "./wire.js";
import { PATH_LAN_WIFI, PATH_WAN_ACCESS } from "./wire.js";

export type BadgeState = "no-data" | "ok" | "bottleneck";

export interface BadgeView {
  state: BadgeState;
  label: string;
  window: LatestWindow | null;
}

export interface SeriesPoint {
  timestampMs: number;
  mbps: number;
}

export interface DashboardSeries {
  wifi: SeriesPoint[];
  access: SeriesPoint[];
}

export function badgeFromVantage(
  rows: VantageRow[],
  householdId: string | null,
): BadgeView {
  const candidates = householdId
    ? rows.filter((r) => r.household_id === householdId)
    : rows;
  let latest: VantageRow | null = null;
  for (const row of candidates) {
    if (latest === null || row.segment_index > latest.segment_index) {
      latest = row;
    }
  }
  const window = latest?.latest_window ?? null;
  if (window === null) {
    return { state: "no-data", label: "no data yet", window: null };
  }
  if (window.is_bottleneck) {
    return { state: "bottleneck", label: "WiFi bottleneck", window };
  }
  return { state: "ok", label: "no WiFi bottleneck", window };
}

export function seriesFromSamples(samples: StoredSample[]): DashboardSeries {
  const wifi: SeriesPoint[] = [];
  const access: SeriesPoint[] = [];
  for (const s of samples) {
    const point = {
      timestampMs: Date.parse(s.timestamp_utc),
      mbps: s.throughput_mbps,
    };
    if (s.path === PATH_LAN_WIFI) {
      wifi.push(point);
    } else if (s.path === PATH_WAN_ACCESS) {
      access.push(point);
    }
  }
  const byTime = (a: SeriesPoint, b: SeriesPoint) =>
    a.timestampMs - b.timestampMs;
  wifi.sort(byTime);
  access.sort(byTime);
  return { wifi, access };
}

function polylinePoints(
  series: SeriesPoint[],
  tMin: number,
  tMax: number,
  vMax: number,
  width: number,
  height: number,
): string {
  const tSpan = Math.max(1, tMax - tMin);
  return series
    .map((p) => {
      const x = ((p.timestampMs - tMin) / tSpan) * width;
      const y = height - (p.mbps / vMax) * height;
      return `${x.toFixed(1)},${y.toFixed(1)}`;
    })
    .join(" ");
}

export function renderChartSvg(
  series: DashboardSeries,
  width = 640,
  height = 240,
): string {
  const all = [...series.wifi, ...series.access];
  if (all.length === 0) {
    return `<svg viewBox="0 0 ${width} ${height}" class="chart empty"><text x="${
      width / 2
    }" y="${height / 2}" text-anchor="middle">no data yet</text></svg>`;
  }
  const tMin = Math.min(...all.map((p) => p.timestampMs));
  const tMax = Math.max(...all.map((p) => p.timestampMs));
  const vMax = Math.max(1, ...all.map((p) => p.mbps)) * 1.1;
  const lines: string[] = [];
  for (const [name, points] of [
    ["access", series.access],
    ["wifi", series.wifi],
  ] as const) {
    if (points.length > 0) {
      lines.push(
        `<polyline class="series-${name}" fill="none" points="${polylinePoints(
          points,
          tMin,
          tMax,
          vMax,
          width,
          height,
        )}"/>`,
      );
    }
  }
  const scale = `<text x="4" y="12" class="axis">${vMax.toFixed(0)} Mbps</text>`;
  return `<svg viewBox="0 0 ${width} ${height}" class="chart">${scale}${lines.join(
    "",
  )}</svg>`;
}
