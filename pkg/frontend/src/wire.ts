// Shapes exchanged with the agent's HTTP API. Field names mirror the wire
// JSON exactly; nothing here is recomputed client-side.

export const PATH_LAN_WIFI = "lan_wifi";
export const PATH_WAN_ACCESS = "wan_access";
export const WEB_TOOL = "netgap-web";

export interface SampleBody {
  timestamp_utc: string;
  household_id: string;
  device_id: string;
  path: string;
  throughput_mbps: number;
  duration_seconds: number;
  bytes_transferred: number;
  tool: string;
}

export interface StoredSample extends SampleBody {
  record_id: number;
}

export interface HealthInfo {
  status: string;
  record_count: number;
  household_id: string | null;
}

export interface LatestWindow {
  window_start_utc: string;
  median_wifi_mbps: number;
  median_access_mbps: number;
  is_bottleneck: boolean;
}

export interface VantageRow {
  vantage_id: string;
  household_id: string;
  segment_index: number;
  start_utc: string;
  end_utc: string;
  tier: string;
  tier_source: string | null;
  window_count: number;
  prevalence: number;
  median_wifi_mbps: number;
  median_access_mbps: number;
  effective_throughput_mbps: number;
  gap_mbps: number;
  diff_sample_error_mbps: number;
  prevalence_class: string;
  latest_window: LatestWindow | null;
}

export function throughputMbps(bytes: number, seconds: number): number {
  if (seconds <= 0) {
    throw new Error("seconds must be positive");
  }
  return (bytes * 8) / seconds / 1e6;
}
