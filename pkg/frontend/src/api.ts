// Thin typed wrappers over the agent's HTTP API.

import type {
  HealthInfo,
  SampleBody,
  StoredSample,
  VantageRow,
} from "./wire.js";

export type FetchLike = (
  url: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<{
  ok: boolean;
  status: number;
  json(): Promise<unknown>;
}>;

export interface SampleQuery {
  household?: string;
  path?: string;
  limit?: number;
}

export interface Api {
  health(): Promise<HealthInfo>;
  postSample(body: SampleBody): Promise<number>;
  fetchVantage(): Promise<VantageRow[]>;
  fetchSamples(query?: SampleQuery): Promise<StoredSample[]>;
}

async function errorText(resp: { json(): Promise<unknown> }, status: number) {
  try {
    const body = (await resp.json()) as Record<string, unknown>;
    if (typeof body["error"] === "string") {
      return body["error"];
    }
  } catch {
    // non-JSON error body
  }
  return `request failed with status ${status}`;
}

export function makeApi(baseUrl: string, fetchFn: FetchLike): Api {
  const base = baseUrl.replace(/\/+$/, "");

  async function getJson(path: string): Promise<unknown> {
    const resp = await fetchFn(`${base}${path}`);
    if (!resp.ok) {
      throw new Error(await errorText(resp, resp.status));
    }
    return resp.json();
  }

  return {
    async health() {
      return (await getJson("/api/v1/health")) as HealthInfo;
    },

    async postSample(body: SampleBody) {
      const resp = await fetchFn(`${base}/api/v1/samples`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(body),
      });
      if (!resp.ok) {
        throw new Error(await errorText(resp, resp.status));
      }
      const parsed = (await resp.json()) as { record_id: number };
      return parsed.record_id;
    },

    async fetchVantage() {
      const parsed = (await getJson("/api/v1/analysis/vantage")) as {
        vantage_points: VantageRow[];
      };
      return parsed.vantage_points;
    },

    async fetchSamples(query: SampleQuery = {}) {
      const params = new URLSearchParams();
      if (query.household) params.set("household", query.household);
      if (query.path) params.set("path", query.path);
      if (query.limit) params.set("limit", String(query.limit));
      const suffix = params.size > 0 ? `?${params}` : "";
      const parsed = (await getJson(`/api/v1/samples${suffix}`)) as {
        samples: StoredSample[];
      };
      return parsed.samples;
    },
  };
}
