// Page wiring: buttons, badge, chart, banner. All logic lives in the
// imported modules; this file only touches the DOM.

import { makeApi } from "./api.js";
import { badgeFromVantage, renderChartSvg, seriesFromSamples } from "./dashboard.js";
import { getDeviceId } from "./ident.js";
import { runDownloadTest, type SocketLike } from "./ndt7.js";
import { TestQueue } from "./queue.js";
import { BackgroundScheduler } from "./scheduler.js";
import { PATH_LAN_WIFI, WEB_TOOL, type SampleBody } from "./wire.js";

const OPT_IN_KEY = "netgap.background_enabled";
const TEST_SECONDS = 10;

const api = makeApi(window.location.origin, (url, init) => fetch(url, init));
const queue = new TestQueue();
const deviceId = getDeviceId(window.localStorage);
let householdId: string | null = null;

function el<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) {
    throw new Error(`missing element #${id}`);
  }
  return found as T;
}

const banner = el<HTMLDivElement>("banner");
const badge = el<HTMLSpanElement>("badge");
const readout = el<HTMLDivElement>("readout");
const chart = el<HTMLDivElement>("chart");
const runButton = el<HTMLButtonElement>("run-test");
const optIn = el<HTMLInputElement>("background-opt-in");

function showError(message: string): void {
  banner.textContent = message;
  banner.hidden = false;
}

function clearError(): void {
  banner.hidden = true;
}

async function refreshDashboard(): Promise<void> {
  const [rows, samples] = await Promise.all([
    api.fetchVantage(),
    api.fetchSamples({ household: householdId ?? undefined, limit: 500 }),
  ]);
  const view = badgeFromVantage(rows, householdId);
  badge.textContent = view.label;
  badge.dataset["state"] = view.state;
  chart.innerHTML = renderChartSvg(seriesFromSamples(samples));
}

async function performTest(): Promise<void> {
  runButton.disabled = true;
  readout.textContent = "testing...";
  try {
    const run = await runDownloadTest(
      window.location.origin,
      TEST_SECONDS,
      {
        // the DOM socket's handler slots are typed for DOM events only
        openSocket: (url) => new WebSocket(url) as unknown as SocketLike,
        now: () => performance.now(),
      },
      (snap) => {
        if (snap.elapsedSeconds > 0) {
          const live = (snap.bytesTransferred * 8) / snap.elapsedSeconds / 1e6;
          readout.textContent = `${live.toFixed(1)} Mbps...`;
        }
      },
    );
    readout.textContent = `${run.throughputMbps.toFixed(2)} Mbps over ${run.durationSeconds.toFixed(1)} s`;
    const body: SampleBody = {
      timestamp_utc: new Date().toISOString(),
      household_id: householdId ?? "web",
      device_id: deviceId,
      path: PATH_LAN_WIFI,
      throughput_mbps: run.throughputMbps,
      duration_seconds: run.durationSeconds,
      bytes_transferred: run.bytesTransferred,
      tool: WEB_TOOL,
    };
    await api.postSample(body);
    clearError();
    await refreshDashboard();
  } catch (err) {
    readout.textContent = "";
    showError((err as Error).message);
  } finally {
    runButton.disabled = false;
  }
}

const scheduler = new BackgroundScheduler(
  () => queue.run(performTest),
  {
    setTimer: (fn, ms) => window.setTimeout(fn, ms),
    clearTimer: (handle) => window.clearTimeout(handle as number),
    now: () => Date.now(),
    isVisible: () => document.visibilityState === "visible",
    storage: window.localStorage,
  },
);

runButton.addEventListener("click", () => {
  void queue.run(performTest);
});

optIn.addEventListener("change", () => {
  window.localStorage.setItem(OPT_IN_KEY, optIn.checked ? "1" : "0");
  if (optIn.checked) {
    scheduler.start();
  } else {
    scheduler.stop();
  }
});

async function init(): Promise<void> {
  if (window.localStorage.getItem(OPT_IN_KEY) === "1") {
    optIn.checked = true;
    scheduler.start();
  }
  try {
    const health = await api.health();
    householdId = health.household_id;
    clearError();
    await refreshDashboard();
  } catch (err) {
    showError((err as Error).message);
  }
}

void init();
