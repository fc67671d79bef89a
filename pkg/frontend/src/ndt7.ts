// Streaming download test over WebSocket.
//
// The server pushes binary payload frames interleaved with JSON text
// snapshots. Throughput comes from the byte count and wall clock observed
// here, on the receiving side; the snapshots only feed the live readout.

import { throughputMbps } from "./wire.js";

export const DOWNLOAD_PATH = "/ndt/v7/download";

export interface SocketLike {
  binaryType: string;
  onopen: ((ev: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onerror: ((ev: unknown) => void) | null;
  onclose: ((ev: unknown) => void) | null;
  close(): void;
}

export interface TestDeps {
  openSocket(url: string): SocketLike;
  now(): number; // milliseconds, monotonic preferred
}

export interface Snapshot {
  elapsedSeconds: number;
  bytesTransferred: number;
}

export interface TestRun {
  bytesTransferred: number;
  durationSeconds: number;
  throughputMbps: number;
  snapshots: Snapshot[];
}

export function downloadUrl(base: string, durationSeconds: number): string {
  let origin = base.replace(/\/+$/, "");
  if (origin.startsWith("http://")) {
    origin = `ws://${origin.slice("http://".length)}`;
  } else if (origin.startsWith("https://")) {
    origin = `wss://${origin.slice("https://".length)}`;
  } else if (!origin.startsWith("ws://") && !origin.startsWith("wss://")) {
    origin = `ws://${origin}`;
  }
  return `${origin}${DOWNLOAD_PATH}?duration=${durationSeconds}`;
}

export function parseSnapshot(raw: string): Snapshot {
  let parsed: unknown;
  try {
    parsed = JSON.parse(raw);
  } catch {
    throw new Error(`malformed snapshot: ${raw}`);
  }
  const obj = parsed as Record<string, unknown>;
  const elapsed = obj["elapsed_seconds"];
  const bytes = obj["bytes_transferred"];
  if (typeof elapsed !== "number" || elapsed < 0) {
    throw new Error("snapshot elapsed_seconds must be a nonnegative number");
  }
  if (typeof bytes !== "number" || !Number.isInteger(bytes) || bytes < 0) {
    throw new Error("snapshot bytes_transferred must be a nonnegative integer");
  }
  return { elapsedSeconds: elapsed, bytesTransferred: bytes };
}

function frameBytes(data: unknown): number | null {
  if (data instanceof ArrayBuffer) {
    return data.byteLength;
  }
  if (ArrayBuffer.isView(data)) {
    return data.byteLength;
  }
  // Blob without forcing an async read; servers keep frames binary
  if (typeof data === "object" && data !== null && "size" in data) {
    return (data as { size: number }).size;
  }
  return null;
}

export function runDownloadTest(
  base: string,
  durationSeconds: number,
  deps: TestDeps,
  onSnapshot?: (snap: Snapshot) => void,
): Promise<TestRun> {
  return new Promise((resolve, reject) => {
    const socket = deps.openSocket(downloadUrl(base, durationSeconds));
    socket.binaryType = "arraybuffer";
    let settled = false;
    let startedAt: number | null = null;
    let total = 0;
    const snapshots: Snapshot[] = [];

    const fail = (message: string) => {
      if (!settled) {
        settled = true;
        try {
          socket.close();
        } catch {
          // already closed
        }
        reject(new Error(message));
      }
    };

    socket.onopen = () => {
      startedAt = deps.now();
    };

    socket.onmessage = (ev) => {
      if (settled) {
        return;
      }
      if (startedAt === null) {
        // some fakes skip the open event; first frame starts the clock
        startedAt = deps.now();
      }
      if (typeof ev.data === "string") {
        try {
          const snap = parseSnapshot(ev.data);
          snapshots.push(snap);
          onSnapshot?.(snap);
        } catch (err) {
          fail((err as Error).message);
        }
        return;
      }
      const nbytes = frameBytes(ev.data);
      if (nbytes === null) {
        fail("unexpected frame type");
        return;
      }
      total += nbytes;
    };

    socket.onerror = () => {
      fail("connection to the test server failed");
    };

    socket.onclose = () => {
      if (settled) {
        return;
      }
      settled = true;
      const elapsed =
        startedAt === null ? 0 : (deps.now() - startedAt) / 1000;
      if (total === 0 || elapsed < 0.1 * durationSeconds) {
        reject(
          new Error(
            `test ended early: ${total} bytes over ${elapsed.toFixed(3)} s`,
          ),
        );
        return;
      }
      resolve({
        bytesTransferred: total,
        durationSeconds: elapsed,
        throughputMbps: throughputMbps(total, elapsed),
        snapshots,
      });
    };
  });
}
