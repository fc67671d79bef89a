import { describe, expect, it } from "vitest";

import {
  downloadUrl,
  parseSnapshot,
  runDownloadTest,
  type Snapshot,
} from "../src/ndt7.js";
import { FakeSocket } from "./helpers.js";

function harness() {
  const sockets: FakeSocket[] = [];
  const clock = { ms: 0 };
  const deps = {
    openSocket: (url: string) => {
      const socket = new FakeSocket(url);
      sockets.push(socket);
      return socket;
    },
    now: () => clock.ms,
  };
  return { sockets, clock, deps };
}

describe("download URL", () => {
  it("builds ws URLs from bare host:port", () => {
    expect(downloadUrl("127.0.0.1:8080", 10)).toBe(
      "ws://127.0.0.1:8080/ndt/v7/download?duration=10",
    );
  });

  it("maps http(s) origins to ws(s)", () => {
    expect(downloadUrl("http://router.lan:4443/", 5)).toBe(
      "ws://router.lan:4443/ndt/v7/download?duration=5",
    );
    expect(downloadUrl("https://router.lan", 5)).toBe(
      "wss://router.lan/ndt/v7/download?duration=5",
    );
  });
});

describe("snapshot parsing", () => {
  it("accepts well-formed snapshots", () => {
    expect(parseSnapshot('{"elapsed_seconds":1.5,"bytes_transferred":42}')).toEqual(
      { elapsedSeconds: 1.5, bytesTransferred: 42 },
    );
  });

  it.each([
    "not json",
    '{"elapsed_seconds":-1,"bytes_transferred":42}',
    '{"elapsed_seconds":1,"bytes_transferred":4.5}',
    '{"elapsed_seconds":1,"bytes_transferred":true}',
    '{"elapsed_seconds":1}',
  ])("rejects %s", (raw) => {
    expect(() => parseSnapshot(raw)).toThrow();
  });
});

describe("download test run", () => {
  it("measures 50 Mbps from counted bytes and wall clock", async () => {
    const h = harness();
    const run = runDownloadTest("127.0.0.1:1", 10, h.deps);
    const socket = h.sockets[0];
    socket.open();
    for (let i = 0; i < 100; i++) {
      socket.binary(625_000); // 62.5 MB total
    }
    h.clock.ms = 10_000;
    socket.end();
    const result = await run;
    expect(result.bytesTransferred).toBe(62_500_000);
    expect(result.durationSeconds).toBe(10);
    expect(result.throughputMbps).toBe(50);
    expect(result.throughputMbps).toBeGreaterThanOrEqual(45);
    expect(result.throughputMbps).toBeLessThanOrEqual(55);
  });

  it("asks the server for binary frames", () => {
    const h = harness();
    void runDownloadTest("h:1", 10, h.deps).catch(() => undefined);
    expect(h.sockets[0].binaryType).toBe("arraybuffer");
    h.sockets[0].fail();
  });

  it("counts typed-array frames too", async () => {
    const h = harness();
    const run = runDownloadTest("h:1", 1, h.deps);
    const socket = h.sockets[0];
    socket.open();
    socket.onmessage?.({ data: new Uint8Array(1000) });
    h.clock.ms = 1000;
    socket.end();
    expect((await run).bytesTransferred).toBe(1000);
  });

  it("hands snapshots to the live readout", async () => {
    const h = harness();
    const seen: Snapshot[] = [];
    const run = runDownloadTest("h:1", 1, h.deps, (s) => seen.push(s));
    const socket = h.sockets[0];
    socket.open();
    socket.binary(500);
    socket.text('{"elapsed_seconds":0.5,"bytes_transferred":500}');
    h.clock.ms = 1000;
    socket.end();
    const result = await run;
    expect(seen).toEqual([{ elapsedSeconds: 0.5, bytesTransferred: 500 }]);
    expect(result.snapshots).toEqual(seen);
  });

  it("rejects on malformed snapshots and closes the socket", async () => {
    const h = harness();
    const run = runDownloadTest("h:1", 1, h.deps);
    const socket = h.sockets[0];
    socket.open();
    socket.text("garbage");
    await expect(run).rejects.toThrow("malformed snapshot");
    expect(socket.closed).toBe(true);
  });

  it("rejects when the connection fails", async () => {
    const h = harness();
    const run = runDownloadTest("h:1", 1, h.deps);
    h.sockets[0].fail();
    await expect(run).rejects.toThrow("connection to the test server failed");
  });

  it("rejects a test that ends too early", async () => {
    const h = harness();
    const run = runDownloadTest("h:1", 10, h.deps);
    const socket = h.sockets[0];
    socket.open();
    socket.binary(100);
    h.clock.ms = 200; // 0.2 s of a 10 s test
    socket.end();
    await expect(run).rejects.toThrow("ended early");
  });

  it("rejects a test that moved no bytes", async () => {
    const h = harness();
    const run = runDownloadTest("h:1", 1, h.deps);
    const socket = h.sockets[0];
    socket.open();
    h.clock.ms = 1000;
    socket.end();
    await expect(run).rejects.toThrow("ended early");
  });
});
