// Shared fakes: storage, timers, sockets.

import type { StorageLike } from "../src/ident.js";
import type { SocketLike } from "../src/ndt7.js";

export class FakeStorage implements StorageLike {
  private items = new Map<string, string>();

  getItem(key: string): string | null {
    return this.items.get(key) ?? null;
  }

  setItem(key: string, value: string): void {
    this.items.set(key, value);
  }
}

interface TimerEntry {
  at: number;
  fn: () => void;
}

export class FakeTimers {
  time = 0;
  private entries: TimerEntry[] = [];

  setTimer = (fn: () => void, ms: number): unknown => {
    const entry = { at: this.time + ms, fn };
    this.entries.push(entry);
    return entry;
  };

  clearTimer = (handle: unknown): void => {
    this.entries = this.entries.filter((e) => e !== handle);
  };

  now = (): number => this.time;

  advance(ms: number): void {
    const target = this.time + ms;
    for (;;) {
      const due = this.entries
        .filter((e) => e.at <= target)
        .sort((a, b) => a.at - b.at)[0];
      if (!due) {
        break;
      }
      this.entries = this.entries.filter((e) => e !== due);
      this.time = due.at;
      due.fn();
    }
    this.time = target;
  }
}

export class FakeSocket implements SocketLike {
  binaryType = "blob";
  onopen: ((ev: unknown) => void) | null = null;
  onmessage: ((ev: { data: unknown }) => void) | null = null;
  onerror: ((ev: unknown) => void) | null = null;
  onclose: ((ev: unknown) => void) | null = null;
  closed = false;
  url: string;

  constructor(url: string) {
    this.url = url;
  }

  close(): void {
    this.closed = true;
  }

  open(): void {
    this.onopen?.({});
  }

  binary(nbytes: number): void {
    this.onmessage?.({ data: new ArrayBuffer(nbytes) });
  }

  text(raw: string): void {
    this.onmessage?.({ data: raw });
  }

  fail(): void {
    this.onerror?.({});
  }

  end(): void {
    this.onclose?.({});
  }
}
