// Opt-in background test scheduler.
//
// Fires the task at most once per interval, checking on a short cadence so
// a page that becomes visible again catches up quickly. The last-run time
// is persisted, so reloading the page never doubles the rate.

import type { StorageLike } from "./ident.js";

const LAST_RUN_KEY = "netgap.last_background_run";
export const DEFAULT_INTERVAL_HOURS = 3;

export interface SchedulerDeps {
  setTimer(fn: () => void, ms: number): unknown;
  clearTimer(handle: unknown): void;
  now(): number; // epoch milliseconds
  isVisible(): boolean;
  storage: StorageLike;
}

export class BackgroundScheduler {
  private readonly intervalMs: number;
  private readonly checkMs: number;
  private handle: unknown = null;
  private active = false;

  constructor(
    private readonly task: () => Promise<unknown>,
    private readonly deps: SchedulerDeps,
    intervalHours: number = DEFAULT_INTERVAL_HOURS,
    checkSeconds = 60,
  ) {
    if (intervalHours <= 0 || checkSeconds <= 0) {
      throw new Error("scheduler intervals must be positive");
    }
    this.intervalMs = intervalHours * 3600 * 1000;
    this.checkMs = checkSeconds * 1000;
  }

  get running(): boolean {
    return this.active;
  }

  start(): void {
    if (this.active) {
      return;
    }
    this.active = true;
    this.scheduleNext();
  }

  stop(): void {
    this.active = false;
    if (this.handle !== null) {
      this.deps.clearTimer(this.handle);
      this.handle = null;
    }
  }

  private lastRun(): number {
    const raw = this.deps.storage.getItem(LAST_RUN_KEY);
    const parsed = raw === null ? NaN : Number(raw);
    return Number.isFinite(parsed) ? parsed : 0;
  }

  private scheduleNext(): void {
    this.handle = this.deps.setTimer(() => this.tick(), this.checkMs);
  }

  private tick(): void {
    if (!this.active) {
      return;
    }
    const now = this.deps.now();
    if (this.deps.isVisible() && now - this.lastRun() >= this.intervalMs) {
      this.deps.storage.setItem(LAST_RUN_KEY, String(now));
      // failures only delay the next attempt by one interval
      void this.task().catch(() => undefined);
    }
    this.scheduleNext();
  }
}
