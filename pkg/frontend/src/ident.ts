// Persisted random device identifier, stable across page loads.

export interface StorageLike {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
}

const DEVICE_KEY = "netgap.device_id";

function randomHex(bytes: number): string {
  const buf = new Uint8Array(bytes);
  crypto.getRandomValues(buf);
  return Array.from(buf, (b) => b.toString(16).padStart(2, "0")).join("");
}

export function getDeviceId(storage: StorageLike): string {
  const existing = storage.getItem(DEVICE_KEY);
  if (existing) {
    return existing;
  }
  const fresh = `web-${randomHex(8)}`;
  storage.setItem(DEVICE_KEY, fresh);
  return fresh;
}
