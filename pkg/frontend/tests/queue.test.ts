import { describe, expect, it } from "vitest";

import { TestQueue } from "../src/queue.js";

function deferred<T>() {
  let resolve!: (value: T) => void;
  let reject!: (err: unknown) => void;
  const promise = new Promise<T>((res, rej) => {
    resolve = res;
    reject = rej;
  });
  return { promise, resolve, reject };
}

describe("single in-flight test queue", () => {
  it("runs a second task only after the first finishes", async () => {
    const queue = new TestQueue();
    const first = deferred<string>();
    const order: string[] = [];

    const a = queue.run(async () => {
      order.push("a:start");
      const value = await first.promise;
      order.push("a:end");
      return value;
    });
    const b = queue.run(async () => {
      order.push("b:start");
      return "b";
    });

    expect(queue.pending).toBe(2);
    await Promise.resolve();
    expect(order).toEqual(["a:start"]);

    first.resolve("a");
    expect(await a).toBe("a");
    expect(await b).toBe("b");
    expect(order).toEqual(["a:start", "a:end", "b:start"]);
    expect(queue.pending).toBe(0);
  });

  it("keeps serving after a task rejects", async () => {
    const queue = new TestQueue();
    await expect(
      queue.run(async () => {
        throw new Error("boom");
      }),
    ).rejects.toThrow("boom");
    expect(await queue.run(async () => 7)).toBe(7);
    expect(queue.pending).toBe(0);
  });

  it("preserves submission order", async () => {
    const queue = new TestQueue();
    const seen: number[] = [];
    await Promise.all(
      [1, 2, 3, 4].map((i) =>
        queue.run(async () => {
          seen.push(i);
        }),
      ),
    );
    expect(seen).toEqual([1, 2, 3, 4]);
  });
});
