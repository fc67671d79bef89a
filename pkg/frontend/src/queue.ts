// Single in-flight test queue: a second trigger waits for the first to
// finish instead of opening a competing connection.

export class TestQueue {
  private tail: Promise<void> = Promise.resolve();
  private size = 0;

  get pending(): number {
    return this.size;
  }

  run<T>(task: () => Promise<T>): Promise<T> {
    this.size += 1;
    const result = this.tail.then(task);
    this.tail = result.then(
      () => {
        this.size -= 1;
      },
      () => {
        this.size -= 1;
      },
    );
    return result;
  }
}
