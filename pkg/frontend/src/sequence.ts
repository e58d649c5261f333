/**
 * Last-write-wins gate for overlapping requests.
 *
 * Each run() takes a ticket from a monotonically increasing sequence; a
 * settled task whose ticket is no longer the newest is reported stale so
 * the caller drops its result instead of rendering it out of order.
 */

export interface Settled<T> {
  stale: boolean;
  value?: T;
  error?: unknown;
}

export class LatestWins {
  private sequence = 0;

  async run<T>(task: () => Promise<T>): Promise<Settled<T>> {
    const ticket = ++this.sequence;
    try {
      const value = await task();
      return { stale: ticket !== this.sequence, value };
    } catch (error) {
      return { stale: ticket !== this.sequence, error };
    }
  }
}
