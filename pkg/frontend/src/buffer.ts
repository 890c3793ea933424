import type { DecisionAck, Submission } from "./types";

export interface FlushResult {
  acks: DecisionAck[];
  /** Head submission that could not be delivered, still buffered. */
  failed: Submission | null;
  error: unknown;
}

/**
 * FIFO buffer between review actions and the server.
 *
 * Decisions accumulate while offline and flush strictly in action order:
 * one request at a time, and a failure keeps the head (and everything
 * behind it) buffered for the next flush.
 */
export class DecisionBuffer {
  private queue: Submission[] = [];
  private flushing = false;

  get size(): number {
    return this.queue.length;
  }

  peek(): Submission[] {
    return [...this.queue];
  }

  push(submission: Submission): void {
    this.queue.push(submission);
  }

  async flush(
    post: (submission: Submission) => Promise<DecisionAck>,
  ): Promise<FlushResult> {
    if (this.flushing) {
      return { acks: [], failed: null, error: null };
    }
    this.flushing = true;
    const acks: DecisionAck[] = [];
    try {
      while (this.queue.length > 0) {
        const head = this.queue[0];
        if (!head) {
          break;
        }
        try {
          acks.push(await post(head));
        } catch (error) {
          return { acks, failed: head, error };
        }
        this.queue.shift();
      }
      return { acks, failed: null, error: null };
    } finally {
      this.flushing = false;
    }
  }
}
