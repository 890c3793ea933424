import { describe, expect, it } from "vitest";
import {
  applyAction,
  applyMetrics,
  decidedCount,
  fromQueue,
  markConflict,
  markOffline,
  reconcile,
  type AppState,
} from "../src/state";
import type { QueuePage } from "../src/types";

function page(n = 3): QueuePage {
  return {
    code: "water access",
    version: 1,
    total: n,
    pending: n,
    items: Array.from({ length: n }, (_, i) => ({
      unit: ["doc", i] as [string, number],
      text: `unit ${i}`,
      context: [`before ${i}`, `after ${i}`],
      score: 0.9 - i * 0.1,
    })),
  };
}

function fresh(n = 3): AppState {
  return fromQueue("demo", "water access", "ana", page(n));
}

describe("fromQueue", () => {
  it("mirrors the queue in order with the cursor on the first card", () => {
    const state = fresh();
    expect(state.cards.map((c) => c.unit[1])).toEqual([0, 1, 2]);
    expect(state.cards.every((c) => c.state === "pending" && c.seq === null)).toBe(true);
    expect(state.cursor).toBe(0);
    expect(state.queueVersion).toBe(1);
  });

  it("parks the cursor when the queue is empty", () => {
    expect(fresh(0).cursor).toBe(-1);
  });
});

describe("applyAction", () => {
  it("accept decides the current card and emits one submission", () => {
    const { state, submissions } = applyAction(fresh(), "accept");
    expect(state.cards[0]?.state).toBe("accept");
    expect(state.cursor).toBe(1);
    expect(state.history).toEqual([0]);
    expect(submissions).toEqual([
      { unit: ["doc", 0], code: "water access", decision: "accept", reviewer: "ana" },
    ]);
  });

  it("skip moves on without deciding and the cursor cycles back", () => {
    let state = fresh();
    state = applyAction(state, "skip").state;
    expect(state.cards[0]?.state).toBe("skipped");
    expect(state.cursor).toBe(1);
    state = applyAction(state, "accept").state;
    state = applyAction(state, "reject").state;
    expect(state.cursor).toBe(0); // back to the skipped card
    state = applyAction(state, "accept").state;
    expect(state.cursor).toBe(-1);
    expect(decidedCount(state)).toBe(3);
  });

  it("undo restores the most recent decision and emits a pending submission", () => {
    let state = fresh();
    state = applyAction(state, "accept").state;
    state = applyAction(state, "reject").state;
    const result = applyAction(state, "undo");
    expect(result.state.cards[1]?.state).toBe("pending");
    expect(result.state.cursor).toBe(1);
    expect(result.state.history).toEqual([0]);
    expect(result.submissions).toEqual([
      { unit: ["doc", 1], code: "water access", decision: "pending", reviewer: "ana" },
    ]);
  });

  it("undo with no history is a no-op", () => {
    const state = fresh();
    const result = applyAction(state, "undo");
    expect(result.state).toBe(state);
    expect(result.submissions).toEqual([]);
  });

  it("deciding with an exhausted queue is a no-op", () => {
    let state = fresh(1);
    state = applyAction(state, "accept").state;
    const result = applyAction(state, "accept");
    expect(result.submissions).toEqual([]);
    expect(result.state.cursor).toBe(-1);
  });

  it("expand toggles only the current card", () => {
    let state = fresh();
    state = applyAction(state, "expand").state;
    expect(state.cards[0]?.expanded).toBe(true);
    expect(state.cards[1]?.expanded).toBe(false);
    state = applyAction(state, "expand").state;
    expect(state.cards[0]?.expanded).toBe(false);
  });

  it("does not mutate the input state", () => {
    const state = fresh();
    const frozen = JSON.stringify(state);
    applyAction(state, "accept");
    applyAction(state, "skip");
    expect(JSON.stringify(state)).toBe(frozen);
  });
});

describe("reconcile and flags", () => {
  it("stores the server seq on the matching card and clears conflicts", () => {
    let state = markConflict(fresh(), "stale");
    state = reconcile(state, {
      seq: 7,
      unit: ["doc", 1],
      code: "water access",
      decision: "accept",
      reviewer: "ana",
      appended: true,
    });
    expect(state.cards[1]?.seq).toBe(7);
    expect(state.conflict).toBeNull();
  });

  it("metrics and offline markers replace only their own fields", () => {
    let state = fresh();
    const metrics = {
      code: "water access",
      queue_version: 1,
      progress: { total: 3, accepted: 1, rejected: 0, pending: 2 },
      report: null,
    };
    state = applyMetrics(state, metrics);
    expect(state.metrics).toBe(metrics);
    const offline = markOffline(state, true);
    expect(offline.offline).toBe(true);
    expect(markOffline(offline, true)).toBe(offline);
  });
});
