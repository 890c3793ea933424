import type { ReviewAction } from "./keyboard";
import type {
  DecisionAck,
  MetricsPayload,
  QueuePage,
  ReviewCard,
  Submission,
  UnitKey,
} from "./types";

export interface AppState {
  project: string;
  code: string;
  reviewer: string;
  queueVersion: number;
  cards: ReviewCard[];
  /** Index of the card under review; -1 when nothing is left. */
  cursor: number;
  /** Card indexes in the order they were decided, for undo-last. */
  history: number[];
  metrics: MetricsPayload | null;
  offline: boolean;
  conflict: string | null;
  job: { id: string; status: string } | null;
}

export interface ActionResult {
  state: AppState;
  /** Decisions this action produced, in the order they must reach the server. */
  submissions: Submission[];
}

export function fromQueue(
  project: string,
  code: string,
  reviewer: string,
  page: QueuePage,
): AppState {
  const cards: ReviewCard[] = page.items.map((item) => ({
    unit: item.unit,
    code: page.code,
    text: item.text,
    context: item.context,
    score: item.score,
    state: "pending",
    seq: null,
    expanded: false,
  }));
  return {
    project,
    code,
    reviewer,
    queueVersion: page.version,
    cards,
    cursor: cards.length > 0 ? 0 : -1,
    history: [],
    metrics: null,
    offline: false,
    conflict: null,
    job: null,
  };
}

function sameUnit(a: UnitKey, b: UnitKey): boolean {
  return a[0] === b[0] && a[1] === b[1];
}

/** Next undecided card after `from`, wrapping; -1 when none remain. */
function nextUndecided(cards: ReviewCard[], from: number): number {
  const n = cards.length;
  for (let step = 1; step <= n; step++) {
    const index = (from + step) % n;
    const card = cards[index];
    if (card && (card.state === "pending" || card.state === "skipped")) {
      return index;
    }
  }
  return -1;
}

function withCard(state: AppState, index: number, card: ReviewCard): ReviewCard[] {
  const cards = state.cards.slice();
  cards[index] = card;
  return cards;
}

export function applyAction(state: AppState, action: ReviewAction): ActionResult {
  if (action === "accept" || action === "reject") {
    const card = state.cursor >= 0 ? state.cards[state.cursor] : undefined;
    if (!card) {
      return { state, submissions: [] };
    }
    const cards = withCard(state, state.cursor, { ...card, state: action });
    return {
      state: {
        ...state,
        cards,
        cursor: nextUndecided(cards, state.cursor),
        history: [...state.history, state.cursor],
      },
      submissions: [
        {
          unit: card.unit,
          code: card.code,
          decision: action,
          reviewer: state.reviewer,
        },
      ],
    };
  }
  if (action === "skip") {
    const card = state.cursor >= 0 ? state.cards[state.cursor] : undefined;
    if (!card) {
      return { state, submissions: [] };
    }
    const cards = withCard(state, state.cursor, { ...card, state: "skipped" });
    return {
      state: { ...state, cards, cursor: nextUndecided(cards, state.cursor) },
      submissions: [],
    };
  }
  if (action === "undo") {
    const index = state.history[state.history.length - 1];
    const card = index === undefined ? undefined : state.cards[index];
    if (index === undefined || !card) {
      return { state, submissions: [] };
    }
    const cards = withCard(state, index, { ...card, state: "pending" });
    return {
      state: {
        ...state,
        cards,
        cursor: index,
        history: state.history.slice(0, -1),
      },
      submissions: [
        {
          unit: card.unit,
          code: card.code,
          decision: "pending",
          reviewer: state.reviewer,
        },
      ],
    };
  }
  if (action === "expand") {
    const card = state.cursor >= 0 ? state.cards[state.cursor] : undefined;
    if (!card) {
      return { state, submissions: [] };
    }
    const cards = withCard(state, state.cursor, { ...card, expanded: !card.expanded });
    return { state: { ...state, cards }, submissions: [] };
  }
  // retrain and resync talk to the server; they do not change review state here
  return { state, submissions: [] };
}

/** Record the server's sequence number on the acknowledged card. */
export function reconcile(state: AppState, ack: DecisionAck): AppState {
  const index = state.cards.findIndex((card) => sameUnit(card.unit, ack.unit));
  if (index < 0) {
    return state;
  }
  const card = state.cards[index];
  if (!card) {
    return state;
  }
  return {
    ...state,
    cards: withCard(state, index, { ...card, seq: ack.seq }),
    conflict: null,
  };
}

export function applyMetrics(state: AppState, metrics: MetricsPayload): AppState {
  return { ...state, metrics };
}

export function markOffline(state: AppState, offline: boolean): AppState {
  return state.offline === offline ? state : { ...state, offline };
}

export function markConflict(state: AppState, conflict: string | null): AppState {
  return { ...state, conflict };
}

export function setJob(state: AppState, job: AppState["job"]): AppState {
  return { ...state, job };
}

export function decidedCount(state: AppState): number {
  return state.cards.filter((c) => c.state === "accept" || c.state === "reject").length;
}
