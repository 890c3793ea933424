export type UnitKey = [string, number];

export type Decision = "accept" | "reject" | "pending";

export type CardState = "pending" | "accept" | "reject" | "skipped";

export interface QueueItem {
  unit: UnitKey;
  text: string;
  context: string[];
  score: number;
}

export interface QueuePage {
  code: string;
  version: number;
  total: number;
  pending: number;
  items: QueueItem[];
}

export interface DecisionAck {
  seq: number;
  unit: UnitKey;
  code: string;
  decision: Decision;
  reviewer: string;
  appended: boolean;
}

export interface Submission {
  unit: UnitKey;
  code: string;
  decision: Decision;
  reviewer: string;
}

export interface Progress {
  total: number;
  accepted: number;
  rejected: number;
  pending: number;
}

export interface ReliabilityReport {
  precision: number;
  recall: number;
  f1: number;
  alpha: number | null;
  tp: number;
  fp: number;
  fn: number;
  tn: number;
  notes: string[];
}

export interface MetricsPayload {
  code: string;
  queue_version: number;
  progress: Progress;
  report: ReliabilityReport | null;
}

export interface ProjectInfo {
  project: string;
  meta: Record<string, unknown> | null;
  queue: { code: string; version: number } | null;
  decisions: number;
}

export interface JobStatus {
  id: string;
  status: "running" | "done" | "error";
  code: string;
  result?: Record<string, unknown>;
  error?: string;
}

/** Client-side mirror of one queue item plus its review progress. */
export interface ReviewCard {
  unit: UnitKey;
  code: string;
  text: string;
  context: string[];
  score: number;
  state: CardState;
  seq: number | null;
  expanded: boolean;
}
