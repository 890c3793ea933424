import type { AppState } from "./state";
import type { MetricsPayload, ReviewCard } from "./types";

export const ALPHA_BAR = 0.8;

export function escapeHtml(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

function fixed(value: number | null | undefined, digits = 2): string {
  return value === null || value === undefined ? "–" : value.toFixed(digits);
}

/** Stats strip; every number here comes straight from /metrics. */
export function renderStats(metrics: MetricsPayload | null): string {
  if (!metrics) {
    return '<section class="stats"><span class="badge na">no metrics yet</span></section>';
  }
  const { progress, report } = metrics;
  const judged = progress.accepted + progress.rejected;
  const acceptRate = judged > 0 ? progress.accepted / judged : null;
  const alpha = report?.alpha ?? null;
  const alphaClass = alpha === null ? "na" : alpha >= ALPHA_BAR ? "ok" : "low";
  const parts = [
    `<span class="badge pending">pending ${progress.pending}</span>`,
    `<span class="badge">accept rate ${fixed(acceptRate)}</span>`,
    `<span class="badge precision">precision ${fixed(report?.precision ?? null)}</span>`,
    `<span class="badge alpha ${alphaClass}">α ${fixed(alpha)} (bar ${ALPHA_BAR.toFixed(2)})</span>`,
    `<span class="badge">queue v${metrics.queue_version}</span>`,
  ];
  return `<section class="stats">${parts.join("")}</section>`;
}

export function renderBanner(state: AppState): string {
  if (state.conflict) {
    return `<div class="banner conflict">out of sync: ${escapeHtml(state.conflict)}; press z to reload the queue</div>`;
  }
  if (state.offline) {
    return '<div class="banner offline">server unreachable; decisions are buffered and will flush in order</div>';
  }
  return "";
}

function renderContext(card: ReviewCard): string {
  if (card.context.length === 0) {
    return "";
  }
  if (!card.expanded) {
    return `<p class="context-hint">x to show ${card.context.length} context paragraph(s)</p>`;
  }
  const paragraphs = card.context
    .map((text) => `<p class="context">${escapeHtml(text)}</p>`)
    .join("");
  return `<div class="context-block">${paragraphs}</div>`;
}

export function renderCard(card: ReviewCard, position: number, total: number): string {
  return [
    `<article class="card state-${card.state}">`,
    `<header>unit ${escapeHtml(card.unit[0])}:${card.unit[1]}`,
    ` · score ${card.score.toFixed(3)} · ${position} of ${total}</header>`,
    `<blockquote>${escapeHtml(card.text)}</blockquote>`,
    renderContext(card),
    "</article>",
  ].join("");
}

function renderJob(state: AppState): string {
  if (!state.job) {
    return '<button class="retrain" data-action="retrain">retrain (t)</button>';
  }
  return `<span class="job">retrain ${escapeHtml(state.job.id)}: ${escapeHtml(state.job.status)}</span>`;
}

export function renderApp(state: AppState): string {
  const card = state.cursor >= 0 ? state.cards[state.cursor] : undefined;
  const body = card
    ? renderCard(card, state.cursor + 1, state.cards.length)
    : '<p class="done">queue reviewed: every card has a decision</p>';
  return [
    "<header class=\"top\">",
    `<h1>${escapeHtml(state.project)} · ${escapeHtml(state.code)}</h1>`,
    `<span class="reviewer">reviewer: ${escapeHtml(state.reviewer)}</span>`,
    renderJob(state),
    "</header>",
    renderStats(state.metrics),
    renderBanner(state),
    `<main>${body}</main>`,
    '<footer class="help">a accept · r reject · s skip · u undo · x context · t retrain · z resync</footer>',
  ].join("");
}
