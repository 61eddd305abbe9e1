// Turn rendering: answer text with citation markers that link only to
// passage cards present in the same turn, plus collapsible evidence.
// Everything rendered originates from API response fields.

import type { EvidenceJson, PassageJson, TurnJson } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

export function passageCardId(turnIndex: number, passageNumber: number): string {
  return `p-${turnIndex}-${passageNumber}`;
}

const SOURCE_MARK = /\(Source:\s*([^)]*)\)/g;
const DATA_MARK = /\(Data:\s*([^)]*)\)/g;

/**
 * Answer text -> HTML. (Source: title) markers become anchors into this
 * turn's passage cards; titles without a matching card render as inert
 * unresolved spans, never links.
 */
export function renderAnswerHtml(turn: TurnJson): string {
  const titleToNumber = new Map<string, number>();
  turn.evidence.passages.forEach((passage, i) => {
    if (!titleToNumber.has(passage.title)) {
      titleToNumber.set(passage.title, i + 1);
    }
  });
  // Substitution runs on escaped text; captured titles are unescaped
  // before the passage lookup so entity-bearing titles still resolve.
  let html = escapeHtml(turn.answer.text);
  html = html.replace(SOURCE_MARK, (_match, rawTitle: string) => {
    const title = rawTitle.trim();
    const n = titleToNumber.get(unescapeEntities(title));
    if (n === undefined) {
      return `<span class="citation-unresolved" title="no matching passage">(Source: ${title})</span>`;
    }
    return `<a class="citation" href="#${passageCardId(turn.index, n)}">[${n}]</a>`;
  });
  html = html.replace(DATA_MARK, (_match, label: string) => {
    return `<span class="data-citation">(Data: ${label})</span>`;
  });
  return `<p class="answer">${html}</p>`;
}

function unescapeEntities(text: string): string {
  return text
    .replace(/&amp;/g, "&")
    .replace(/&lt;/g, "<")
    .replace(/&gt;/g, ">")
    .replace(/&quot;/g, '"')
    .replace(/&#39;/g, "'");
}

function renderRowTable(evidence: EvidenceJson): string {
  const table = evidence.table;
  if (evidence.table_error !== null) {
    return `<p class="leg-error">SQL leg failed: ${escapeHtml(evidence.table_error)}</p>`;
  }
  if (table.rows.length === 0) {
    return `<p class="no-rows">no rows</p>`;
  }
  const head = table.columns
    .map((c) => `<th>${escapeHtml(c)}</th>`)
    .join("");
  const body = table.rows
    .map(
      (row) =>
        `<tr>${row.map((v) => `<td>${escapeHtml(formatCell(v))}</td>`).join("")}</tr>`,
    )
    .join("");
  const truncation = table.truncated
    ? `<p class="truncated">truncated: showing ${table.rows.length} of ~${table.total_row_estimate} rows</p>`
    : "";
  return `<table class="rows"><thead><tr>${head}</tr></thead><tbody>${body}</tbody></table>${truncation}`;
}

function formatCell(value: unknown): string {
  if (value === null || value === undefined) return "NULL";
  return String(value);
}

function renderPassageCard(
  turnIndex: number,
  passage: PassageJson,
  number: number,
): string {
  const section = passage.section
    ? `<span class="passage-section">${escapeHtml(passage.section)}</span>`
    : "";
  return [
    `<article class="passage-card" id="${passageCardId(turnIndex, number)}">`,
    `<header><span class="passage-number">[${number}]</span> ` +
      `<strong class="passage-title">${escapeHtml(passage.title)}</strong> ` +
      `<span class="passage-page">page ${passage.page}</span> ` +
      `<span class="passage-score">score ${passage.score.toFixed(4)}</span> ` +
      section +
      `</header>`,
    `<p class="passage-text">${escapeHtml(passage.text)}</p>`,
    `</article>`,
  ].join("");
}

function renderPassages(turn: TurnJson): string {
  const evidence = turn.evidence;
  if (evidence.passages_error !== null) {
    return `<p class="leg-error">search leg failed: ${escapeHtml(evidence.passages_error)}</p>`;
  }
  if (evidence.passages.length === 0) {
    return `<p class="no-passages">no passages</p>`;
  }
  return evidence.passages
    .map((p, i) => renderPassageCard(turn.index, p, i + 1))
    .join("");
}

function renderWarnings(turn: TurnJson): string {
  const badges: string[] = [];
  for (const warning of turn.answer.warnings) {
    badges.push(`<span class="badge warning">${escapeHtml(warning)}</span>`);
  }
  if (turn.evidence.table.truncated) {
    badges.push(`<span class="badge truncation">rows truncated</span>`);
  }
  if (turn.evidence.table_error !== null) {
    badges.push(`<span class="badge leg-failed">data leg failed</span>`);
  }
  if (turn.evidence.passages_error !== null) {
    badges.push(`<span class="badge leg-failed">search leg failed</span>`);
  }
  if (turn.plan.fallback) {
    badges.push(`<span class="badge fallback">fallback plan</span>`);
  }
  return badges.length > 0 ? `<div class="warnings">${badges.join("")}</div>` : "";
}

/** One turn: question, answer with citation links, collapsible evidence. */
export function renderTurn(turn: TurnJson): string {
  return [
    `<section class="turn" data-turn="${turn.index}">`,
    `<h2 class="question">${escapeHtml(turn.question)}</h2>`,
    renderWarnings(turn),
    renderAnswerHtml(turn),
    `<details class="evidence">`,
    `<summary>evidence</summary>`,
    `<h3>SQL</h3><pre class="sql">${escapeHtml(turn.plan.sql)}</pre>`,
    `<h3>literature query</h3><p class="lit-query">${escapeHtml(turn.plan.lit_query)}</p>`,
    `<h3>rows</h3>`,
    renderRowTable(turn.evidence),
    `<h3>passages</h3>`,
    renderPassages(turn),
    `</details>`,
    `</section>`,
  ].join("\n");
}

/** Citation hygiene check used by tests and the app shell: every citation
 * href must resolve to a passage card rendered in the same turn. */
export function extractCitationTargets(html: string): {
  hrefs: string[];
  cardIds: string[];
} {
  const hrefs = [...html.matchAll(/href="#(p-\d+-\d+)"/g)].map((m) => m[1]!);
  const cardIds = [...html.matchAll(/id="(p-\d+-\d+)"/g)].map((m) => m[1]!);
  return { hrefs, cardIds };
}
