import { describe, expect, it } from "vitest";

import {
  escapeHtml,
  extractCitationTargets,
  passageCardId,
  renderAnswerHtml,
  renderTurn,
} from "../src/render.js";
import type { TurnJson } from "../src/types.js";
import { askTurn, askTurn2 } from "./fixtures.js";

const turn = askTurn.turn;

describe("renderTurn against the recorded ask fixture", () => {
  const html = renderTurn(turn);

  it("renders the question and answer text", () => {
    expect(html).toContain(escapeHtml(turn.question));
    // answer body minus citation markers still present
    expect(html).toContain("The structured query results are summarized");
  });

  it("renders the SQL verbatim inside the evidence panel", () => {
    expect(html).toContain(`<pre class="sql">${escapeHtml(turn.plan.sql)}</pre>`);
  });

  it("renders one row table cell per value", () => {
    for (const row of turn.evidence.table.rows) {
      for (const value of row) {
        expect(html).toContain(`<td>${escapeHtml(String(value))}</td>`);
      }
    }
  });

  it("renders one passage card per passage with title and page", () => {
    turn.evidence.passages.forEach((passage, i) => {
      expect(html).toContain(`id="${passageCardId(turn.index, i + 1)}"`);
      expect(html).toContain(escapeHtml(passage.title));
      expect(html).toContain(`page ${passage.page}`);
    });
  });

  it("citation links resolve only to passage cards present in this turn", () => {
    const { hrefs, cardIds } = extractCitationTargets(html);
    expect(hrefs.length).toBeGreaterThan(0);
    for (const href of hrefs) {
      expect(cardIds).toContain(href);
    }
  });

  it("evidence panel is collapsible and single", () => {
    expect(html.match(/<details class="evidence">/g)?.length).toBe(1);
    expect(html).toContain("<summary>evidence</summary>");
  });

  it("second fixture turn renders independently with its own card ids", () => {
    const html2 = renderTurn(askTurn2.turn);
    const first = extractCitationTargets(html);
    const second = extractCitationTargets(html2);
    for (const id of second.cardIds) {
      expect(first.cardIds).not.toContain(id);
    }
  });
});

describe("citation resolution edge cases", () => {
  it("a cited title missing from the passages renders as a non-link", () => {
    const altered: TurnJson = structuredClone(turn);
    altered.answer.text += " Extra claim (Source: Fabricated Paper).";
    const html = renderAnswerHtml(altered);
    expect(html).toContain("citation-unresolved");
    expect(html).toContain("Fabricated Paper");
    const { hrefs, cardIds } = extractCitationTargets(renderTurn(altered));
    for (const href of hrefs) {
      expect(cardIds).toContain(href);
    }
  });

  it("warning badges appear when the server flags ungrounded citations", () => {
    const altered: TurnJson = structuredClone(turn);
    altered.answer.warnings = ["ungrounded citation stripped: 'Fabricated'"];
    const html = renderTurn(altered);
    expect(html).toContain('class="badge warning"');
    expect(html).toContain("ungrounded citation stripped");
  });

  it("truncated tables get a truncation badge and marker", () => {
    const altered: TurnJson = structuredClone(turn);
    altered.evidence.table.truncated = true;
    altered.evidence.table.total_row_estimate = 999;
    const html = renderTurn(altered);
    expect(html).toContain("rows truncated");
    expect(html).toContain("of ~999 rows");
  });

  it("failed legs render error markers instead of fabricated content", () => {
    const altered: TurnJson = structuredClone(turn);
    altered.evidence.table_error = "store exploded";
    altered.evidence.table.rows = [];
    const html = renderTurn(altered);
    expect(html).toContain("SQL leg failed: store exploded");
    expect(html).toContain('class="badge leg-failed"');
  });

  it("escapes hostile content from every rendered field", () => {
    const altered: TurnJson = structuredClone(turn);
    altered.question = '<script>alert("q")</script>';
    altered.answer.text = '<img src=x onerror="boom"> (Data: rows)';
    altered.plan.sql = "SELECT '<b>'";
    const html = renderTurn(altered);
    expect(html).not.toContain("<script>");
    expect(html).not.toContain("<img");
    expect(html).toContain("&lt;script&gt;");
  });
});
