// Browser app shell: session bootstrap, ask flow, filter panel wiring,
// transcript download. All rendering goes through render.ts so the DOM
// only ever contains content sourced from API responses.

import { ApiClient, ApiError, AskGate } from "./api.js";
import {
  FAMILY_NAMES,
  FilterPanelState,
  emptyPanel,
  isEmptyFilters,
  panelToFilters,
  validatePanel,
} from "./filters.js";
import { renderTurn } from "./render.js";

interface Elements {
  turns: HTMLElement;
  question: HTMLInputElement;
  submit: HTMLButtonElement;
  errors: HTMLElement;
  banner: HTMLElement;
  tsMin: HTMLInputElement;
  tsMax: HTMLInputElement;
  coords: HTMLInputElement;
  qualifier: HTMLInputElement;
  familyBoxes: Map<string, HTMLInputElement>;
  download: HTMLButtonElement;
  pending: HTMLElement;
}

function grab(root: Document): Elements {
  const byId = <T extends HTMLElement>(id: string): T => {
    const el = root.getElementById(id);
    if (!el) throw new Error(`missing element #${id}`);
    return el as T;
  };
  const familyBoxes = new Map<string, HTMLInputElement>();
  for (const name of FAMILY_NAMES) {
    familyBoxes.set(name, byId<HTMLInputElement>(`family-${name}`));
  }
  return {
    turns: byId("turns"),
    question: byId<HTMLInputElement>("question"),
    submit: byId<HTMLButtonElement>("submit"),
    errors: byId("filter-errors"),
    banner: byId("banner"),
    tsMin: byId<HTMLInputElement>("ts-min"),
    tsMax: byId<HTMLInputElement>("ts-max"),
    coords: byId<HTMLInputElement>("coords"),
    qualifier: byId<HTMLInputElement>("qualifier"),
    familyBoxes,
    download: byId<HTMLButtonElement>("download"),
    pending: byId("pending"),
  };
}

function readPanel(els: Elements): FilterPanelState {
  const state = emptyPanel();
  state.tsMin = els.tsMin.value;
  state.tsMax = els.tsMax.value;
  state.coordsText = els.coords.value;
  state.qualifier = els.qualifier.value;
  for (const [name, box] of els.familyBoxes) {
    state.families[name as keyof typeof state.families] = box.checked;
  }
  return state;
}

export async function startApp(doc: Document): Promise<void> {
  const els = grab(doc);
  const api = new ApiClient("");
  const gate = new AskGate();
  const sessionId = await api.createSession();

  const refreshSubmit = () => {
    const problems = validatePanel(readPanel(els));
    const empty = els.question.value.trim() === "";
    els.errors.textContent = problems.join("; ");
    els.submit.disabled = problems.length > 0 || empty || gate.isBusy(sessionId);
  };

  const inputs: HTMLInputElement[] = [
    els.question,
    els.tsMin,
    els.tsMax,
    els.coords,
    els.qualifier,
    ...els.familyBoxes.values(),
  ];
  for (const input of inputs) {
    input.addEventListener("input", refreshSubmit);
    input.addEventListener("change", refreshSubmit);
  }
  refreshSubmit();

  els.submit.addEventListener("click", async () => {
    const question = els.question.value.trim();
    if (!question || !gate.tryAcquire(sessionId)) return;
    els.banner.textContent = "";
    els.pending.hidden = false;
    refreshSubmit();
    try {
      const filters = panelToFilters(readPanel(els));
      const response = await api.ask(
        sessionId,
        question,
        isEmptyFilters(filters) ? null : filters,
      );
      els.turns.insertAdjacentHTML("beforeend", renderTurn(response.turn));
      els.question.value = "";
    } catch (error) {
      if (error instanceof ApiError) {
        els.banner.textContent = error.retryable
          ? `service unavailable, try again: ${error.reason}`
          : `rejected: ${error.reason}`;
      } else {
        els.banner.textContent = String(error);
      }
    } finally {
      els.pending.hidden = true;
      gate.release(sessionId);
      refreshSubmit();
    }
  });

  els.download.addEventListener("click", async () => {
    try {
      const text = await api.exportTranscript(sessionId);
      const blob = new Blob([text], { type: "text/plain" });
      const link = doc.createElement("a");
      link.href = URL.createObjectURL(blob);
      link.download = `transcript-${sessionId}.txt`;
      link.click();
      URL.revokeObjectURL(link.href);
    } catch (error) {
      els.banner.textContent = `download failed, try again: ${String(error)}`;
    }
  });
}
