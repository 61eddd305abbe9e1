// Filter panel state and its exact mapping onto the server's filters JSON.

import type { FiltersJson } from "./types.js";

export const FAMILY_NAMES = [
  "eg",
  "a1g_d",
  "a1g_c",
  "u1",
  "d",
  "u2",
  "u3",
  "g",
] as const;

export type FamilyName = (typeof FAMILY_NAMES)[number];

export interface FilterPanelState {
  tsMin: string; // empty string = unbounded
  tsMax: string;
  coordsText: string; // "0,0; 15,15"
  families: Record<FamilyName, boolean>;
  qualifier: string;
}

export function emptyPanel(): FilterPanelState {
  const families = Object.fromEntries(
    FAMILY_NAMES.map((name) => [name, false]),
  ) as Record<FamilyName, boolean>;
  return { tsMin: "", tsMax: "", coordsText: "", families, qualifier: "" };
}

const COORD_PAIR = /^\s*(\d+)\s*,\s*(\d+)\s*$/;

function parseCoords(text: string): [number, number][] | string {
  const trimmed = text.trim();
  if (!trimmed) return [];
  const pairs: [number, number][] = [];
  for (const part of trimmed.split(";")) {
    const match = COORD_PAIR.exec(part);
    if (!match) return `bad coordinate entry: "${part.trim()}"`;
    pairs.push([Number(match[1]), Number(match[2])]);
  }
  return pairs;
}

/** Returns a list of problems; an empty list means the panel can submit. */
export function validatePanel(state: FilterPanelState): string[] {
  const problems: string[] = [];
  const hasMin = state.tsMin.trim() !== "";
  const hasMax = state.tsMax.trim() !== "";
  if (hasMin !== hasMax) {
    problems.push("set both timestep bounds or neither");
  }
  if (hasMin && hasMax) {
    const lo = Number(state.tsMin);
    const hi = Number(state.tsMax);
    if (!Number.isInteger(lo) || !Number.isInteger(hi) || lo < 0 || hi < 0) {
      problems.push("timestep bounds must be non-negative integers");
    } else if (lo > hi) {
      problems.push("timestep range is reversed");
    }
  }
  const coords = parseCoords(state.coordsText);
  if (typeof coords === "string") problems.push(coords);
  return problems;
}

/** Panel -> server filters JSON. Only call with a valid panel. */
export function panelToFilters(state: FilterPanelState): FiltersJson {
  const problems = validatePanel(state);
  if (problems.length > 0) {
    throw new Error(`invalid filter panel: ${problems.join("; ")}`);
  }
  const coords = parseCoords(state.coordsText) as [number, number][];
  const families = FAMILY_NAMES.filter((name) => state.families[name]);
  const qualifier = state.qualifier.trim();
  return {
    ts_range:
      state.tsMin.trim() !== ""
        ? [Number(state.tsMin), Number(state.tsMax)]
        : null,
    coords: coords.length > 0 ? coords : null,
    families: families.length > 0 ? families : null,
    qualifiers: qualifier ? [qualifier] : null,
  };
}

/** Server filters JSON -> panel (exact mirror of panelToFilters). */
export function filtersToPanel(filters: FiltersJson): FilterPanelState {
  const state = emptyPanel();
  if (filters.ts_range) {
    state.tsMin = String(filters.ts_range[0]);
    state.tsMax = String(filters.ts_range[1]);
  }
  if (filters.coords && filters.coords.length > 0) {
    state.coordsText = filters.coords.map(([x, y]) => `${x},${y}`).join("; ");
  }
  for (const name of filters.families ?? []) {
    if ((FAMILY_NAMES as readonly string[]).includes(name)) {
      state.families[name as FamilyName] = true;
    }
  }
  if (filters.qualifiers && filters.qualifiers.length > 0) {
    state.qualifier = filters.qualifiers.join("; ");
  }
  return state;
}

export function isEmptyFilters(filters: FiltersJson): boolean {
  return (
    filters.ts_range === null &&
    filters.coords === null &&
    filters.families === null &&
    filters.qualifiers === null
  );
}
