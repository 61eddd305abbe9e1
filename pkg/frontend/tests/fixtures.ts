import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import type { AskResponse, HealthJson, TranscriptJson } from "../src/types.js";

const here = dirname(fileURLToPath(import.meta.url));

function read(name: string): string {
  return readFileSync(join(here, "fixtures", name), "utf-8");
}

export const askTurn = JSON.parse(read("ask_turn.json")) as AskResponse;
export const askTurn2 = JSON.parse(read("ask_turn2.json")) as AskResponse;
export const transcript = JSON.parse(read("transcript.json")) as TranscriptJson;
export const exportText = read("export.txt");
export const health = JSON.parse(read("health.json")) as HealthJson;

export function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

export function textResponse(body: string, status = 200): Response {
  return new Response(body, {
    status,
    headers: { "Content-Type": "text/plain" },
  });
}
