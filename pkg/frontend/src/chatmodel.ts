// Chat-pane model: maps a /chat response onto the widgets around it, most
// importantly auto-filling the table-search form from the parsed predicates
// and splitting the synonym clause into the grey info box.

import type { ChatResponse } from "./api.js";

export type FormPredicate = { attribute: string; value: string };

export function autofillPredicates(resp: ChatResponse): FormPredicate[] {
  return resp.parsed.structural.predicates.map((p) => ({
    attribute: p.attribute_query,
    value: p.value && p.value.number !== null && p.value.number !== undefined
      ? String(p.value.number)
      : "",
  }));
}

export function synonymsBoxText(resp: ChatResponse): string {
  // the textual part carries the original question plus an appended
  // "synonyms:" clause; only the clause belongs in the grey box
  const textual = resp.parsed.textual;
  const idx = textual.indexOf("synonyms:");
  if (idx < 0) return "";
  return textual.slice(idx);
}

export type SourceLink = { sourceId: string; kind: "table" | "pub" | "kg"; ref: string };

export function sourceLinks(resp: ChatResponse): SourceLink[] {
  return resp.exchange.context_blocks.map((b) => {
    const idx = b.source_id.indexOf(":");
    return {
      sourceId: b.source_id,
      kind: b.source_id.slice(0, idx) as SourceLink["kind"],
      ref: b.source_id.slice(idx + 1),
    };
  });
}

export function narrativeState(resp: ChatResponse, httpStatus: number): {
  text: string;
  unavailable: boolean;
} {
  if (httpStatus === 503 || resp.exchange.status === "LlmUnavailable") {
    return { text: "model unavailable", unavailable: true };
  }
  return { text: resp.narrative, unavailable: false };
}
